#![allow(dead_code)]

use netavg::model::{Cpt, DiscreteBayesNet, Variable};
use netavg::{Dag, Dataset, NodeSet};

/// Binary chain `A -> B -> C` where each child copies its parent with
/// probability `keep`.
pub fn binary_chain(keep: f64) -> DiscreteBayesNet {
    let nodes = NodeSet::new(["A", "B", "C"]).unwrap();
    let dag = Dag::from_edges(nodes, &[(0, 1), (1, 2)]).unwrap();
    let copy = vec![vec![keep, 1.0 - keep], vec![1.0 - keep, keep]];
    DiscreteBayesNet::new(
        dag,
        ["A", "B", "C"].map(|n| Variable::indexed(n, 2)).to_vec(),
        vec![
            Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
            Cpt { child: 1, parents: vec![0], table: copy.clone() },
            Cpt { child: 2, parents: vec![1], table: copy },
        ],
    )
    .unwrap()
}

/// Two binary nodes, `A -> B`, copying with probability `keep`.
pub fn binary_pair(keep: f64) -> DiscreteBayesNet {
    let dag = Dag::from_edges(NodeSet::new(["A", "B"]).unwrap(), &[(0, 1)]).unwrap();
    DiscreteBayesNet::new(
        dag,
        vec![Variable::indexed("A", 2), Variable::indexed("B", 2)],
        vec![
            Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
            Cpt { child: 1, parents: vec![0], table: vec![vec![keep, 1.0 - keep], vec![1.0 - keep, keep]] },
        ],
    )
    .unwrap()
}

/// `width` independent fair binary columns.
pub fn independent_net(width: usize) -> DiscreteBayesNet {
    let names: Vec<String> = (0..width).map(|i| format!("X{i}")).collect();
    let dag = Dag::empty(NodeSet::new(names.clone()).unwrap());
    DiscreteBayesNet::new(
        dag,
        names.iter().map(|n| Variable::indexed(n.clone(), 2)).collect(),
        (0..width).map(|i| Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] }).collect(),
    )
    .unwrap()
}

pub fn sample(net: &DiscreteBayesNet, n: usize, seed: u64) -> Dataset {
    net.forward_sample(n, seed).unwrap()
}

/// All DAGs over `n` labelled nodes, by brute force over edge orientations.
pub fn all_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    let mut code = vec![0u8; pairs.len()];
    loop {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .zip(&code)
            .filter_map(|(&(a, b), &c)| match c {
                1 => Some((a, b)),
                2 => Some((b, a)),
                _ => None,
            })
            .collect();
        if let Ok(d) = Dag::from_edges(NodeSet::lettered(n), &edges) {
            out.push(d);
        }
        let Some(i) = code.iter().position(|&c| c < 2) else {
            return out;
        };
        code[i] += 1;
        for c in &mut code[..i] {
            *c = 0;
        }
    }
}
