use std::collections::{BTreeMap, BTreeSet};

use super::{check_input, subsets_by_size, Diagnostics, LearnError, LearnedStructure, LearnerConfig, Tester};
use crate::dataset::Dataset;
use crate::graph::{Dag, NodePair, NodeSet};

/// Markov blankets of every node, symmetrized with the AND rule.
pub fn markov_blankets(data: &Dataset, config: &LearnerConfig) -> Result<Vec<Vec<usize>>, LearnError> {
    check_input(data, config)?;
    let mut tester = Tester::new(data, config);
    symmetric_blankets(&mut tester)
}

pub fn iamb(data: &Dataset, config: &LearnerConfig) -> Result<LearnedStructure, LearnError> {
    check_input(data, config)?;
    let mut tester = Tester::new(data, config);
    let blankets = symmetric_blankets(&mut tester)?;
    let (neighbours, sepsets) = neighbourhoods(&mut tester, &blankets)?;
    let dag = orient(data, &blankets, &neighbours, &sepsets);
    Ok(LearnedStructure {
        dag,
        diagnostics: Diagnostics { tests: tester.calls, ..Diagnostics::default() },
    })
}

fn symmetric_blankets(tester: &mut Tester) -> Result<Vec<Vec<usize>>, LearnError> {
    let n = tester.data.n_cols();
    let raw = (0..n)
        .map(|t| blanket(tester, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((0..n)
        .map(|t| raw[t].iter().copied().filter(|&x| raw[x].contains(&t)).collect())
        .collect())
}

/// Grow: add the strongest association (smallest p-value, earliest index on
/// ties) while it is significant. Shrink: drop members independent of the
/// target given the rest of the blanket.
fn blanket(tester: &mut Tester, target: usize) -> Result<Vec<usize>, LearnError> {
    let n = tester.data.n_cols();
    let mut mb: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for x in (0..n).filter(|&x| x != target && !mb.contains(&x)) {
            let p = tester.run(target, x, &mb)?.p_value;
            if best.is_none_or(|(bp, _)| p < bp) {
                best = Some((p, x));
            }
        }
        match best {
            Some((p, x)) if p < tester.alpha => {
                let at = mb.binary_search(&x).unwrap_err();
                mb.insert(at, x);
            }
            _ => break,
        }
    }
    for x in mb.clone() {
        let rest: Vec<usize> = mb.iter().copied().filter(|&m| m != x).collect();
        if tester.independent(target, x, &rest)? {
            mb = rest;
        }
    }
    Ok(mb)
}

type Sepsets = BTreeMap<NodePair, Vec<usize>>;

/// Blanket members `y` of `x` are neighbours unless some subset of the smaller
/// of the two reduced blankets separates them.
fn neighbourhoods(
    tester: &mut Tester,
    blankets: &[Vec<usize>],
) -> Result<(BTreeSet<NodePair>, Sepsets), LearnError> {
    let mut adjacent = BTreeSet::new();
    let mut sepsets = Sepsets::new();
    for x in 0..blankets.len() {
        for &y in blankets[x].iter().filter(|&&y| y > x) {
            let bx: Vec<usize> = blankets[x].iter().copied().filter(|&v| v != y).collect();
            let by: Vec<usize> = blankets[y].iter().copied().filter(|&v| v != x).collect();
            let base = if by.len() < bx.len() { by } else { bx };
            let mut separator = None;
            for s in subsets_by_size(&base) {
                if tester.independent(x, y, &s)? {
                    separator = Some(s);
                    break;
                }
            }
            match separator {
                Some(s) => {
                    sepsets.insert(NodePair::new(x, y), s);
                }
                None => {
                    adjacent.insert(NodePair::new(x, y));
                }
            }
        }
    }
    Ok((adjacent, sepsets))
}

/// V-structures from separating sets, then Meek rules 1 and 2; edges still
/// undirected afterwards point from the lower to the higher index unless that
/// would close a cycle.
fn orient(
    data: &Dataset,
    blankets: &[Vec<usize>],
    skeleton: &BTreeSet<NodePair>,
    sepsets: &Sepsets,
) -> Dag {
    let n = data.n_cols();
    let nodes = NodeSet::new(data.names()).expect("dataset names are unique");
    let mut neighbours = vec![BTreeSet::new(); n];
    for p in skeleton {
        neighbours[p.lo()].insert(p.hi());
        neighbours[p.hi()].insert(p.lo());
    }
    let adjacent = |a: usize, b: usize| skeleton.contains(&NodePair::new(a, b));

    let mut directed = Dag::empty(nodes);
    let mut undirected = skeleton.clone();

    // colliders x -> z <- y for spouses x, y separated without z
    for (z, around) in neighbours.iter().enumerate() {
        let nb: Vec<usize> = around.iter().copied().collect();
        for (i, &x) in nb.iter().enumerate() {
            for &y in &nb[i + 1..] {
                if adjacent(x, y) || !blankets[x].contains(&y) {
                    continue;
                }
                let Some(sep) = sepsets.get(&NodePair::new(x, y)) else {
                    continue;
                };
                if sep.contains(&z) {
                    continue;
                }
                let free = |a: usize| undirected.contains(&NodePair::new(a, z)) || directed.has_edge(a, z);
                if free(x) && free(y) && orient_pair(&mut directed, &mut undirected, x, z) {
                    orient_pair(&mut directed, &mut undirected, y, z);
                }
            }
        }
    }

    loop {
        let mut changed = false;
        for pair in undirected.clone() {
            for (a, b) in [(pair.lo(), pair.hi()), (pair.hi(), pair.lo())] {
                if !undirected.contains(&pair) {
                    break;
                }
                // rule 1: c -> a - b with c, b not adjacent
                let rule1 = directed.parents(a).iter().any(|&c| c != b && !adjacent(c, b));
                // rule 2: a -> c -> b with a - b
                let rule2 = directed.children(a).iter().any(|&c| directed.has_edge(c, b));
                if (rule1 || rule2) && orient_pair(&mut directed, &mut undirected, a, b) {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    for pair in undirected.clone() {
        if !orient_pair(&mut directed, &mut undirected, pair.lo(), pair.hi()) {
            orient_pair(&mut directed, &mut undirected, pair.hi(), pair.lo());
        }
    }
    directed
}

/// Turns `a - b` into `a -> b` when that keeps the graph acyclic. An edge
/// already directed `a -> b` counts as success.
fn orient_pair(directed: &mut Dag, undirected: &mut BTreeSet<NodePair>, a: usize, b: usize) -> bool {
    if directed.has_edge(a, b) {
        return true;
    }
    let pair = NodePair::new(a, b);
    if !undirected.contains(&pair) || directed.reaches(b, a) {
        return false;
    }
    directed.add_edge(a, b).expect("checked acyclic");
    undirected.remove(&pair);
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;
    use crate::rng::{stream_rng, StreamRng};
    use rand::Rng;

    fn noisy(v: u32, keep: f64, rng: &mut StreamRng) -> u32 {
        if rng.random::<f64>() < keep { v } else { 1 - v }
    }

    #[test]
    fn collider_is_oriented() {
        // A -> C <- B with independent A, B
        let mut rng = stream_rng(17);
        let n = 3000;
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let c: Vec<u32> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| if rng.random::<f64>() < 0.9 { x + y } else { rng.random_range(0..3) })
            .collect();
        let vars = vec![Variable::indexed("A", 2), Variable::indexed("B", 2), Variable::indexed("C", 3)];
        let d = Dataset::new(vars, vec![a, b, c]).unwrap();
        let learned = iamb(&d, &LearnerConfig::default()).unwrap();
        let edges: Vec<_> = learned.dag.edges().collect();
        assert_eq!(edges, vec![(0, 2), (1, 2)]);
        assert!(learned.diagnostics.tests > 0);
    }

    #[test]
    fn undirected_leftovers_point_low_to_high() {
        let mut rng = stream_rng(2);
        let n = 2000;
        let a: Vec<u32> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<u32> = a.iter().map(|&v| noisy(v, 0.9, &mut rng)).collect();
        let vars = ["A", "B"].map(|s| Variable::indexed(s, 2)).to_vec();
        // declare B first so the learned edge must go B -> A canonically
        let d = Dataset::new(vec![vars[1].clone(), vars[0].clone()], vec![b, a]).unwrap();
        let learned = iamb(&d, &LearnerConfig::default()).unwrap();
        assert_eq!(learned.dag.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }
}
