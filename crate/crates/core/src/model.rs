//! Discrete Bayesian networks: variables, conditional probability tables,
//! parameter counting and forward sampling.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::{Dag, GraphError};
use crate::rng::stream_rng;

/// Largest joint state space [`DiscreteBayesNet::exact_joint`] will enumerate.
pub const MAX_JOINT_STATES: u64 = 1_000_000;

const ROW_SUM_EXACT: f64 = 1e-9;
const ROW_SUM_REPAIRABLE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("variable `{0}` has no levels")]
    NoLevels(String),
    #[error("variable `{name}` needs at least two levels, found {found}")]
    TooFewLevels { name: String, found: usize },
    #[error("variable `{name}` repeats level `{level}`")]
    DuplicateLevel { name: String, level: String },
    #[error("{expected} variables expected, found {found}")]
    VariableCount { expected: usize, found: usize },
    #[error("variable `{0}` does not match the graph node of the same position")]
    VariableName(String),
    #[error("table for `{0}` declares a parent set different from the graph")]
    ParentMismatch(String),
    #[error("table for `{name}` must have {expected} rows, found {found}")]
    RowCount { name: String, expected: usize, found: usize },
    #[error("table for `{name}` row {row} must have {expected} entries, found {found}")]
    RowWidth { name: String, row: usize, expected: usize, found: usize },
    #[error("table for `{name}` row {row} has a negative or non-finite entry")]
    BadProbability { name: String, row: usize },
    #[error("table for `{name}` row {row} sums to {sum}")]
    RowSum { name: String, row: usize, sum: f64 },
    #[error("joint state space has {0} configurations (limit {MAX_JOINT_STATES})")]
    StateSpaceTooLarge(u64),
    #[error("sample size must be at least 1")]
    EmptySample,
}

/// A categorical variable and its ordered level labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    name: String,
    levels: Vec<String>,
}

impl Variable {
    /// Levels must be unique and non-empty. Networks additionally require two
    /// or more; data columns inferred from a CSV may be constant.
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        if levels.is_empty() {
            return Err(ModelError::NoLevels(name));
        }
        for (i, level) in levels.iter().enumerate() {
            if levels[..i].contains(level) {
                return Err(ModelError::DuplicateLevel {
                    name,
                    level: level.clone(),
                });
            }
        }
        Ok(Self { name, levels })
    }

    /// Variable with levels `"0"`, `"1"`, ..., `"r-1"`.
    pub fn indexed(name: impl Into<String>, cardinality: usize) -> Self {
        Self::new(name, (0..cardinality).map(|i| i.to_string())).expect("cardinality >= 1")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn cardinality(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }
}

/// Conditional probability table of one node.
///
/// Rows enumerate the joint parent configurations in row-major order over
/// `parents` as listed (the last parent varies fastest); columns are child levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub child: usize,
    pub parents: Vec<usize>,
    pub table: Vec<Vec<f64>>,
}

impl Cpt {
    /// Row of the table matching the parent values found in `assignment`.
    pub fn row_index(&self, assignment: &[u32], cardinalities: &[usize]) -> usize {
        self.parents.iter().fold(0usize, |acc, &p| {
            acc * cardinalities[p] + assignment[p] as usize
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBayesNet {
    dag: Dag,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
}

impl DiscreteBayesNet {
    /// Validates shapes and probabilities. Rows whose sum is off by more than
    /// 1e-9 but at most 1e-6 are renormalized with a warning; larger errors are
    /// rejected.
    pub fn new(dag: Dag, variables: Vec<Variable>, mut cpts: Vec<Cpt>) -> Result<Self, ModelError> {
        let n = dag.node_count();
        if variables.len() != n {
            return Err(ModelError::VariableCount { expected: n, found: variables.len() });
        }
        if cpts.len() != n {
            return Err(ModelError::VariableCount { expected: n, found: cpts.len() });
        }
        for (i, var) in variables.iter().enumerate() {
            if var.name() != dag.nodes().name(i) {
                return Err(ModelError::VariableName(var.name().to_string()));
            }
            if var.cardinality() < 2 {
                return Err(ModelError::TooFewLevels {
                    name: var.name().to_string(),
                    found: var.cardinality(),
                });
            }
        }
        cpts.sort_by_key(|c| c.child);
        for (i, cpt) in cpts.iter_mut().enumerate() {
            let name = variables[i].name().to_string();
            if cpt.child != i {
                return Err(ModelError::ParentMismatch(name));
            }
            let mut declared = cpt.parents.clone();
            declared.sort_unstable();
            if declared != dag.parents(i) {
                return Err(ModelError::ParentMismatch(name));
            }
            let rows: usize = cpt.parents.iter().map(|&p| variables[p].cardinality()).product();
            if cpt.table.len() != rows {
                return Err(ModelError::RowCount { name, expected: rows, found: cpt.table.len() });
            }
            let width = variables[i].cardinality();
            for (row, probs) in cpt.table.iter_mut().enumerate() {
                if probs.len() != width {
                    return Err(ModelError::RowWidth {
                        name,
                        row,
                        expected: width,
                        found: probs.len(),
                    });
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(ModelError::BadProbability { name, row });
                }
                let sum: f64 = probs.iter().sum();
                let err = (sum - 1.0).abs();
                if err > ROW_SUM_REPAIRABLE {
                    return Err(ModelError::RowSum { name, row, sum });
                }
                if err > ROW_SUM_EXACT {
                    log::warn!("renormalizing row {row} of `{name}` (sum {sum})");
                    probs.iter_mut().for_each(|p| *p /= sum);
                }
            }
        }
        Ok(Self { dag, variables, cpts })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Free parameters: `sum_i (r_i - 1) * prod_{j in parents(i)} r_j`.
    pub fn parameter_count(&self) -> u64 {
        let card = self.cardinalities();
        (0..self.variables.len())
            .map(|i| {
                let q: u64 = self.dag.parents(i).iter().map(|&p| card[p] as u64).product();
                (card[i] as u64 - 1) * q
            })
            .sum()
    }

    /// Draws `n` i.i.d. rows in topological order. Each categorical draw
    /// inverts the CDF of its table row in level order.
    pub fn forward_sample(&self, n: usize, seed: u64) -> Result<Dataset, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptySample);
        }
        let card = self.cardinalities();
        let order = self.dag.topological_order();
        let width = self.variables.len();
        let mut columns = vec![Vec::with_capacity(n); width];
        let mut rng = stream_rng(seed);
        let mut row = vec![0u32; width];
        for _ in 0..n {
            for &node in &order {
                let cpt = &self.cpts[node];
                let probs = &cpt.table[cpt.row_index(&row, &card)];
                let u: f64 = rng.random();
                row[node] = draw_level(probs, u) as u32;
            }
            for (col, &v) in columns.iter_mut().zip(&row) {
                col.push(v);
            }
        }
        Ok(Dataset::new(self.variables.clone(), columns).expect("sampled levels are in range"))
    }

    /// Probability of every full configuration, enumerated with the first
    /// variable varying slowest.
    pub fn exact_joint(&self) -> Result<BTreeMap<Vec<u32>, f64>, ModelError> {
        let card = self.cardinalities();
        let states = card
            .iter()
            .try_fold(1u64, |acc, &r| acc.checked_mul(r as u64))
            .unwrap_or(u64::MAX);
        if states > MAX_JOINT_STATES {
            return Err(ModelError::StateSpaceTooLarge(states));
        }
        let mut out = BTreeMap::new();
        let mut config = vec![0u32; card.len()];
        for _ in 0..states {
            let p = self
                .cpts
                .iter()
                .map(|cpt| cpt.table[cpt.row_index(&config, &card)][config[cpt.child] as usize])
                .product();
            out.insert(config.clone(), p);
            // odometer increment, last variable fastest
            for i in (0..config.len()).rev() {
                config[i] += 1;
                if (config[i] as usize) < card[i] {
                    break;
                }
                config[i] = 0;
            }
        }
        Ok(out)
    }
}

fn draw_level(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeSet;

    fn chain_ternary() -> DiscreteBayesNet {
        let nodes = NodeSet::new(["A", "B", "C"]).unwrap();
        let dag = Dag::from_edges(nodes, &[(0, 1), (1, 2)]).unwrap();
        let vars = ["A", "B", "C"].map(|n| Variable::indexed(n, 3)).to_vec();
        let third = vec![1.0 / 3.0; 3];
        let cpts = vec![
            Cpt { child: 0, parents: vec![], table: vec![third.clone()] },
            Cpt { child: 1, parents: vec![0], table: vec![third.clone(); 3] },
            Cpt { child: 2, parents: vec![1], table: vec![third; 3] },
        ];
        DiscreteBayesNet::new(dag, vars, cpts).unwrap()
    }

    fn brute_force_free_cells(net: &DiscreteBayesNet) -> u64 {
        net.cpts()
            .iter()
            .map(|c| c.table.iter().map(|row| row.len() as u64 - 1).sum::<u64>())
            .sum()
    }

    #[test]
    fn parameter_counts() {
        let single = DiscreteBayesNet::new(
            Dag::empty(NodeSet::new(["A"]).unwrap()),
            vec![Variable::indexed("A", 2)],
            vec![Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] }],
        )
        .unwrap();
        assert_eq!(single.parameter_count(), 1);
        let chain = chain_ternary();
        assert_eq!(chain.parameter_count(), 14);
        assert_eq!(chain.parameter_count(), brute_force_free_cells(&chain));
    }

    #[test]
    fn deterministic_tables_give_constant_rows() {
        let nodes = NodeSet::new(["A", "B"]).unwrap();
        let dag = Dag::from_edges(nodes, &[(0, 1)]).unwrap();
        let net = DiscreteBayesNet::new(
            dag,
            vec![Variable::indexed("A", 2), Variable::indexed("B", 3)],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.0, 1.0]] },
                Cpt {
                    child: 1,
                    parents: vec![0],
                    table: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]],
                },
            ],
        )
        .unwrap();
        let data = net.forward_sample(500, 3).unwrap();
        assert!(data.column(0).iter().all(|&v| v == 1));
        assert!(data.column(1).iter().all(|&v| v == 2));
        let joint = net.exact_joint().unwrap();
        let certain: Vec<_> = joint.iter().filter(|(_, &p)| p > 0.0).collect();
        assert_eq!(certain.len(), 1);
        assert_eq!(certain[0], (&vec![1u32, 2], &1.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let net = chain_ternary();
        assert_eq!(net.forward_sample(300, 11).unwrap(), net.forward_sample(300, 11).unwrap());
        assert_ne!(net.forward_sample(300, 11).unwrap(), net.forward_sample(300, 12).unwrap());
        assert_eq!(net.forward_sample(0, 1), Err(ModelError::EmptySample));
    }

    #[test]
    fn independent_fair_coins() {
        let net = DiscreteBayesNet::new(
            Dag::empty(NodeSet::new(["A", "B"]).unwrap()),
            vec![Variable::indexed("A", 2), Variable::indexed("B", 2)],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![], table: vec![vec![0.5, 0.5]] },
            ],
        )
        .unwrap();
        let joint = net.exact_joint().unwrap();
        assert_eq!(joint.len(), 4);
        assert!(joint.values().all(|&p| p == 0.25));
    }

    #[test]
    fn row_sums_repaired_or_rejected() {
        let one = |row: Vec<f64>| {
            DiscreteBayesNet::new(
                Dag::empty(NodeSet::new(["A"]).unwrap()),
                vec![Variable::indexed("A", 2)],
                vec![Cpt { child: 0, parents: vec![], table: vec![row] }],
            )
        };
        let fixed = one(vec![0.5, 0.5000005]).unwrap();
        let row = &fixed.cpts()[0].table[0];
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(one(vec![0.5, 0.51]), Err(ModelError::RowSum { .. })));
        assert!(matches!(one(vec![1.5, -0.5]), Err(ModelError::BadProbability { .. })));
        assert!(matches!(one(vec![1.0]), Err(ModelError::RowWidth { .. })));
    }

    #[test]
    fn parent_mismatch_rejected() {
        let nodes = NodeSet::new(["A", "B"]).unwrap();
        let dag = Dag::from_edges(nodes, &[(0, 1)]).unwrap();
        let err = DiscreteBayesNet::new(
            dag,
            vec![Variable::indexed("A", 2), Variable::indexed("B", 2)],
            vec![
                Cpt { child: 0, parents: vec![], table: vec![vec![0.5, 0.5]] },
                Cpt { child: 1, parents: vec![], table: vec![vec![0.5, 0.5]] },
            ],
        );
        assert_eq!(err, Err(ModelError::ParentMismatch("B".into())));
    }

    #[test]
    fn state_space_limit() {
        let n = 21;
        let nodes = NodeSet::lettered(n);
        let vars: Vec<_> = (0..n).map(|i| Variable::indexed(nodes.name(i), 2)).collect();
        let cpts = (0..n)
            .map(|i| Cpt { child: i, parents: vec![], table: vec![vec![0.5, 0.5]] })
            .collect();
        let net = DiscreteBayesNet::new(Dag::empty(nodes), vars, cpts).unwrap();
        assert_eq!(net.exact_joint(), Err(ModelError::StateSpaceTooLarge(1 << 21)));
    }

    #[test]
    fn draw_level_inverts_cdf() {
        let p = [0.2, 0.0, 0.8];
        assert_eq!(draw_level(&p, 0.0), 0);
        assert_eq!(draw_level(&p, 0.19999), 0);
        assert_eq!(draw_level(&p, 0.2), 2);
        assert_eq!(draw_level(&[0.5, 0.5 - 1e-12], 0.9999999999999), 1);
    }
}
