//! BDeu network score.
//!
//! Local term for node `i` with parents `pa`:
//!
//! ```text
//! sum_j [ lnG(a_j) - lnG(a_j + n_j) + sum_k ( lnG(a_jk + n_jk) - lnG(a_jk) ) ]
//! a_j = ess / q_i,  a_jk = ess / (q_i r_i)
//! ```
//!
//! Parent configurations never observed contribute exactly zero, so only the
//! observed ones are visited.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::Dataset;
use crate::graph::Dag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreValue {
    pub log_score: f64,
    pub per_node: Vec<f64>,
}

/// Child-level counts for each observed parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCounts {
    /// `prod r_parent` over the declared levels (not just observed ones).
    pub parent_configs: f64,
    pub child_levels: usize,
    pub rows: BTreeMap<u64, Vec<u64>>,
}

impl FamilyCounts {
    pub fn from_data(data: &Dataset, child: usize, parents: &[usize]) -> Self {
        let r = data.cardinality(child);
        let keys = data.config_indices(parents);
        let mut rows: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for (&key, &v) in keys.iter().zip(data.column(child)) {
            rows.entry(key).or_insert_with(|| vec![0; r])[v as usize] += 1;
        }
        let parent_configs = parents.iter().map(|&p| data.cardinality(p) as f64).product();
        Self { parent_configs, child_levels: r, rows }
    }
}

pub fn bdeu_family_score(counts: &FamilyCounts, ess: f64) -> f64 {
    let q = counts.parent_configs;
    let r = counts.child_levels as f64;
    let a_j = ess / q;
    let a_jk = ess / (q * r);
    let ln_a_j = ln_gamma(a_j);
    let ln_a_jk = ln_gamma(a_jk);
    let mut score = 0.0;
    for row in counts.rows.values() {
        let n_j: u64 = row.iter().sum();
        score += ln_a_j - ln_gamma(a_j + n_j as f64);
        for &n_jk in row {
            if n_jk > 0 {
                score += ln_gamma(a_jk + n_jk as f64) - ln_a_jk;
            }
        }
    }
    score
}

pub fn bdeu_node_score(data: &Dataset, child: usize, parents: &[usize], ess: f64) -> f64 {
    debug_assert!(!parents.contains(&child));
    bdeu_family_score(&FamilyCounts::from_data(data, child, parents), ess)
}

pub fn bdeu_network_score(data: &Dataset, dag: &Dag, ess: f64) -> ScoreValue {
    let per_node: Vec<f64> = (0..dag.node_count())
        .map(|i| bdeu_node_score(data, i, dag.parents(i), ess))
        .collect();
    ScoreValue {
        log_score: per_node.iter().sum(),
        per_node,
    }
}

/// Memoized local scores for one dataset, keyed by `(child, sorted parents)`.
///
/// Confined to a single search; cached values are the exact results of
/// [`bdeu_node_score`].
pub struct ScoreCache<'a> {
    data: &'a Dataset,
    ess: f64,
    cache: HashMap<(usize, Vec<usize>), f64>,
    evaluations: u64,
}

impl<'a> ScoreCache<'a> {
    pub fn new(data: &'a Dataset, ess: f64) -> Self {
        Self {
            data,
            ess,
            cache: HashMap::new(),
            evaluations: 0,
        }
    }

    /// `parents` must be sorted.
    pub fn local(&mut self, child: usize, parents: &[usize]) -> f64 {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        if let Some(&s) = self.cache.get(&(child, parents.to_vec())) {
            return s;
        }
        self.evaluations += 1;
        let s = bdeu_node_score(self.data, child, parents, self.ess);
        self.cache.insert((child, parents.to_vec()), s);
        s
    }

    pub fn local_with(&mut self, child: usize, parents: &[usize], extra: usize) -> f64 {
        let mut set = parents.to_vec();
        let at = set.binary_search(&extra).unwrap_err();
        set.insert(at, extra);
        self.local(child, &set)
    }

    pub fn local_without(&mut self, child: usize, parents: &[usize], removed: usize) -> f64 {
        let set: Vec<usize> = parents.iter().copied().filter(|&p| p != removed).collect();
        self.local(child, &set)
    }

    pub fn network(&mut self, dag: &Dag) -> f64 {
        (0..dag.node_count()).map(|i| self.local(i, dag.parents(i))).sum()
    }

    /// Number of local scores computed from data (cache misses).
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}
