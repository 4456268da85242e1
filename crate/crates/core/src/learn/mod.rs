//! Structure learners: hill climbing on BDeu, IAMB with Grow-Shrink style
//! orientation, and MMHC (MMPC candidate sets followed by restricted hill
//! climbing).

mod hc;
mod iamb;
mod mmhc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::Dag;
use crate::independence::{CiError, CiTest, CiTestResult};

pub use hc::{hill_climb, hill_climb_seeded, restricted_hill_climb};
pub use iamb::{iamb, markov_blankets};
pub use mmhc::{mmhc, mmpc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error("structure learning needs at least two columns, found {0}")]
    TooFewColumns(usize),
    #[error(transparent)]
    Test(#[from] CiError),
    #[error("unknown algorithm `{0}` (expected hc, iamb or mmhc)")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Hc,
    Iamb,
    Mmhc,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Hc => "hc",
            Algorithm::Iamb => "iamb",
            Algorithm::Mmhc => "mmhc",
        })
    }
}

impl FromStr for Algorithm {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hc" => Ok(Algorithm::Hc),
            "iamb" => Ok(Algorithm::Iamb),
            "mmhc" => Ok(Algorithm::Mmhc),
            _ => Err(LearnError::UnknownAlgorithm(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Significance level of the independence tests (IAMB, MMPC).
    pub alpha: f64,
    /// BDeu equivalent sample size (HC, MMHC).
    pub ess: f64,
    pub test: CiTest,
    /// Random restarts after the first greedy ascent.
    pub restarts: usize,
    /// Random edge mutations applied before each restart.
    pub perturb: usize,
    /// Tabu list length; 0 means plain greedy ascent.
    pub tabu: usize,
    /// Non-improving tabu moves tolerated before stopping.
    pub max_tabu: usize,
    pub max_parents: Option<usize>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Hc,
            alpha: 0.05,
            ess: 10.0,
            test: CiTest::ShrinkageMi,
            restarts: 0,
            perturb: 1,
            tabu: 0,
            max_tabu: 10,
            max_parents: None,
        }
    }
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LearnError::InvalidConfig(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        if !(self.ess > 0.0 && self.ess.is_finite()) {
            return Err(LearnError::InvalidConfig(format!("ess {} must be positive", self.ess)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tests: u64,
    pub score_evaluations: u64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnedStructure {
    pub dag: Dag,
    pub diagnostics: Diagnostics,
}

/// Anything that maps a dataset to a DAG. The seed feeds any randomness
/// the learner uses (HC restarts); identical inputs give identical output.
pub trait Learner: Sync {
    fn learn(&self, data: &Dataset, seed: u64) -> Result<LearnedStructure, LearnError>;
}

impl Learner for LearnerConfig {
    fn learn(&self, data: &Dataset, seed: u64) -> Result<LearnedStructure, LearnError> {
        match self.algorithm {
            Algorithm::Hc => hill_climb_seeded(data, self, seed),
            Algorithm::Iamb => iamb(data, self),
            Algorithm::Mmhc => mmhc(data, self, seed),
        }
    }
}

fn check_input(data: &Dataset, config: &LearnerConfig) -> Result<(), LearnError> {
    config.validate()?;
    if data.n_cols() < 2 {
        return Err(LearnError::TooFewColumns(data.n_cols()));
    }
    Ok(())
}

/// Counts test invocations for diagnostics.
struct Tester<'a> {
    data: &'a Dataset,
    test: CiTest,
    alpha: f64,
    calls: u64,
}

impl<'a> Tester<'a> {
    fn new(data: &'a Dataset, config: &LearnerConfig) -> Self {
        Self { data, test: config.test, alpha: config.alpha, calls: 0 }
    }

    fn run(&mut self, x: usize, y: usize, z: &[usize]) -> Result<CiTestResult, CiError> {
        self.calls += 1;
        self.test.run(self.data, x, y, z)
    }

    fn independent(&mut self, x: usize, y: usize, z: &[usize]) -> Result<bool, CiError> {
        Ok(self.run(x, y, z)?.p_value >= self.alpha)
    }
}

/// All subsets of `set` in order of increasing size, lexicographic within a size.
fn subsets_by_size(set: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..=set.len()).flat_map(move |k| combinations(set, k))
}

fn combinations(set: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = set.len();
    if k > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| set[i]).collect());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
