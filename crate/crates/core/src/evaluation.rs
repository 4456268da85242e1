//! Skeleton recovery metrics and the sample-size experiment comparing the
//! L1 threshold with fixed cuts.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::averaging::{
    edge_confidence, estimate_threshold, in_pool, noise_floor, noise_floor_threshold,
    select_with_adhoc_threshold, AveragingError, BootstrapOptions, Method,
};
use crate::graph::{enumerate_possible_edges, Dag, GraphError, Skeleton};
use crate::learn::LearnerConfig;
use crate::model::{DiscreteBayesNet, ModelError};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("selected edges and true network use different node sets")]
    NodeSetMismatch,
    #[error("invalid experiment configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),
    #[error("n = {n}, repeat {repeat}: {source}")]
    Cell { n: usize, repeat: usize, source: CellError },
    #[error("no {method} result for n = {n}, repeat {repeat}")]
    MissingCell { n: usize, repeat: usize, method: Method },
    #[error(transparent)]
    Averaging(#[from] AveragingError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error(transparent)]
    Sample(#[from] ModelError),
    #[error(transparent)]
    Averaging(#[from] AveragingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub true_positive: u64,
    pub false_positive: u64,
    pub true_negative: u64,
    pub false_negative: u64,
    /// Sample size over parameter count, when known.
    pub n_over_p: Option<f64>,
}

impl EvalMetrics {
    /// Rates from confusion counts. A rate with an empty denominator (no true
    /// edges, or no true non-edges) is 1.
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let rate = |hit: u64, miss: u64| {
            if hit + miss == 0 {
                1.0
            } else {
                hit as f64 / (hit + miss) as f64
            }
        };
        Self {
            sensitivity: rate(tp, fn_),
            specificity: rate(tn, fp),
            accuracy: (tp + tn) as f64 / (tp + fp + tn + fn_) as f64,
            true_positive: tp,
            false_positive: fp,
            true_negative: tn,
            false_negative: fn_,
            n_over_p: None,
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::Accuracy => self.accuracy,
        }
    }
}

/// Compares skeletons; directions in `truth` are ignored.
pub fn compare_to_truth(selected: &Skeleton, truth: &Dag) -> Result<EvalMetrics, EvalError> {
    if selected.nodes() != truth.nodes() {
        return Err(EvalError::NodeSetMismatch);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for e in enumerate_possible_edges(truth.node_count()) {
        match (selected.contains(e), truth.adjacent(e.lo(), e.hi())) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(EvalMetrics::from_counts(tp, fp, tn, fn_))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Sensitivity,
    Specificity,
    Accuracy,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Sensitivity, Metric::Specificity, Metric::Accuracy];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::Accuracy => "accuracy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sample_sizes: Vec<usize>,
    pub learner: LearnerConfig,
    /// Bootstrap replicates per dataset.
    pub replicates: usize,
    /// Datasets drawn per sample size.
    pub repeats: usize,
    pub seed: u64,
    /// Fixed cuts compared against the L1 threshold.
    pub adhoc: Vec<f64>,
    /// Also evaluate the permutation noise-floor cut.
    pub noise_floor: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![100, 500, 2000],
            learner: LearnerConfig::default(),
            replicates: 200,
            repeats: 10,
            seed: 0,
            adhoc: vec![0.70, 0.80, 0.90, 0.95],
            noise_floor: false,
        }
    }
}

impl ExperimentConfig {
    /// Every problem found, not just the first.
    pub fn validate(&self) -> Result<(), EvalError> {
        let mut problems = Vec::new();
        if self.sample_sizes.is_empty() {
            problems.push("sample_sizes must not be empty".to_string());
        }
        if self.sample_sizes.contains(&0) {
            problems.push("sample sizes must be at least 1".to_string());
        }
        for (i, n) in self.sample_sizes.iter().enumerate() {
            if self.sample_sizes[..i].contains(n) {
                problems.push(format!("sample size {n} listed twice"));
            }
        }
        if self.replicates == 0 {
            problems.push("replicates must be at least 1".to_string());
        }
        if self.repeats == 0 {
            problems.push("repeats must be at least 1".to_string());
        }
        for t in &self.adhoc {
            if !(0.0..=1.0).contains(t) {
                problems.push(format!("ad-hoc threshold {t} outside [0, 1]"));
            }
        }
        if let Err(e) = self.learner.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(EvalError::InvalidConfig(problems))
        }
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut methods = vec![Method::L1];
        methods.extend(self.adhoc.iter().map(|&t| Method::AdHoc(t)));
        if self.noise_floor {
            methods.push(Method::NoiseFloor);
        }
        methods
    }
}

/// Metrics of one method on one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: usize,
    pub repeat: usize,
    pub method: Method,
    pub metrics: EvalMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub n_over_p: f64,
    pub method: Method,
    pub metric: Metric,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub parameter_count: u64,
    pub methods: Vec<Method>,
    pub records: Vec<Record>,
    pub summary: Vec<SummaryRow>,
}

pub const SUMMARY_HEADER: &str = "n\tn_over_p\tmethod\tmetric\tmean\tci_low\tci_high";
pub const DELTA_HEADER: &str = "n\tn_over_p\tbaseline\tmetric\tmean_delta\tci_low\tci_high";

impl ExperimentResult {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.n, r.n_over_p, r.method, r.metric, r.mean, r.ci_low, r.ci_high
            );
        }
        out
    }

    pub fn row(&self, n: usize, method: Method, metric: Metric) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.n == n && r.method == method && r.metric == metric)
    }
}

/// Mean with a two-sided 95% Student-t interval. One value gives a
/// zero-width interval.
pub fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let r = values.len();
    let mean = values.iter().sum::<f64>() / r as f64;
    if r < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (r - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (var / r as f64).sqrt();
    (mean, mean - half, mean + half)
}

/// For every sample size and repeat: sample from `truth`, bootstrap edge
/// confidences, select edges with each method and score them against the
/// true skeleton. Dataset `(i, r)` uses the master stream
/// `derive_seed(seed, Experiment, i * repeats + r)`.
pub fn run_experiment(
    truth: &DiscreteBayesNet,
    config: &ExperimentConfig,
    jobs: usize,
) -> Result<ExperimentResult, EvalError> {
    config.validate()?;
    let p = truth.parameter_count();
    let methods = config.methods();
    let cells: Vec<(usize, usize)> = (0..config.sample_sizes.len())
        .flat_map(|i| (0..config.repeats).map(move |r| (i, r)))
        .collect();
    let per_cell = in_pool(jobs, || {
        cells
            .par_iter()
            .enumerate()
            .map(|(idx, &(i, r))| {
                let n = config.sample_sizes[i];
                run_cell(truth, config, n, r, derive_seed(config.seed, Stream::Experiment, idx as u64))
                    .map_err(|source| EvalError::Cell { n, repeat: r, source })
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    let records: Vec<Record> = per_cell.into_iter().flatten().collect();
    let summary = summarize(&records, &config.sample_sizes, &methods, p);
    Ok(ExperimentResult { parameter_count: p, methods, records, summary })
}

fn run_cell(
    truth: &DiscreteBayesNet,
    config: &ExperimentConfig,
    n: usize,
    repeat: usize,
    seed: u64,
) -> Result<Vec<Record>, CellError> {
    let data = truth.forward_sample(n, derive_seed(seed, Stream::Sample, 0))?;
    let opts = BootstrapOptions::new(config.replicates, seed);
    let profile = edge_confidence(&data, &config.learner, &opts)?;
    let mut reports = vec![estimate_threshold(&profile)?];
    for &t in &config.adhoc {
        reports.push(select_with_adhoc_threshold(&profile, t)?);
    }
    if config.noise_floor {
        let floor_opts = BootstrapOptions::new(config.replicates, derive_seed(seed, Stream::Permutation, 0));
        let floor = noise_floor(&data, &config.learner, &floor_opts)?;
        reports.push(noise_floor_threshold(&profile, &floor)?);
    }
    let n_over_p = n as f64 / truth.parameter_count() as f64;
    reports
        .into_iter()
        .map(|report| {
            let selected = Skeleton::new(profile.nodes.clone(), report.selected)?;
            let mut metrics = compare_to_truth(&selected, truth.dag()).map_err(|_| GraphError::NodeSetMismatch)?;
            metrics.n_over_p = Some(n_over_p);
            Ok(Record { n, repeat, method: report.method, metrics })
        })
        .collect()
}

/// Mean and interval of every metric per sample size and method, in the
/// given orders.
pub fn summarize(records: &[Record], sample_sizes: &[usize], methods: &[Method], p: u64) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &n in sample_sizes {
        for &method in methods {
            let group: Vec<&EvalMetrics> = records
                .iter()
                .filter(|r| r.n == n && r.method == method)
                .map(|r| &r.metrics)
                .collect();
            if group.is_empty() {
                continue;
            }
            for metric in Metric::ALL {
                let values: Vec<f64> = group.iter().map(|m| m.get(metric)).collect();
                let (mean, lo, hi) = mean_ci(&values);
                // rates live in [0, 1]; the t-interval does not know that
                let (ci_low, ci_high) = (lo.max(0.0), hi.min(1.0));
                rows.push(SummaryRow {
                    n,
                    n_over_p: n as f64 / p as f64,
                    method,
                    metric,
                    mean,
                    ci_low,
                    ci_high,
                });
            }
        }
    }
    rows
}

/// `metric(L1) - metric(baseline)` averaged over repeats, for every
/// non-L1 method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub n: usize,
    pub n_over_p: f64,
    pub baseline: Method,
    pub metric: Metric,
    pub mean_delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn threshold_delta_table(result: &ExperimentResult) -> Result<Vec<DeltaRow>, EvalError> {
    let mut sizes: Vec<usize> = Vec::new();
    let mut repeats: Vec<usize> = Vec::new();
    for r in &result.records {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
        if !repeats.contains(&r.repeat) {
            repeats.push(r.repeat);
        }
    }
    repeats.sort_unstable();
    let find = |n: usize, repeat: usize, method: Method| {
        result
            .records
            .iter()
            .find(|r| r.n == n && r.repeat == repeat && r.method == method)
            .map(|r| r.metrics)
            .ok_or(EvalError::MissingCell { n, repeat, method })
    };
    let mut rows = Vec::new();
    for &n in &sizes {
        for &baseline in result.methods.iter().filter(|&&m| m != Method::L1) {
            let mut pairs = Vec::with_capacity(repeats.len());
            for &r in &repeats {
                pairs.push((find(n, r, Method::L1)?, find(n, r, baseline)?));
            }
            for metric in Metric::ALL {
                let deltas: Vec<f64> = pairs.iter().map(|(l1, b)| l1.get(metric) - b.get(metric)).collect();
                let (mean_delta, lo, hi) = mean_ci(&deltas);
                let (ci_low, ci_high) = (lo.max(-1.0), hi.min(1.0));
                rows.push(DeltaRow {
                    n,
                    n_over_p: n as f64 / result.parameter_count as f64,
                    baseline,
                    metric,
                    mean_delta,
                    ci_low,
                    ci_high,
                });
            }
        }
    }
    Ok(rows)
}

pub fn deltas_to_tsv(rows: &[DeltaRow]) -> String {
    let mut out = format!("{DELTA_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.n, r.n_over_p, r.baseline, r.metric, r.mean_delta, r.ci_low, r.ci_high
        );
    }
    out
}
