//! Bootstrap edge confidence and significance thresholds.
//!
//! For `m` bootstrap replicates the confidence of a node pair is the fraction
//! of learned graphs whose skeleton contains it. Significant edges are those
//! whose confidence exceeds a cutoff; the cutoff is chosen by minimizing the
//! L1 distance between the empirical CDF `F` of the confidences and the
//! two-step CDF of an ideal 0/1 profile with a fraction `t` of zeros:
//!
//! ```text
//! L1(t) = sum over x_i in {0} + sorted(p) + {1} of |F(x_i) - t| (x_{i+1} - x_i)
//! ```
//!
//! That is a weighted sum of absolute deviations of the step heights `F(x_i)`
//! from `t`, so its minimizer is their weighted median. The cutoff is then
//! the quantile `F^-1(t) = inf { x in [0, 1] : F(x) >= t }`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::graph::{enumerate_possible_edges, Dag, GraphError, NodePair, NodeSet, Skeleton};
use crate::learn::{LearnError, Learner};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AveragingError {
    #[error("threshold {0} outside [0, 1]")]
    Domain(f64),
    #[error("a confidence profile needs at least one candidate edge")]
    EmptyProfile,
    #[error("{nodes} nodes need {expected} confidences, got {found}")]
    Length { nodes: usize, expected: usize, found: usize },
    #[error("confidence {value} at position {index} outside [0, 1]")]
    InvalidConfidence { index: usize, value: f64 },
    #[error("direction counts at position {index} do not add up to the presence count")]
    DirectionCounts { index: usize },
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: LearnError },
    #[error("learned graph has {found} nodes, expected {expected}")]
    NodeCount { expected: usize, found: usize },
    #[error("edge {0} is not a candidate edge")]
    NotAnEdge(NodePair),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown threshold method `{0}` (expected l1, adhoc:<t> or noisefloor)")]
    UnknownMethod(String),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Per-pair confidences over the canonical edge order of `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceProfile {
    pub nodes: NodeSet,
    /// Number of replicates; 0 when the confidences were supplied directly.
    #[serde(default)]
    pub m: u64,
    pub p_hat: Vec<f64>,
    /// `[lo -> hi, hi -> lo]` orientation counts per pair.
    #[serde(default)]
    pub direction_counts: Vec<[u64; 2]>,
}

impl ConfidenceProfile {
    /// A profile from externally estimated confidences, with no direction
    /// information.
    pub fn from_confidences(nodes: NodeSet, p_hat: Vec<f64>) -> Result<Self, AveragingError> {
        let k = p_hat.len();
        let profile = Self { nodes, m: 0, p_hat, direction_counts: vec![[0, 0]; k] };
        profile.validate()?;
        Ok(profile)
    }

    /// Counts skeleton membership and orientation over `graphs`.
    pub fn from_graphs<'a>(
        nodes: NodeSet,
        graphs: impl IntoIterator<Item = &'a Dag>,
    ) -> Result<Self, AveragingError> {
        let n = nodes.len();
        let k = nodes.pair_count();
        let mut direction_counts = vec![[0u64; 2]; k];
        let mut m = 0u64;
        for g in graphs {
            if g.node_count() != n {
                return Err(AveragingError::NodeCount { expected: n, found: g.node_count() });
            }
            m += 1;
            for (u, v) in g.edges() {
                let pair = NodePair::new(u, v);
                direction_counts[pair.index(n)][usize::from(u > v)] += 1;
            }
        }
        if m == 0 {
            return Err(AveragingError::NoReplicates);
        }
        let p_hat = direction_counts
            .iter()
            .map(|c| (c[0] + c[1]) as f64 / m as f64)
            .collect();
        Ok(Self { nodes, m, p_hat, direction_counts })
    }

    pub fn validate(&self) -> Result<(), AveragingError> {
        let expected = self.nodes.pair_count();
        if self.p_hat.len() != expected {
            return Err(AveragingError::Length {
                nodes: self.nodes.len(),
                expected,
                found: self.p_hat.len(),
            });
        }
        if expected == 0 {
            return Err(AveragingError::EmptyProfile);
        }
        if let Some((index, &value)) = self
            .p_hat
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(AveragingError::InvalidConfidence { index, value });
        }
        if self.direction_counts.len() != expected {
            return Err(AveragingError::Length {
                nodes: self.nodes.len(),
                expected,
                found: self.direction_counts.len(),
            });
        }
        if self.m > 0 {
            for (index, (c, &p)) in self.direction_counts.iter().zip(&self.p_hat).enumerate() {
                if (c[0] + c[1]) as f64 / self.m as f64 != p {
                    return Err(AveragingError::DirectionCounts { index });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.p_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_hat.is_empty()
    }

    pub fn edges(&self) -> Vec<NodePair> {
        enumerate_possible_edges(self.nodes.len())
    }

    pub fn confidence(&self, pair: NodePair) -> f64 {
        self.p_hat[pair.index(self.nodes.len())]
    }

    pub fn cdf(&self) -> StepCdf {
        StepCdf::new(&self.p_hat)
    }
}

/// Right-continuous empirical CDF of a confidence vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    sorted: Vec<f64>,
}

impl StepCdf {
    pub fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    /// The order statistic.
    pub fn jumps(&self) -> &[f64] {
        &self.sorted
    }

    fn height(&self, count: usize) -> f64 {
        count as f64 / self.sorted.len() as f64
    }

    /// Fraction of values `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.height(self.sorted.partition_point(|&v| v <= x))
    }

    /// `inf { x in [0, 1] : F(x) >= t }`, with `F^-1(0) = 0`.
    pub fn quantile(&self, t: f64) -> Result<f64, AveragingError> {
        check_unit(t)?;
        if t <= 0.0 {
            return Ok(0.0);
        }
        let k = self.sorted.len();
        let i = (1..=k).find(|&i| self.height(i) >= t).unwrap_or(k);
        Ok(self.sorted[i - 1].max(0.0))
    }

    /// `(F(x_i), x_{i+1} - x_i)` for the partition `{0} + jumps + {1}`.
    /// Duplicate points give zero-width pieces.
    pub fn l1_pieces(&self) -> Vec<(f64, f64)> {
        let mut points = Vec::with_capacity(self.sorted.len() + 2);
        points.push(0.0);
        points.extend_from_slice(&self.sorted);
        points.push(1.0);
        points
            .windows(2)
            .map(|w| (self.eval(w[0]), w[1] - w[0]))
            .collect()
    }
}

fn check_unit(t: f64) -> Result<(), AveragingError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(AveragingError::Domain(t))
    }
}

pub fn l1_objective(t: f64, profile: &ConfidenceProfile) -> Result<f64, AveragingError> {
    check_unit(t)?;
    Ok(objective(&profile.cdf().l1_pieces(), t))
}

fn objective(pieces: &[(f64, f64)], t: f64) -> f64 {
    pieces.iter().map(|&(f, w)| (f - t).abs() * w).sum()
}

/// Weighted median of the step heights. When the half-weight point falls
/// exactly between two heights the objective is flat there and the
/// midpoint is returned.
fn weighted_median(pieces: &[(f64, f64)]) -> f64 {
    let support: Vec<(f64, f64)> = pieces.iter().copied().filter(|&(_, w)| w > 0.0).collect();
    let total: f64 = support.iter().map(|&(_, w)| w).sum();
    let half = total / 2.0;
    let tol = 1e-12 * total.max(1.0);
    let mut cum = 0.0;
    for (i, &(f, w)) in support.iter().enumerate() {
        cum += w;
        if (cum - half).abs() <= tol {
            return match support[i + 1..].iter().find(|&&(g, _)| g > f) {
                Some(&(g, _)) => (f + g) / 2.0,
                None => f,
            };
        }
        if cum > half {
            return f;
        }
    }
    support.last().map_or(0.0, |&(f, _)| f)
}

/// Threshold selection rule that produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    L1,
    AdHoc(f64),
    NoiseFloor,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::L1 => f.write_str("l1"),
            Method::AdHoc(t) => write!(f, "adhoc:{t}"),
            Method::NoiseFloor => f.write_str("noisefloor"),
        }
    }
}

impl FromStr for Method {
    type Err = AveragingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || AveragingError::UnknownMethod(s.to_string());
        match s {
            "l1" => Ok(Method::L1),
            "noisefloor" => Ok(Method::NoiseFloor),
            _ => {
                let t: f64 = s
                    .strip_prefix("adhoc:")
                    .ok_or_else(unknown)?
                    .parse()
                    .map_err(|_| unknown())?;
                check_unit(t)?;
                Ok(Method::AdHoc(t))
            }
        }
    }
}

impl TryFrom<String> for Method {
    type Error = AveragingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Estimated fraction of non-significant edges (for ad-hoc and
    /// noise-floor cuts, the CDF height at the cutoff).
    pub t_hat: f64,
    /// Confidence cutoff; edges strictly above it are selected.
    pub cutoff: f64,
    /// Selected pairs in canonical order.
    pub selected: Vec<NodePair>,
    pub l1_value: f64,
    pub method: Method,
}

fn select_above(profile: &ConfidenceProfile, cutoff: f64) -> Vec<NodePair> {
    profile
        .edges()
        .into_iter()
        .zip(&profile.p_hat)
        .filter(|&(_, &p)| p > cutoff)
        .map(|(e, _)| e)
        .collect()
}

/// L1-optimal threshold and the edges it selects.
pub fn estimate_threshold(profile: &ConfidenceProfile) -> Result<ThresholdReport, AveragingError> {
    if profile.is_empty() {
        return Err(AveragingError::EmptyProfile);
    }
    let cdf = profile.cdf();
    let pieces = cdf.l1_pieces();
    let t_hat = weighted_median(&pieces).clamp(0.0, 1.0);
    let cutoff = cdf.quantile(t_hat)?;
    Ok(ThresholdReport {
        t_hat,
        cutoff,
        selected: select_above(profile, cutoff),
        l1_value: objective(&pieces, t_hat),
        method: Method::L1,
    })
}

fn fixed_cut(profile: &ConfidenceProfile, cutoff: f64, method: Method) -> Result<ThresholdReport, AveragingError> {
    if profile.is_empty() {
        return Err(AveragingError::EmptyProfile);
    }
    check_unit(cutoff)?;
    let cdf = profile.cdf();
    let t_hat = cdf.eval(cutoff);
    Ok(ThresholdReport {
        t_hat,
        cutoff,
        selected: select_above(profile, cutoff),
        l1_value: objective(&cdf.l1_pieces(), t_hat),
        method,
    })
}

/// Conventional fixed cut: pairs with confidence strictly above `t`.
pub fn select_with_adhoc_threshold(profile: &ConfidenceProfile, t: f64) -> Result<ThresholdReport, AveragingError> {
    fixed_cut(profile, t, Method::AdHoc(t))
}

/// Pairs whose confidence exceeds the largest confidence seen under
/// column permutation.
pub fn noise_floor_threshold(
    profile: &ConfidenceProfile,
    floor: &ConfidenceProfile,
) -> Result<ThresholdReport, AveragingError> {
    if floor.nodes != profile.nodes {
        return Err(GraphError::NodeSetMismatch.into());
    }
    let cutoff = floor.p_hat.iter().copied().fold(0.0, f64::max);
    fixed_cut(profile, cutoff, Method::NoiseFloor)
}

/// How bootstrap work is split: replicate count, master seed and worker
/// threads (`jobs = 0` uses the global pool). Results do not depend on `jobs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl BootstrapOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, seed, jobs: 0 }
    }

    pub fn with_jobs(self, jobs: usize) -> Self {
        Self { jobs, ..self }
    }
}

pub(crate) fn in_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T, AveragingError> {
    if jobs == 0 {
        return Ok(work());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| AveragingError::Pool(e.to_string()))?;
    Ok(pool.install(work))
}

fn learn_replicates<L, F>(
    data: &Dataset,
    learner: &L,
    opts: &BootstrapOptions,
    make: F,
) -> Result<ConfidenceProfile, AveragingError>
where
    L: Learner + ?Sized,
    F: Fn(usize) -> (Dataset, u64) + Sync,
{
    if opts.replicates == 0 {
        return Err(AveragingError::NoReplicates);
    }
    let nodes = NodeSet::new(data.names())?;
    let graphs = in_pool(opts.jobs, || {
        (0..opts.replicates)
            .into_par_iter()
            .map(|b| {
                let (sample, learner_seed) = make(b);
                learner
                    .learn(&sample, learner_seed)
                    .map(|l| l.dag)
                    .map_err(|source| AveragingError::Replicate { index: b, source })
            })
            .collect::<Result<Vec<Dag>, _>>()
    })??;
    ConfidenceProfile::from_graphs(nodes, &graphs)
}

/// Bootstrap confidence of every candidate edge. Replicate `b` resamples with
/// `derive_seed(seed, Bootstrap, b)` and learns with
/// `derive_seed(seed, Learner, b)`.
pub fn edge_confidence<L: Learner + ?Sized>(
    data: &Dataset,
    learner: &L,
    opts: &BootstrapOptions,
) -> Result<ConfidenceProfile, AveragingError> {
    let seed = opts.seed;
    learn_replicates(data, learner, opts, |b| {
        (
            data.bootstrap_resample(derive_seed(seed, Stream::Bootstrap, b as u64)),
            derive_seed(seed, Stream::Learner, b as u64),
        )
    })
}

/// Confidences learned from `m` independently column-permuted copies of the data.
pub fn noise_floor<L: Learner + ?Sized>(
    data: &Dataset,
    learner: &L,
    opts: &BootstrapOptions,
) -> Result<ConfidenceProfile, AveragingError> {
    let seed = opts.seed;
    learn_replicates(data, learner, opts, |l| {
        let stream = derive_seed(seed, Stream::Permutation, l as u64);
        let permuted = data.permute_columns(stream);
        let resampled = permuted.bootstrap_resample(derive_seed(stream, Stream::Bootstrap, 0));
        (resampled, derive_seed(stream, Stream::Learner, 0))
    })
}

/// Orientation chosen for each selected pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedNetwork {
    pub dag: Dag,
    /// Pairs oriented against their bootstrap majority to avoid a cycle.
    pub flipped: Vec<NodePair>,
}

/// Orients each selected pair by its more frequent bootstrap direction (ties
/// go lower -> higher index).
///
/// Pairs are placed in order of decreasing majority margin, so when the
/// majority directions form a cycle the pair with the smallest margin on it
/// is the one reversed.
pub fn assign_directions(
    profile: &ConfidenceProfile,
    selected: &[NodePair],
) -> Result<AveragedNetwork, AveragingError> {
    let n = profile.nodes.len();
    let mut order: Vec<(u64, NodePair, bool)> = Vec::with_capacity(selected.len());
    for &pair in selected {
        if pair.hi() >= n {
            return Err(AveragingError::NotAnEdge(pair));
        }
        let [fwd, bwd] = profile.direction_counts[pair.index(n)];
        order.push((fwd.abs_diff(bwd), pair, bwd > fwd));
    }
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    order.dedup_by_key(|e| e.1);

    let mut dag = Dag::empty(profile.nodes.clone());
    let mut flipped = Vec::new();
    for (_, pair, backwards) in order {
        let (u, v) = if backwards { (pair.hi(), pair.lo()) } else { (pair.lo(), pair.hi()) };
        if dag.add_edge(u, v).is_err() {
            dag.add_edge(v, u)?;
            flipped.push(pair);
        }
    }
    flipped.sort();
    Ok(AveragedNetwork { dag, flipped })
}

impl AveragedNetwork {
    pub fn skeleton(&self) -> Skeleton {
        self.dag.skeleton()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::LearnedStructure;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    const EXAMPLE: [f64; 6] = [0.2242, 0.0460, 0.8935, 0.3921, 0.7689, 0.9439];

    fn example() -> ConfidenceProfile {
        ConfidenceProfile::from_confidences(NodeSet::lettered(4), EXAMPLE.to_vec()).unwrap()
    }

    fn pairs(list: &[(usize, usize)]) -> Vec<NodePair> {
        list.iter().map(|&(a, b)| NodePair::new(a, b)).collect()
    }

    #[test]
    fn example_objective_matches_seven_terms() {
        let t: f64 = 0.4999816;
        let expanded = (0.0 - t).abs() * (0.0460 - 0.0)
            + (1.0 / 6.0 - t).abs() * (0.2242 - 0.0460)
            + (2.0 / 6.0 - t).abs() * (0.3921 - 0.2242)
            + (3.0 / 6.0 - t).abs() * (0.7689 - 0.3921)
            + (4.0 / 6.0 - t).abs() * (0.8935 - 0.7689)
            + (5.0 / 6.0 - t).abs() * (0.9439 - 0.8935)
            + (1.0 - t).abs() * (1.0 - 0.9439);
        let value = l1_objective(t, &example()).unwrap();
        assert!((value - expanded).abs() < 1e-12, "{value} vs {expanded}");
    }

    #[test]
    fn example_threshold_and_selection() {
        let report = estimate_threshold(&example()).unwrap();
        assert!((report.t_hat - 0.4999816).abs() < 1e-3);
        assert_eq!(report.cutoff, 0.3921);
        assert_eq!(report.selected, pairs(&[(0, 3), (1, 3), (2, 3)]));
        assert_eq!(report.method, Method::L1);
    }

    #[test]
    fn example_adhoc_cuts() {
        let p = example();
        assert_eq!(select_with_adhoc_threshold(&p, 0.80).unwrap().selected, pairs(&[(0, 3), (2, 3)]));
        assert_eq!(select_with_adhoc_threshold(&p, 0.0).unwrap().selected.len(), 6);
        assert!(select_with_adhoc_threshold(&p, 1.0).unwrap().selected.is_empty());
        assert!(select_with_adhoc_threshold(&p, 1.2).is_err());
    }

    #[test]
    fn all_zero_profile() {
        let p = ConfidenceProfile::from_confidences(NodeSet::lettered(3), vec![0.0; 3]).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!((l1_objective(t, &p).unwrap() - (1.0 - t)).abs() < 1e-15);
        }
        let r = estimate_threshold(&p).unwrap();
        assert_eq!(r.t_hat, 1.0);
        assert!(r.selected.is_empty());
    }

    #[test]
    fn all_one_profile_selects_everything() {
        let p = ConfidenceProfile::from_confidences(NodeSet::lettered(3), vec![1.0; 3]).unwrap();
        let r = estimate_threshold(&p).unwrap();
        assert_eq!(r.t_hat, 0.0);
        assert_eq!(r.cutoff, 0.0);
        assert_eq!(r.selected.len(), 3);
    }

    #[test]
    fn ideal_profile() {
        let p = ConfidenceProfile::from_confidences(
            NodeSet::lettered(4),
            vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        let r = estimate_threshold(&p).unwrap();
        assert_eq!(r.t_hat, 0.5);
        assert_eq!(r.selected, pairs(&[(0, 2), (1, 2), (2, 3)]));
    }

    #[test]
    fn flat_minimum_returns_midpoint() {
        let p = ConfidenceProfile::from_confidences(NodeSet::lettered(2), vec![0.5]).unwrap();
        assert_eq!(estimate_threshold(&p).unwrap().t_hat, 0.5);
        assert_eq!(weighted_median(&[(0.2, 0.5), (0.6, 0.0), (0.8, 0.5)]), 0.5);
    }

    #[test]
    fn quantile_and_cdf() {
        let cdf = StepCdf::new(&EXAMPLE);
        assert_eq!(cdf.eval(0.0), 0.0);
        assert_eq!(cdf.eval(0.0460), 1.0 / 6.0);
        assert_eq!(cdf.eval(0.9439), 1.0);
        assert_eq!(cdf.quantile(0.5).unwrap(), 0.3921);
        assert_eq!(cdf.quantile(0.51).unwrap(), 0.7689);
        assert_eq!(cdf.quantile(0.0).unwrap(), 0.0);
        assert_eq!(cdf.quantile(1.0).unwrap(), 0.9439);
        assert!(cdf.quantile(-0.1).is_err());
        assert!(l1_objective(f64::NAN, &example()).is_err());
    }

    #[test]
    fn isolated_nodes_keep_example_edges() {
        // two extra nodes contribute 9 all-zero pairs
        let nodes = NodeSet::lettered(6);
        let mut p = vec![0.0; 15];
        let old = NodeSet::lettered(4);
        for (i, e) in enumerate_possible_edges(4).into_iter().enumerate() {
            let _ = old.name(e.lo());
            p[e.index(6)] = EXAMPLE[i];
        }
        let profile = ConfidenceProfile::from_confidences(nodes, p).unwrap();
        let r = estimate_threshold(&profile).unwrap();
        for e in pairs(&[(0, 3), (1, 3), (2, 3)]) {
            assert!(r.selected.contains(&e));
        }
    }

    /// Direct integral of |F(x) - t| over [0, 1] by a midpoint Riemann sum.
    fn riemann_l1(values: &[f64], t: f64, step: f64) -> f64 {
        let k = values.len() as f64;
        let steps = (1.0 / step).round() as usize;
        (0..steps)
            .map(|i| {
                let x = (i as f64 + 0.5) * step;
                let f = values.iter().filter(|&&v| v <= x).count() as f64 / k;
                (f - t).abs() * step
            })
            .sum()
    }

    #[test]
    fn objective_matches_riemann_sum() {
        let mut rng = stream_rng(12);
        for _ in 0..3 {
            let values: Vec<f64> = (0..6).map(|_| (rng.random::<f64>() * 1000.0).round() / 1000.0).collect();
            let p = ConfidenceProfile::from_confidences(NodeSet::lettered(4), values.clone()).unwrap();
            for t in [0.1, 0.45, 0.8] {
                let exact = l1_objective(t, &p).unwrap();
                let riemann = riemann_l1(&values, t, 1e-6);
                assert!((exact - riemann).abs() < 1e-6, "{exact} vs {riemann}");
            }
        }
    }

    fn profile_strategy() -> impl Strategy<Value = ConfidenceProfile> {
        (3usize..=10).prop_flat_map(|n| {
            let k = n * (n - 1) / 2;
            prop::collection::vec(
                prop_oneof![Just(0.0), Just(1.0), (0u32..=200).prop_map(|v| v as f64 / 200.0)],
                k,
            )
            .prop_map(move |p| ConfidenceProfile::from_confidences(NodeSet::lettered(n), p).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn closed_form_beats_grid(profile in profile_strategy()) {
            let r = estimate_threshold(&profile).unwrap();
            let best_grid = (0..=10_000)
                .map(|i| l1_objective(i as f64 / 10_000.0, &profile).unwrap())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(r.l1_value <= best_grid + 1e-9);
        }

        #[test]
        fn selection_is_a_confidence_cut(profile in profile_strategy()) {
            let r = estimate_threshold(&profile).unwrap();
            let edges = profile.edges();
            for (i, ei) in edges.iter().enumerate() {
                for (j, ej) in edges.iter().enumerate() {
                    if profile.p_hat[i] >= profile.p_hat[j] && r.selected.contains(ej) {
                        prop_assert!(r.selected.contains(ei));
                    }
                }
            }
            for (e, &p) in edges.iter().zip(&profile.p_hat) {
                prop_assert_eq!(r.selected.contains(e), p > r.cutoff);
            }
        }

        #[test]
        fn objective_is_convex(profile in profile_strategy(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let mid = (a + b) / 2.0;
            let f = |t| l1_objective(t, &profile).unwrap();
            prop_assert!(f(mid) <= (f(a) + f(b)) / 2.0 + 1e-12);
        }
    }

    struct Fixed(Dag);

    impl Learner for Fixed {
        fn learn(&self, _: &Dataset, _: u64) -> Result<LearnedStructure, LearnError> {
            Ok(LearnedStructure { dag: self.0.clone(), diagnostics: Default::default() })
        }
    }

    fn toy_data(n: usize) -> Dataset {
        let mut rng = stream_rng(1);
        let vars = (0..4).map(|i| crate::model::Variable::indexed(NodeSet::lettered(4).name(i), 2)).collect();
        let cols = (0..4).map(|_| (0..n).map(|_| rng.random_range(0..2)).collect()).collect();
        Dataset::new(vars, cols).unwrap()
    }

    #[test]
    fn fixed_learner_gives_zero_one_profile() {
        let dag = Dag::from_edges(NodeSet::lettered(4), &[(0, 1), (3, 1), (2, 3)]).unwrap();
        let profile = edge_confidence(&toy_data(30), &Fixed(dag.clone()), &BootstrapOptions::new(7, 3)).unwrap();
        assert_eq!(profile.m, 7);
        for (e, &p) in profile.edges().iter().zip(&profile.p_hat) {
            assert_eq!(p, if dag.adjacent(e.lo(), e.hi()) { 1.0 } else { 0.0 });
        }
        profile.validate().unwrap();
        let report = estimate_threshold(&profile).unwrap();
        let expected: Vec<_> = dag.skeleton().edges().iter().copied().collect();
        assert_eq!(report.selected, expected);
        let averaged = assign_directions(&profile, &report.selected).unwrap();
        assert_eq!(averaged.dag, dag);
    }

    #[test]
    fn noise_floor_with_empty_permuted_graphs() {
        let p = example();
        let floor = ConfidenceProfile::from_confidences(NodeSet::lettered(4), vec![0.0; 6]).unwrap();
        let r = noise_floor_threshold(&p, &floor).unwrap();
        assert_eq!(r.cutoff, 0.0);
        assert_eq!(r.selected.len(), 6);
        let empty = Fixed(Dag::empty(NodeSet::lettered(4)));
        let learned_floor = noise_floor(&toy_data(20), &empty, &BootstrapOptions::new(5, 1)).unwrap();
        assert!(learned_floor.p_hat.iter().all(|&v| v == 0.0));
    }

    fn with_counts(counts: &[[u64; 2]]) -> ConfidenceProfile {
        let m = 10;
        ConfidenceProfile {
            nodes: NodeSet::lettered(3),
            m,
            p_hat: counts.iter().map(|c| (c[0] + c[1]) as f64 / m as f64).collect(),
            direction_counts: counts.to_vec(),
        }
    }

    #[test]
    fn majority_directions() {
        // pairs: (A,B), (A,C), (B,C)
        let p = with_counts(&[[10, 0], [3, 7], [0, 0]]);
        p.validate().unwrap();
        let net = assign_directions(&p, &pairs(&[(0, 1), (0, 2)])).unwrap();
        assert_eq!(net.dag.edges().collect::<Vec<_>>(), vec![(0, 1), (2, 0)]);
        assert!(net.flipped.is_empty());
    }

    #[test]
    fn majority_cycle_flips_smallest_margin() {
        // A->B margin 8, B->C margin 6, C->A margin 2
        let p = with_counts(&[[9, 1], [4, 6], [8, 2]]);
        let net = assign_directions(&p, &pairs(&[(0, 1), (0, 2), (1, 2)])).unwrap();
        assert_eq!(net.flipped, pairs(&[(0, 2)]));
        assert_eq!(net.dag.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(net.skeleton().len(), 3);
    }

    #[test]
    fn method_strings() {
        for m in [Method::L1, Method::AdHoc(0.85), Method::NoiseFloor] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("adhoc:1.5".parse::<Method>().is_err());
        assert!("median".parse::<Method>().is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(matches!(
            ConfidenceProfile::from_confidences(NodeSet::lettered(4), vec![0.5; 5]),
            Err(AveragingError::Length { expected: 6, .. })
        ));
        assert!(matches!(
            ConfidenceProfile::from_confidences(NodeSet::lettered(2), vec![1.5]),
            Err(AveragingError::InvalidConfidence { .. })
        ));
        assert!(matches!(
            ConfidenceProfile::from_confidences(NodeSet::lettered(1), vec![]),
            Err(AveragingError::EmptyProfile)
        ));
    }
}
