//! Conditional independence tests built on (conditional) mutual information.
//!
//! Both tests report `2 n MI(x; y | z)` against a chi-square reference with
//! `(r_x - 1)(r_y - 1) prod r_z` degrees of freedom, computed from the full
//! level sets and clamped to at least 1. Empty strata contribute nothing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::dataset::{ContingencyTable, Dataset, DatasetError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CiError {
    #[error(transparent)]
    Columns(#[from] DatasetError),
    #[error("unknown test `{0}` (expected `mi` or `mi-sh`)")]
    UnknownTest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    /// Conditional mutual information in nats.
    pub mi_estimate: f64,
    /// Set when `x` or `y` shows a single level in the data. Such pairs are
    /// reported as independent (statistic 0, p-value 1) without estimation.
    pub degenerate: bool,
}

/// Which estimator backs the mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CiTest {
    /// Maximum-likelihood plug-in MI, i.e. the G-squared test.
    #[serde(rename = "mi")]
    MiG2,
    /// James-Stein shrinkage of cell frequencies toward uniform.
    #[serde(rename = "mi-sh")]
    ShrinkageMi,
}

impl CiTest {
    pub fn run(self, data: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<CiTestResult, CiError> {
        match self {
            CiTest::MiG2 => mi_g2_test(data, x, y, z),
            CiTest::ShrinkageMi => mi_shrinkage_test(data, x, y, z),
        }
    }
}

impl fmt::Display for CiTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CiTest::MiG2 => "mi",
            CiTest::ShrinkageMi => "mi-sh",
        })
    }
}

impl FromStr for CiTest {
    type Err = CiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mi" | "g2" => Ok(CiTest::MiG2),
            "mi-sh" | "shrinkage" => Ok(CiTest::ShrinkageMi),
            other => Err(CiError::UnknownTest(other.to_string())),
        }
    }
}

/// How cell probabilities are estimated inside each stratum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shrinkage {
    /// Relative frequencies.
    None,
    /// Risk-minimizing intensity toward the uniform table.
    Optimal,
    /// A fixed intensity in `[0, 1]`.
    Fixed(f64),
}

pub fn mi_g2_test(data: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<CiTestResult, CiError> {
    run_test(data, x, y, z, Shrinkage::None)
}

pub fn mi_shrinkage_test(data: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<CiTestResult, CiError> {
    run_test(data, x, y, z, Shrinkage::Optimal)
}

fn run_test(
    data: &Dataset,
    x: usize,
    y: usize,
    z: &[usize],
    shrinkage: Shrinkage,
) -> Result<CiTestResult, CiError> {
    // orientation-independent floating point: always count with x < y
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let table = data.contingency_counts(x, y, z)?;
    let df = degrees_of_freedom(&table);
    if data.observed_levels(x) < 2 || data.observed_levels(y) < 2 {
        return Ok(CiTestResult {
            statistic: 0.0,
            degrees_of_freedom: df,
            p_value: 1.0,
            mi_estimate: 0.0,
            degenerate: true,
        });
    }
    let mi = conditional_mi(&table, shrinkage);
    let statistic = 2.0 * table.total() as f64 * mi;
    Ok(CiTestResult {
        statistic,
        degrees_of_freedom: df,
        p_value: chi_square_sf(statistic, df),
        mi_estimate: mi,
        degenerate: false,
    })
}

pub fn degrees_of_freedom(table: &ContingencyTable) -> u64 {
    let cells = ((table.rx() - 1) * (table.ry() - 1)) as u64;
    cells.saturating_mul(table.stratum_space()).max(1)
}

/// Upper tail of chi-square(`df`) at `statistic`, clamped to `[0, 1]`.
pub fn chi_square_sf(statistic: f64, df: u64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    dist.sf(statistic).clamp(0.0, 1.0)
}

/// `MI(x; y | z)` in nats: stratum MIs weighted by stratum frequency.
pub fn conditional_mi(table: &ContingencyTable, shrinkage: Shrinkage) -> f64 {
    let n = table.total() as f64;
    let (rx, ry) = (table.rx(), table.ry());
    let mut probs = vec![0.0; rx * ry];
    let mut total = 0.0;
    for (_, cells) in table.strata() {
        let nz: u64 = cells.iter().sum();
        if nz == 0 {
            continue;
        }
        let lambda = match shrinkage {
            Shrinkage::None => 0.0,
            Shrinkage::Optimal => shrinkage_intensity(cells),
            Shrinkage::Fixed(l) => l,
        };
        let nzf = nz as f64;
        let target = 1.0 / cells.len() as f64;
        for (p, &c) in probs.iter_mut().zip(cells) {
            *p = lambda * target + (1.0 - lambda) * (c as f64 / nzf);
        }
        total += nzf / n * table_mi(&probs, rx, ry);
    }
    total.max(0.0)
}

/// Hausser-Strimmer intensity toward the uniform table:
/// `(1 - sum p^2) / ((n - 1) sum (u - p)^2)`, clamped to `[0, 1]`.
pub fn shrinkage_intensity(cells: &[u64]) -> f64 {
    let n: u64 = cells.iter().sum();
    if n <= 1 {
        return 1.0;
    }
    let nf = n as f64;
    let u = 1.0 / cells.len() as f64;
    let mut spread = 0.0;
    let mut dist = 0.0;
    for &c in cells {
        let p = c as f64 / nf;
        spread += p * (1.0 - p);
        dist += (u - p) * (u - p);
    }
    if dist == 0.0 {
        return 1.0;
    }
    (spread / ((nf - 1.0) * dist)).clamp(0.0, 1.0)
}

/// MI of a joint probability table laid out row-major as `rx * ry`.
fn table_mi(probs: &[f64], rx: usize, ry: usize) -> f64 {
    let mut px = vec![0.0; rx];
    let mut py = vec![0.0; ry];
    for i in 0..rx {
        for j in 0..ry {
            let p = probs[i * ry + j];
            px[i] += p;
            py[j] += p;
        }
    }
    let mut mi = 0.0;
    for i in 0..rx {
        for j in 0..ry {
            let p = probs[i * ry + j];
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).ln();
            }
        }
    }
    mi
}
