//! Categorical data, resampling, and contingency counting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::model::Variable;
use crate::rng::{derive_seed, stream_rng, Stream};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatasetError {
    #[error("a dataset needs at least one row")]
    NoRows,
    #[error("{variables} variables but {columns} columns")]
    ColumnCount { variables: usize, columns: usize },
    #[error("column `{name}` has {found} rows, expected {expected}")]
    RaggedColumn { name: String, expected: usize, found: usize },
    #[error("column `{name}` row {row}: level index {value} out of range")]
    LevelOutOfRange { name: String, row: usize, value: u32 },
    #[error("column index {0} out of range")]
    NoSuchColumn(usize),
    #[error("columns must be distinct: x = {x}, y = {y}, z = {z:?}")]
    OverlappingColumns { x: usize, y: usize, z: Vec<usize> },
}

/// `n` rows of level indices over a fixed list of variables, stored by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<Variable>,
    columns: Vec<Vec<u32>>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, columns: Vec<Vec<u32>>) -> Result<Self, DatasetError> {
        if variables.len() != columns.len() {
            return Err(DatasetError::ColumnCount {
                variables: variables.len(),
                columns: columns.len(),
            });
        }
        let n = columns.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(DatasetError::NoRows);
        }
        for (var, col) in variables.iter().zip(&columns) {
            if col.len() != n {
                return Err(DatasetError::RaggedColumn {
                    name: var.name().to_string(),
                    expected: n,
                    found: col.len(),
                });
            }
            let r = var.cardinality() as u32;
            if let Some(row) = col.iter().position(|&v| v >= r) {
                return Err(DatasetError::LevelOutOfRange {
                    name: var.name().to_string(),
                    row,
                    value: col[row],
                });
            }
        }
        Ok(Self { variables, columns })
    }

    pub fn from_rows(variables: Vec<Variable>, rows: &[Vec<u32>]) -> Result<Self, DatasetError> {
        let width = variables.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); width];
        for row in rows {
            if row.len() != width {
                return Err(DatasetError::ColumnCount { variables: width, columns: row.len() });
            }
            for (c, &v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        }
        Dataset::new(variables, columns)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name().to_string()).collect()
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.columns[j]
    }

    pub fn cardinality(&self, j: usize) -> usize {
        self.variables[j].cardinality()
    }

    pub fn row(&self, i: usize) -> Vec<u32> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Number of distinct levels actually present in column `j`.
    pub fn observed_levels(&self, j: usize) -> usize {
        let mut seen = vec![false; self.cardinality(j)];
        for &v in &self.columns[j] {
            seen[v as usize] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Nonparametric bootstrap: `n` rows drawn uniformly with replacement.
    pub fn bootstrap_resample(&self, seed: u64) -> Dataset {
        let n = self.n_rows();
        let mut rng = stream_rng(seed);
        let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let columns = self
            .columns
            .iter()
            .map(|col| picks.iter().map(|&i| col[i]).collect())
            .collect();
        Dataset { variables: self.variables.clone(), columns }
    }

    /// Shuffles every column independently, each with its own derived stream.
    pub fn permute_columns(&self, seed: u64) -> Dataset {
        let columns = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, col)| {
                let mut col = col.clone();
                let mut rng = stream_rng(derive_seed(seed, Stream::PermutationColumn, j as u64));
                col.shuffle(&mut rng);
                col
            })
            .collect();
        Dataset { variables: self.variables.clone(), columns }
    }

    fn check_columns(&self, x: usize, y: usize, z: &[usize]) -> Result<(), DatasetError> {
        let width = self.n_cols();
        for &c in z.iter().chain([&x, &y]) {
            if c >= width {
                return Err(DatasetError::NoSuchColumn(c));
            }
        }
        let overlapping = x == y
            || z.contains(&x)
            || z.contains(&y)
            || z.iter().enumerate().any(|(i, c)| z[..i].contains(c));
        if overlapping {
            return Err(DatasetError::OverlappingColumns { x, y, z: z.to_vec() });
        }
        Ok(())
    }

    /// Joint configuration index of `cols` for every row (last column fastest).
    pub fn config_indices(&self, cols: &[usize]) -> Vec<u64> {
        let mut idx = vec![0u64; self.n_rows()];
        for &c in cols {
            let r = self.cardinality(c) as u64;
            for (acc, &v) in idx.iter_mut().zip(&self.columns[c]) {
                *acc = *acc * r + v as u64;
            }
        }
        idx
    }

    /// Counts over levels of `x` by levels of `y` within each observed
    /// configuration of `z`.
    pub fn contingency_counts(
        &self,
        x: usize,
        y: usize,
        z: &[usize],
    ) -> Result<ContingencyTable, DatasetError> {
        self.check_columns(x, y, z)?;
        let rx = self.cardinality(x);
        let ry = self.cardinality(y);
        let strata_key = self.config_indices(z);
        let mut strata: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        let (cx, cy) = (&self.columns[x], &self.columns[y]);
        for ((&key, &vx), &vy) in strata_key.iter().zip(cx).zip(cy) {
            let cell = vx as usize * ry + vy as usize;
            strata.entry(key).or_insert_with(|| vec![0; rx * ry])[cell] += 1;
        }
        Ok(ContingencyTable {
            rx,
            ry,
            z_cardinalities: z.iter().map(|&c| self.cardinality(c)).collect(),
            strata,
        })
    }
}

/// Three-way table of counts `n[x][y][z]`, stored sparsely over the `z`
/// configurations that actually occur.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rx: usize,
    ry: usize,
    z_cardinalities: Vec<usize>,
    strata: BTreeMap<u64, Vec<u64>>,
}

impl ContingencyTable {
    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn ry(&self) -> usize {
        self.ry
    }

    pub fn z_cardinalities(&self) -> &[usize] {
        &self.z_cardinalities
    }

    /// `prod r_z`, saturating; 1 when `z` is empty.
    pub fn stratum_space(&self) -> u64 {
        self.z_cardinalities
            .iter()
            .fold(1u64, |acc, &r| acc.saturating_mul(r as u64))
    }

    pub fn count(&self, x: usize, y: usize, z: u64) -> u64 {
        self.strata.get(&z).map_or(0, |cells| cells[x * self.ry + y])
    }

    /// Observed strata in increasing configuration order, each as a row-major
    /// `rx * ry` block.
    pub fn strata(&self) -> impl Iterator<Item = (u64, &[u64])> + '_ {
        self.strata.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn total(&self) -> u64 {
        self.strata.values().flatten().sum()
    }
}
