//! Discrete optimal transport: plan algebra, the closed-form 1D solver that
//! powers the sliced distances, and an exact small-instance solver.

mod exact;
mod map;
mod one_d;

pub use exact::{ot_exact, EXACT_CELL_LIMIT};
pub use map::{interpolated_image, plan_to_map};
pub use one_d::ot_1d;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Tolerance on marginal constraints of a coupling.
pub const MARGINAL_TOL: f64 = 1e-10;

/// Tolerance for "weights sum to one" preconditions.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A nonnegative coupling with prescribed marginals, stored as sorted
/// coordinate triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    entries: Vec<(usize, usize, f64)>,
    row_marginal: DVector<f64>,
    col_marginal: DVector<f64>,
}

impl TransportPlan {
    /// Validates entry signs, index ranges and both marginal constraints
    /// (within [`MARGINAL_TOL`]).
    pub fn new(
        mut entries: Vec<(usize, usize, f64)>,
        row_marginal: DVector<f64>,
        col_marginal: DVector<f64>,
    ) -> Result<Self> {
        let (lp, lq) = (row_marginal.len(), col_marginal.len());
        let mut row_sums = vec![0.0f64; lp];
        let mut col_sums = vec![0.0f64; lq];
        for &(i, j, v) in &entries {
            if i >= lp || j >= lq {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i},{j}) out of range for {lp}x{lq} plan"
                )));
            }
            if !(v >= 0.0) {
                return Err(Error::DegenerateInput(format!(
                    "negative or NaN mass {v} at ({i},{j})"
                )));
            }
            row_sums[i] += v;
            col_sums[j] += v;
        }
        for (i, &s) in row_sums.iter().enumerate() {
            if (s - row_marginal[i]).abs() > MARGINAL_TOL {
                return Err(Error::DegenerateInput(format!(
                    "row {i} sums to {s:.17}, marginal is {:.17}",
                    row_marginal[i]
                )));
            }
        }
        for (j, &s) in col_sums.iter().enumerate() {
            if (s - col_marginal[j]).abs() > MARGINAL_TOL {
                return Err(Error::DegenerateInput(format!(
                    "column {j} sums to {s:.17}, marginal is {:.17}",
                    col_marginal[j]
                )));
            }
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        Ok(Self {
            entries,
            row_marginal,
            col_marginal,
        })
    }

    /// The independent coupling `sigma_ij = mu_i nu_j` (dense). Default cold
    /// start for the alternating algorithms.
    pub fn product(row_marginal: DVector<f64>, col_marginal: DVector<f64>) -> Self {
        let mut entries = Vec::with_capacity(row_marginal.len() * col_marginal.len());
        for i in 0..row_marginal.len() {
            for j in 0..col_marginal.len() {
                entries.push((i, j, row_marginal[i] * col_marginal[j]));
            }
        }
        Self {
            entries,
            row_marginal,
            col_marginal,
        }
    }

    /// Diagonal plan `sigma = diag(mu)`; requires equal marginals.
    pub fn diagonal(marginal: DVector<f64>) -> Self {
        let entries = marginal
            .iter()
            .enumerate()
            .map(|(i, &w)| (i, i, w))
            .collect();
        Self {
            entries,
            row_marginal: marginal.clone(),
            col_marginal: marginal,
        }
    }

    /// Builds from a dense matrix, dropping exact zeros.
    pub fn from_dense(
        sigma: &DMatrix<f64>,
        row_marginal: DVector<f64>,
        col_marginal: DVector<f64>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for i in 0..sigma.nrows() {
            for j in 0..sigma.ncols() {
                let v = sigma[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self::new(entries, row_marginal, col_marginal)
    }

    pub fn source_size(&self) -> usize {
        self.row_marginal.len()
    }

    pub fn target_size(&self) -> usize {
        self.col_marginal.len()
    }

    /// Sorted (row, col, mass) triples.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn row_marginal(&self) -> &DVector<f64> {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &DVector<f64> {
        &self.col_marginal
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.source_size(), self.target_size());
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// Transport cost under a per-pair squared-distance function.
    pub fn cost_with(&self, sq_dist: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| v * sq_dist(i, j))
            .sum()
    }

    /// True if the support is monotone: no pair of entries transports in
    /// crossing order under the coordinates `x` (rows) and `y` (columns).
    pub fn is_monotone_under(&self, x: &[f64], y: &[f64]) -> bool {
        for (a, &(i1, j1, _)) in self.entries.iter().enumerate() {
            for &(i2, j2, _) in &self.entries[a + 1..] {
                let dx = x[i1] - x[i2];
                let dy = y[j1] - y[j2];
                if dx * dy < 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Validates a weight vector: strictly positive, sums to one.
pub(crate) fn check_weights(w: &DVector<f64>, what: &str) -> Result<()> {
    if w.is_empty() {
        return Err(Error::DegenerateInput(format!("{what}: empty weights")));
    }
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateInput(format!(
            "{what}: weights must be strictly positive"
        )));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::DegenerateInput(format!(
            "{what}: weights sum to {sum:.17}, expected 1"
        )));
    }
    Ok(())
}
