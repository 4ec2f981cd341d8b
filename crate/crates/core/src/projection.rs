//! Euclidean projection onto `{Q >= 0, tr(Q) <= P_T}`.
//!
//! The projection acts on the spectrum only: decompose `X = U diag(x) U^H`,
//! shift every eigenvalue down by a common water level `c >= 0` and clip at
//! zero. The level solves `sum_i [x_i - c]_+ = P_T` when the clipped spectrum
//! exceeds the budget and is zero otherwise.

use crate::error::{invalid, Result};
use crate::linalg::{eigh_desc, hermitize, reconstruct, CMatrix};
use crate::objective::Covariance;

/// Spectral decomposition `X = U diag(x) U^H` of a Hermitian matrix,
/// eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    /// Decomposes the Hermitian part of `x`.
    pub fn decompose(x: &CMatrix) -> Result<Self> {
        if x.nrows() != x.ncols() {
            return Err(invalid(format!(
                "expected a square matrix, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let (values, vectors) = eigh_desc(&hermitize(x))?;
        Ok(Self {
            eigenvalues: values.iter().copied().collect(),
            eigenvectors: vectors,
        })
    }

    /// `U diag(values) U^H` with this system's eigenvectors.
    pub fn recompose(&self, values: &[f64]) -> CMatrix {
        reconstruct(&self.eigenvectors, values)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Water level `c` for the spectrum `x` and budget `p_total`.
///
/// Exact: sorts descending and scans the prefix sums for the active set, so
/// `c = (sum_{i<=k} y_i - P_T) / k` for the largest `k` with `y_k > c`.
pub fn water_level(x: &[f64], p_total: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(invalid("water level of an empty spectrum"));
    }
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(invalid(format!(
            "power budget must be positive and finite, got {p_total}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("spectrum has non-finite entries"));
    }
    let positive: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if positive <= p_total {
        return Ok(0.0);
    }
    let mut y = x.to_vec();
    y.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    for k in 0..y.len() {
        prefix += y[k];
        let level = (prefix - p_total) / (k + 1) as f64;
        if k + 1 == y.len() || y[k + 1] <= level {
            return Ok(level.max(0.0));
        }
    }
    unreachable!("the scan always terminates at the last index")
}

pub fn project_matrix(x: &CMatrix, p_total: f64) -> Result<CMatrix> {
    let sys = EigenSystem::decompose(x)?;
    let level = water_level(&sys.eigenvalues, p_total)?;
    let shrunk: Vec<f64> = sys
        .eigenvalues
        .iter()
        .map(|v| (v - level).max(0.0))
        .collect();
    Ok(sys.recompose(&shrunk))
}

/// Frobenius-nearest feasible covariance to the Hermitian part of `x`.
pub fn project(x: &CMatrix, p_total: f64) -> Result<Covariance> {
    Ok(Covariance::from_parts(project_matrix(x, p_total)?, p_total))
}
