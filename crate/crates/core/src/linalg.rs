//! Small dense complex helpers shared by the numerical modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{numeric, Result};

/// Dense complex matrix used for channels, covariances and gradients.
pub type CMatrix = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal embedded as a complex matrix.
pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(values[i], 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// `(X + X^H) / 2`.
pub fn hermitize(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).scale(0.5)
}

pub fn frobenius(x: &CMatrix) -> f64 {
    x.norm()
}

/// Real part of `tr(A B)` without forming the product.
pub fn re_trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn re_trace(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

pub fn all_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm of `X - X^H`.
pub fn skew_norm(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted descending.
pub fn eigh_desc(a: &CMatrix) -> Result<(DVector<f64>, CMatrix)> {
    if !all_finite(a) {
        return Err(numeric("eigendecomposition of a non-finite matrix"));
    }
    let n = a.nrows();
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(numeric(
            "eigendecomposition produced non-finite eigenvalues",
        ));
    }
    Ok((values, vectors))
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn eigvalsh_desc(a: &CMatrix) -> Result<DVector<f64>> {
    if !all_finite(a) {
        return Err(numeric("eigenvalues of a non-finite matrix"));
    }
    let mut v: Vec<f64> = SymmetricEigen::new(hermitize(a))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|x, y| y.total_cmp(x));
    Ok(DVector::from_vec(v))
}

/// `U diag(values) U^H`, Hermitized.
pub fn reconstruct(vectors: &CMatrix, values: &[f64]) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    hermitize(&(scaled * vectors.adjoint()))
}

/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// nalgebra takes complex square roots of the pivots, so a negative pivot shows
/// up as an imaginary diagonal entry rather than a failure; reject those here.
pub fn cholesky(a: &CMatrix) -> Result<Cholesky<Complex64, Dyn>> {
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| numeric("matrix is not Hermitian positive definite"))?;
    let pivots_ok = chol
        .l_dirty()
        .diagonal()
        .iter()
        .all(|d| d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-12 * d.re);
    if !pivots_ok {
        return Err(numeric("matrix is not Hermitian positive definite"));
    }
    Ok(chol)
}

/// `ln det(A)` from the Cholesky factor `A = L L^H`.
pub fn log_det_from_cholesky(chol: &Cholesky<Complex64, Dyn>) -> f64 {
    2.0 * chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.re.ln())
        .sum::<f64>()
}

pub fn log_det_hpd(a: &CMatrix) -> Result<f64> {
    Ok(log_det_from_cholesky(&cholesky(a)?))
}
