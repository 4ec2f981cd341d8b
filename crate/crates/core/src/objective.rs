//! Secrecy rate `C_s(Q) = ln|I + H Q H^H| - ln|I + G Q G^H|` (nats), its
//! gradient, the quadratic surrogate used by the line search, and a Lipschitz
//! constant of the gradient.
//!
//! The gradient convention is the trace pairing: for a Hermitian direction `D`
//! the directional derivative of `C_s` at `Q` is `tr(grad(Q) D)`.

use nalgebra::{Cholesky, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelPair;
use crate::error::{invalid, numeric, Result};
use crate::linalg::{
    all_finite, cholesky, eigvalsh_desc, frobenius, hermitize, identity, log_det_from_cholesky,
    re_trace, re_trace_product, skew_norm, CMatrix,
};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-9;

/// Input covariance `Q` together with its power budget `P_T`.
///
/// Construction checks `Q = Q^H`, `Q >= 0` and `tr(Q) <= P_T`, each up to a
/// small relative tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    #[serde(with = "matrix_serde")]
    q: CMatrix,
    p_total: f64,
}

impl Covariance {
    pub fn new(q: CMatrix, p_total: f64) -> Result<Self> {
        if !(p_total > 0.0 && p_total.is_finite()) {
            return Err(invalid(format!(
                "power budget must be positive and finite, got {p_total}"
            )));
        }
        if q.nrows() != q.ncols() || q.nrows() == 0 {
            return Err(invalid(format!(
                "covariance must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if !all_finite(&q) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let scale = frobenius(&q).max(1.0);
        let skew = skew_norm(&q);
        if skew > HERMITIAN_TOL * scale {
            return Err(invalid(format!(
                "covariance is not Hermitian (skew {skew:e})"
            )));
        }
        let q = hermitize(&q);
        let eig = eigvalsh_desc(&q)?;
        let min_eig = eig[eig.len() - 1];
        if min_eig < -PSD_TOL * scale {
            return Err(invalid(format!(
                "covariance is not PSD (min eigenvalue {min_eig:e})"
            )));
        }
        let tr = re_trace(&q);
        if tr > p_total * (1.0 + TRACE_TOL) {
            return Err(invalid(format!(
                "trace {tr} exceeds power budget {p_total}"
            )));
        }
        Ok(Self { q, p_total })
    }

    /// Skips validation; callers guarantee feasibility (e.g. projection output).
    pub(crate) fn from_parts(q: CMatrix, p_total: f64) -> Self {
        Self { q, p_total }
    }

    pub fn zeros(n_t: usize, p_total: f64) -> Result<Self> {
        Self::new(CMatrix::zeros(n_t, n_t), p_total)
    }

    /// Uniform power allocation `(P_T / N_t) I`.
    pub fn uniform(n_t: usize, p_total: f64) -> Result<Self> {
        if n_t == 0 {
            return Err(invalid("covariance dimension must be at least 1"));
        }
        Self::new(identity(n_t).scale(p_total / n_t as f64), p_total)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }

    pub fn into_matrix(self) -> CMatrix {
        self.q
    }

    pub fn p_total(&self) -> f64 {
        self.p_total
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn trace(&self) -> f64 {
        re_trace(&self.q)
    }
}

/// Secrecy-rate evaluator bound to one channel. Works on raw Hermitian
/// matrices so the solver can evaluate extrapolated points.
#[derive(Debug, Clone)]
pub struct SecrecyObjective<'a> {
    ch: &'a ChannelPair,
    h_adj: CMatrix,
    g_adj: CMatrix,
}

impl<'a> SecrecyObjective<'a> {
    pub fn new(ch: &'a ChannelPair) -> Self {
        Self {
            ch,
            h_adj: ch.h().adjoint(),
            g_adj: ch.g().adjoint(),
        }
    }

    pub fn channel(&self) -> &ChannelPair {
        self.ch
    }

    fn check_dim(&self, q: &CMatrix) -> Result<()> {
        let n = self.ch.n_t();
        if q.nrows() != n || q.ncols() != n {
            return Err(invalid(format!(
                "covariance is {}x{} but the channel has {n} transmit antennas",
                q.nrows(),
                q.ncols()
            )));
        }
        Ok(())
    }

    fn factor(a: &CMatrix, a_adj: &CMatrix, q: &CMatrix) -> Result<Cholesky<Complex64, Dyn>> {
        let m = hermitize(&(identity(a.nrows()) + a * q * a_adj));
        cholesky(&m)
    }

    pub fn value(&self, q: &CMatrix) -> Result<f64> {
        self.check_dim(q)?;
        let bob = log_det_from_cholesky(&Self::factor(self.ch.h(), &self.h_adj, q)?);
        let eve = log_det_from_cholesky(&Self::factor(self.ch.g(), &self.g_adj, q)?);
        let v = bob - eve;
        if !v.is_finite() {
            return Err(numeric("secrecy rate is not finite"));
        }
        Ok(v)
    }

    /// `C_s(Q)` and `H^H (I + H Q H^H)^{-1} H - G^H (I + G Q G^H)^{-1} G`,
    /// sharing the two Cholesky factorizations.
    pub fn value_and_gradient(&self, q: &CMatrix) -> Result<(f64, CMatrix)> {
        self.check_dim(q)?;
        let fh = Self::factor(self.ch.h(), &self.h_adj, q)?;
        let fg = Self::factor(self.ch.g(), &self.g_adj, q)?;
        let v = log_det_from_cholesky(&fh) - log_det_from_cholesky(&fg);
        let grad = &self.h_adj * fh.solve(self.ch.h()) - &self.g_adj * fg.solve(self.ch.g());
        let grad = hermitize(&grad);
        if !v.is_finite() || !all_finite(&grad) {
            return Err(numeric("secrecy rate or gradient is not finite"));
        }
        Ok((v, grad))
    }

    pub fn gradient(&self, q: &CMatrix) -> Result<CMatrix> {
        Ok(self.value_and_gradient(q)?.1)
    }
}

/// `mu_beta(Y; X) = C_s(Y) + tr(grad(Y) (X - Y)) - beta/2 ||X - Y||^2` from
/// precomputed `C_s(Y)` and `grad(Y)`.
pub fn model_from_parts(
    value_y: f64,
    grad_y: &CMatrix,
    y: &CMatrix,
    x: &CMatrix,
    beta: f64,
) -> f64 {
    let d = x - y;
    value_y + re_trace_product(grad_y, &d) - 0.5 * beta * d.norm_squared()
}

pub fn secrecy_rate(q: &Covariance, ch: &ChannelPair) -> Result<f64> {
    SecrecyObjective::new(ch).value(q.matrix())
}

pub fn gradient(q: &Covariance, ch: &ChannelPair) -> Result<CMatrix> {
    SecrecyObjective::new(ch).gradient(q.matrix())
}

pub fn quadratic_model(
    q: &Covariance,
    q_bar: &Covariance,
    beta: f64,
    ch: &ChannelPair,
) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let (v, g) = SecrecyObjective::new(ch).value_and_gradient(q.matrix())?;
    Ok(model_from_parts(v, &g, q.matrix(), q_bar.matrix(), beta))
}

/// `lambda_max(H^H H)^2 + lambda_max(G^H G)^2`.
pub fn lipschitz_constant(ch: &ChannelPair) -> Result<f64> {
    let top = |a: &CMatrix| -> Result<f64> {
        let gram = a.adjoint() * a;
        Ok(eigvalsh_desc(&gram)?[0].max(0.0))
    };
    let sh = top(ch.h())?;
    let sg = top(ch.g())?;
    Ok(sh * sh + sg * sg)
}

/// Serde adapter for complex matrices in the `[[[re, im], ...], ...]` layout.
pub mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::channel::{decode_matrix, encode_matrix};
    use crate::linalg::CMatrix;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        encode_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        decode_matrix("matrix", &rows).map_err(serde::de::Error::custom)
    }
}
