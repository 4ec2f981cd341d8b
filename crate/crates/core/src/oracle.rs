//! Brute-force maximizers of the secrecy rate for one and two transmit
//! antennas. They share nothing with the iterative solvers beyond the
//! objective and projection, and certify global optimality at desk scale.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelPair;
use crate::error::{invalid, Result};
use crate::linalg::{c, CMatrix};
use crate::objective::{lipschitz_constant, secrecy_rate, Covariance, SecrecyObjective};
use crate::projection::project_matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_objective: f64,
    pub best_q: Covariance,
    pub evaluations: u64,
    pub grid_spec: String,
    /// Best point after a short fixed-step ascent from the grid winner.
    pub refined_objective: Option<f64>,
    pub refined_q: Option<Covariance>,
}

/// Exhaustive search of `q` on `grid_points` equispaced values in `[0, P_T]`.
pub fn oracle_scalar(
    h: Complex64,
    g: Complex64,
    p_total: f64,
    grid_points: usize,
) -> Result<OracleResult> {
    if grid_points < 2 {
        return Err(invalid(format!(
            "need at least 2 grid points, got {grid_points}"
        )));
    }
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(invalid(format!(
            "power budget must be positive and finite, got {p_total}"
        )));
    }
    let (h2, g2) = (h.norm_sqr(), g.norm_sqr());
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..grid_points {
        let q = p_total * i as f64 / (grid_points - 1) as f64;
        let v = (h2 * q).ln_1p() - (g2 * q).ln_1p();
        if v > best.0 {
            best = (v, q);
        }
    }
    let ch = ChannelPair::scalar(h, g)?;
    let best_q = Covariance::new(CMatrix::from_element(1, 1, c(best.1, 0.0)), p_total)?;
    Ok(OracleResult {
        best_objective: secrecy_rate(&best_q, &ch)?,
        best_q,
        evaluations: grid_points as u64,
        grid_spec: format!("q in [0, {p_total}] on {grid_points} equispaced points"),
        refined_objective: None,
        refined_q: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2x2 {
    pub power_steps: usize,
    pub angle_steps: usize,
    /// Fixed-step (`1 / L`) ascent iterations applied to the grid winner; 0 disables.
    pub refine_iters: usize,
}

impl Default for Grid2x2 {
    fn default() -> Self {
        Self {
            power_steps: 200,
            angle_steps: 64,
            refine_iters: 2000,
        }
    }
}

/// `det(I + Q A)` for 2x2 `Q`, `A`; real for Hermitian PSD arguments.
fn det_i_plus(q: &[[Complex64; 2]; 2], a: &[[Complex64; 2]; 2]) -> f64 {
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = q[i][0] * a[0][j] + q[i][1] * a[1][j];
        }
        m[i][i] += 1.0;
    }
    (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re
}

fn gram2(x: &CMatrix) -> [[Complex64; 2]; 2] {
    let g = x.adjoint() * x;
    [[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]]
}

/// `U diag(a, b) U^H` with `U = [[cos t, -sin t e^{-i p}], [sin t e^{i p}, cos t]]`.
fn spectral_point(a: f64, b: f64, theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    let u1 = [c(co, 0.0), e * s];
    let u2 = [-e.conj() * s, c(co, 0.0)];
    let mut q = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            q[i][j] = u1[i] * u1[j].conj() * a + u2[i] * u2[j].conj() * b;
        }
    }
    q
}

fn to_matrix(q: &[[Complex64; 2]; 2]) -> CMatrix {
    let m = CMatrix::from_row_slice(2, 2, &[q[0][0], q[0][1], q[1][0], q[1][1]]);
    crate::linalg::hermitize(&m)
}

/// Grid search over `Q = U diag(a, b) U^H` with `a in [0, P_T]`,
/// `b in [0, P_T - a]`, `theta in [0, pi/2]`, `phi in [0, 2 pi)`. Every 2x2
/// feasible covariance has this form. Ties go to the lexicographically
/// smallest grid index, so the result does not depend on thread scheduling.
pub fn oracle_2x2(ch: &ChannelPair, p_total: f64, grid: Grid2x2) -> Result<OracleResult> {
    if ch.n_t() != 2 {
        return Err(invalid(format!(
            "oracle_2x2 needs 2 transmit antennas, got {}",
            ch.n_t()
        )));
    }
    if grid.power_steps < 8 || grid.angle_steps < 8 {
        return Err(invalid("grid needs at least 8 power and 8 angle steps"));
    }
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(invalid(format!(
            "power budget must be positive and finite, got {p_total}"
        )));
    }
    let (ah, ag) = (gram2(ch.h()), gram2(ch.g()));
    let ps = grid.power_steps;
    let ns = grid.angle_steps;
    let frac = |i: usize| i as f64 / (ps - 1) as f64;
    let theta = |k: usize| FRAC_PI_2 * k as f64 / (ns - 1) as f64;
    let phi = |l: usize| 2.0 * PI * l as f64 / ns as f64;

    // (value, (i, j, k, l)); strict comparison keeps the earliest index within a chunk.
    let best = (0..ps)
        .into_par_iter()
        .map(|i| {
            let a = p_total * frac(i);
            let mut local = (f64::NEG_INFINITY, (i, 0, 0, 0));
            for j in 0..ps {
                let b = (p_total - a) * frac(j);
                for k in 0..ns {
                    for l in 0..ns {
                        let q = spectral_point(a, b, theta(k), phi(l));
                        let v = det_i_plus(&q, &ah).ln() - det_i_plus(&q, &ag).ln();
                        if v > local.0 {
                            local = (v, (i, j, k, l));
                        }
                    }
                }
            }
            local
        })
        .reduce(
            || (f64::NEG_INFINITY, (usize::MAX, 0, 0, 0)),
            |x, y| match x.0.total_cmp(&y.0) {
                std::cmp::Ordering::Greater => x,
                std::cmp::Ordering::Less => y,
                std::cmp::Ordering::Equal => {
                    if x.1 <= y.1 {
                        x
                    } else {
                        y
                    }
                }
            },
        );
    let (i, j, k, l) = best.1;
    let a = p_total * frac(i);
    let b = (p_total - a) * frac(j);
    let q_grid = to_matrix(&spectral_point(a, b, theta(k), phi(l)));
    // Re-project to absorb rounding in the trace (a + b = P_T on the boundary).
    let q_grid = project_matrix(&q_grid, p_total)?;
    let best_q = Covariance::new(q_grid, p_total)?;
    let best_objective = secrecy_rate(&best_q, ch)?;

    let (refined_objective, refined_q) = if grid.refine_iters > 0 {
        let (v, q) = refine(ch, &best_q, grid.refine_iters)?;
        (Some(v), Some(q))
    } else {
        (None, None)
    };
    Ok(OracleResult {
        best_objective,
        best_q,
        evaluations: (ps * ps * ns * ns) as u64,
        grid_spec: format!(
            "a: {ps} steps on [0, P_T]; b: {ps} steps on [0, P_T - a]; theta: {ns} steps on [0, pi/2]; phi: {ns} steps on [0, 2pi); refine: {} fixed-step iterations",
            grid.refine_iters
        ),
        refined_objective,
        refined_q,
    })
}

/// Fixed-step projected gradient ascent with step `1 / L`, keeping the best point.
fn refine(ch: &ChannelPair, start: &Covariance, iters: usize) -> Result<(f64, Covariance)> {
    let l = lipschitz_constant(ch)?;
    let obj = SecrecyObjective::new(ch);
    let p = start.p_total();
    let mut q = start.matrix().clone();
    let (mut v, mut g) = obj.value_and_gradient(&q)?;
    let mut best = (v, q.clone());
    if l <= 0.0 {
        return Ok((v, Covariance::new(q, p)?));
    }
    for _ in 0..iters {
        q = project_matrix(&(&q + g.scale(1.0 / l)), p)?;
        (v, g) = obj.value_and_gradient(&q)?;
        if v > best.0 {
            best = (v, q.clone());
        }
    }
    Ok((best.0, Covariance::new(best.1, p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;

    #[test]
    fn scalar_endpoint_optimum() {
        let r = oracle_scalar(c(2.0, 0.0), c(1.0, 0.0), 1.0, 100_000).unwrap();
        assert!((r.best_objective - 2.5f64.ln()).abs() < 1e-9);
        assert!((r.best_q.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert_eq!(r.evaluations, 100_000);
    }

    #[test]
    fn scalar_weak_bob_stays_silent() {
        let r = oracle_scalar(c(0.5, 0.5), c(1.0, 0.0), 3.0, 1000).unwrap();
        assert_eq!(r.best_objective, 0.0);
        assert_eq!(r.best_q.matrix()[(0, 0)].re, 0.0);
        let same = oracle_scalar(c(1.0, 1.0), c(1.0, 1.0), 3.0, 1000).unwrap();
        assert_eq!(same.best_objective, 0.0);
        assert!(oracle_scalar(c(1.0, 0.0), c(0.0, 0.0), 1.0, 1).is_err());
    }

    #[test]
    fn identity_bob_silent_eve_splits_power() {
        let ch = ChannelPair::new(identity(2), CMatrix::zeros(2, 2)).unwrap();
        let p = 4.0;
        let grid = Grid2x2 {
            power_steps: 41,
            angle_steps: 8,
            refine_iters: 0,
        };
        let r = oracle_2x2(&ch, p, grid).unwrap();
        assert!((r.best_objective - 2.0 * (1.0 + p / 2.0f64).ln()).abs() < 1e-9);
        assert!((r.best_q.matrix() - identity(2).scale(p / 2.0)).norm() < 1e-9);
    }

    #[test]
    fn degraded_channel_best_is_zero() {
        let ch = ChannelPair::new(identity(2), identity(2).scale(2.0)).unwrap();
        let grid = Grid2x2 {
            power_steps: 16,
            angle_steps: 8,
            refine_iters: 10,
        };
        let r = oracle_2x2(&ch, 1.0, grid).unwrap();
        assert_eq!(r.best_objective, 0.0);
        assert!(r.best_q.matrix().norm() < 1e-15);
    }

    #[test]
    fn rejects_wrong_dimension_and_coarse_grid() {
        let ch = crate::channel::generate_channel(3, 2, 2, 1).unwrap();
        assert!(oracle_2x2(&ch, 1.0, Grid2x2::default()).is_err());
        let ch2 = crate::channel::generate_channel(2, 2, 2, 1).unwrap();
        let coarse = Grid2x2 {
            power_steps: 4,
            angle_steps: 8,
            refine_iters: 0,
        };
        assert!(oracle_2x2(&ch2, 1.0, coarse).is_err());
    }

    #[test]
    fn fast_evaluation_matches_objective() {
        let ch = crate::channel::generate_channel(2, 3, 2, 2).unwrap();
        let q = spectral_point(1.3, 0.4, 0.7, 2.1);
        let v = det_i_plus(&q, &gram2(ch.h())).ln() - det_i_plus(&q, &gram2(ch.g())).ln();
        let cov = Covariance::new(to_matrix(&q), 2.0).unwrap();
        assert!((v - secrecy_rate(&cov, &ch).unwrap()).abs() < 1e-12);
    }
}
