//! First-order optimality certificates.
//!
//! A feasible `Q` is a KKT point when there are `lambda >= 0` and `Z >= 0` with
//!
//! ```text
//! grad C_s(Q) - lambda I + Z = 0,   lambda (tr(Q) - P_T) = 0,   Q Z = 0.
//! ```
//!
//! Multiplying the first equation by `Q` and using `Q Z = 0` gives
//! `tr(grad C_s(Q) Q) = lambda P_T` at a KKT point, which is how `lambda` is
//! recovered; `Z` then follows from stationarity. Away from a KKT point the
//! recovered `Z` is generally indefinite and the residuals measure by how much.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{classify, complex_gaussian_matrix, ChannelPair};
use crate::error::{invalid, Result};
use crate::linalg::{frobenius, hermitize, identity, re_trace, re_trace_product, CMatrix};
use crate::objective::{matrix_serde, Covariance, SecrecyObjective};
use crate::projection::EigenSystem;
use crate::solver::{solve_apg, SolverConfig};

pub const DEFAULT_KKT_TOL: f64 = 1e-6;

const NOT_APPLICABLE: &str = "KKT test not applicable: C_s is identically zero on this channel (H^H H - G^H G is negative semidefinite)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Trace-constraint multiplier.
    pub lambda: f64,
    /// PSD-constraint multiplier `lambda I - grad C_s(Q)`.
    #[serde(with = "matrix_serde")]
    pub z: CMatrix,
    /// `||grad - lambda I + Z_+|| / max(1, ||grad||)` with `Z_+` the PSD part of `Z`.
    pub stationarity_residual: f64,
    pub z_min_eig: f64,
    /// `||Q Z|| / (1 + ||Q|| ||Z||)`.
    pub complementarity_qz: f64,
    /// `|tr(Q) - P_T| / P_T`.
    pub trace_gap: f64,
    /// Negative part of the smallest eigenvalue of `Q`.
    pub primal_feas: f64,
    /// False on channels with identically zero secrecy rate.
    pub applicable: bool,
    pub note: Option<String>,
}

impl KktReport {
    pub fn z_norm(&self) -> f64 {
        frobenius(&self.z)
    }

    /// All residuals within `tol`; always false when the test is not applicable.
    pub fn is_kkt_point(&self, tol: f64) -> bool {
        self.applicable
            && self.stationarity_residual <= tol
            && self.z_min_eig >= -tol * self.z_norm().max(1.0)
            && self.complementarity_qz <= tol
            && self.trace_gap <= tol
            && self.primal_feas <= tol
    }
}

pub fn recover_multipliers(q: &Covariance, ch: &ChannelPair) -> Result<(f64, CMatrix)> {
    let grad = SecrecyObjective::new(ch).gradient(q.matrix())?;
    Ok(multipliers_from_gradient(q, &grad))
}

fn multipliers_from_gradient(q: &Covariance, grad: &CMatrix) -> (f64, CMatrix) {
    let lambda = (re_trace_product(grad, q.matrix()) / q.p_total()).max(0.0);
    let z = hermitize(&(identity(q.dim()).scale(lambda) - grad));
    (lambda, z)
}

pub fn kkt_residuals(q: &Covariance, ch: &ChannelPair) -> Result<KktReport> {
    let grad = SecrecyObjective::new(ch).gradient(q.matrix())?;
    let (lambda, z) = multipliers_from_gradient(q, &grad);
    let z_sys = EigenSystem::decompose(&z)?;
    let z_plus = z_sys.recompose(
        &z_sys
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0))
            .collect::<Vec<_>>(),
    );
    let grad_norm = frobenius(&grad);
    let stationarity =
        frobenius(&(&grad - identity(q.dim()).scale(lambda) + &z_plus)) / grad_norm.max(1.0);
    let q_norm = frobenius(q.matrix());
    let z_norm = frobenius(&z);
    let complementarity = frobenius(&(q.matrix() * &z)) / (1.0 + q_norm * z_norm);
    let trace_gap = (re_trace(q.matrix()) - q.p_total()).abs() / q.p_total();
    let primal_feas = (-EigenSystem::decompose(q.matrix())?.min_eigenvalue()).max(0.0);
    let applicable = !classify(ch)?.is_degraded_zero();
    Ok(KktReport {
        lambda,
        z,
        stationarity_residual: stationarity,
        z_min_eig: z_sys.min_eigenvalue(),
        complementarity_qz: complementarity,
        trace_gap,
        primal_feas,
        applicable,
        note: (!applicable).then(|| NOT_APPLICABLE.to_string()),
    })
}

/// Random full-rank feasible start: `A A^H` for complex Gaussian `A`, scaled to trace `P_T`.
pub fn random_feasible_start<R: Rng + ?Sized>(
    n_t: usize,
    p_total: f64,
    rng: &mut R,
) -> Result<Covariance> {
    let a = complex_gaussian_matrix(n_t, n_t, rng);
    let s = hermitize(&(&a * a.adjoint()));
    let tr = re_trace(&s);
    Covariance::new(s.scale(p_total / tr), p_total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartOutcome {
    pub start: usize,
    pub objective: f64,
    pub iterations: usize,
    #[serde(with = "matrix_serde")]
    pub q: CMatrix,
    pub kkt: KktReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub max_pairwise_dist: f64,
    pub objective_spread: f64,
    /// Row-major `n_starts x n_starts` Frobenius distances between final points.
    pub pairwise_dist: Vec<Vec<f64>>,
    pub per_start: Vec<StartOutcome>,
    /// False on negative-semidefinite channels, where uniqueness is not claimed.
    pub theorem_applies: bool,
}

impl UniquenessReport {
    pub fn per_start_kkt(&self) -> impl Iterator<Item = &KktReport> {
        self.per_start.iter().map(|s| &s.kkt)
    }
}

/// Runs [`solve_apg`] from `n_starts` seeded random feasible points in parallel.
/// Start `i` draws from ChaCha20 seeded with `seed` on stream `i`, so the
/// report does not depend on scheduling.
pub fn uniqueness_experiment(
    ch: &ChannelPair,
    p_total: f64,
    n_starts: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<UniquenessReport> {
    run_uniqueness(ch, p_total, n_starts, seed, cfg, true)
}

pub fn uniqueness_experiment_sequential(
    ch: &ChannelPair,
    p_total: f64,
    n_starts: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<UniquenessReport> {
    run_uniqueness(ch, p_total, n_starts, seed, cfg, false)
}

fn run_uniqueness(
    ch: &ChannelPair,
    p_total: f64,
    n_starts: usize,
    seed: u64,
    cfg: &SolverConfig,
    parallel: bool,
) -> Result<UniquenessReport> {
    if n_starts < 2 {
        return Err(invalid(format!("need at least 2 starts, got {n_starts}")));
    }
    let run = |i: usize| -> Result<StartOutcome> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let q0 = random_feasible_start(ch.n_t(), p_total, &mut rng)?;
        let r = solve_apg(ch, p_total, cfg, Some(&q0))?;
        Ok(StartOutcome {
            start: i,
            objective: r.objective,
            iterations: r.iterations(),
            q: r.q_opt.into_matrix(),
            kkt: r.kkt,
        })
    };
    let per_start: Vec<StartOutcome> = if parallel {
        (0..n_starts)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        (0..n_starts).map(run).collect::<Result<_>>()?
    };

    let mut pairwise = vec![vec![0.0; n_starts]; n_starts];
    let mut max_dist: f64 = 0.0;
    for a in 0..n_starts {
        for b in a + 1..n_starts {
            let d = frobenius(&(&per_start[a].q - &per_start[b].q));
            pairwise[a][b] = d;
            pairwise[b][a] = d;
            max_dist = max_dist.max(d);
        }
    }
    let (lo, hi) = per_start
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.objective), hi.max(s.objective))
        });
    Ok(UniquenessReport {
        max_pairwise_dist: max_dist,
        objective_spread: hi - lo,
        pairwise_dist: pairwise,
        per_start,
        theorem_applies: !classify(ch)?.is_degraded_zero(),
    })
}
