//! Accelerated projected gradient ascent with backtracking and an adaptive
//! momentum monitor, plus a fixed-step projected gradient baseline.
//!
//! Each APG iteration:
//! 1. gradient step `Q_k = P(Y_k + grad(Y_k) / beta)`, with `beta` multiplied
//!    by `gamma_u` until `C_s(Q_k) >= mu_beta(Y_k; Q_k)`;
//! 2. relaxation `beta <- max(L_0, beta / gamma_u)` for the next iteration;
//! 3. extrapolation `Z_k = Q_k + alpha (Q_k - Q_{k-1})`;
//! 4. monitor: a feasible `Z_k` that does not lower the objective becomes the
//!    next base point and `alpha <- min(alpha / xi, 1)`; otherwise the base
//!    point is `Q_k` and `alpha <- xi * alpha`.
//!
//! The iterate objectives `C_s(Q_k)` form a non-decreasing sequence.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{classify, ChannelPair};
use crate::error::{invalid, Error, Result};
use crate::kkt::{kkt_residuals, KktReport};
use crate::linalg::{frobenius, hermitize, re_trace, CMatrix};
use crate::objective::{
    lipschitz_constant, model_from_parts, Covariance, SecrecyObjective, TRACE_TOL,
};
use crate::projection::{project_matrix, EigenSystem};

/// Rounding allowance in the sufficient-ascent test, relative to `max(1, |C_s(Y)|)`.
/// The log-determinants carry errors of order 1e-14, so once steps reach that
/// scale the literal test fails on noise and would inflate `beta` without bound.
const MODEL_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial `beta`; defaults to `l0`.
    pub beta0: Option<f64>,
    /// Floor for `beta`; defaults to `max(1e-12, 1e-6 * L)`. It has to sit below
    /// the curvature near the optimum, which at high power is far below `L`.
    pub l0: Option<f64>,
    pub gamma_u: f64,
    pub xi: f64,
    pub alpha0: f64,
    /// Stop once the objective rose by at most `epsilon` over the last `window` iterations.
    pub epsilon: f64,
    /// `1` gives the single-step rule.
    pub window: usize,
    pub max_iters: usize,
    pub max_linesearch: usize,
    /// Relative tolerance of the extrapolation feasibility test.
    pub feas_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta0: None,
            l0: None,
            gamma_u: 2.0,
            xi: 0.5,
            alpha0: 1.0,
            epsilon: 1e-8,
            window: 5,
            max_iters: 10_000,
            max_linesearch: 200,
            feas_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn with_stopping(mut self, epsilon: f64, window: usize) -> Self {
        self.epsilon = epsilon;
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                Err(invalid(format!("{name} must be positive, got {x}")))
            }
            _ => Ok(()),
        };
        positive("beta0", self.beta0)?;
        positive("l0", self.l0)?;
        if !(self.gamma_u > 1.0 && self.gamma_u.is_finite()) {
            return Err(invalid(format!(
                "gamma_u must exceed 1, got {}",
                self.gamma_u
            )));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(invalid(format!("xi must lie in (0, 1), got {}", self.xi)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(invalid(format!(
                "alpha0 must lie in (0, 1], got {}",
                self.alpha0
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(invalid(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.window == 0 || self.max_iters == 0 || self.max_linesearch == 0 {
            return Err(invalid(
                "window, max_iters and max_linesearch must be at least 1",
            ));
        }
        if !(self.feas_tol >= 0.0) {
            return Err(invalid(format!(
                "feas_tol must be non-negative, got {}",
                self.feas_tol
            )));
        }
        Ok(())
    }

    /// Fills in the channel-dependent defaults.
    pub fn resolve(&self, ch: &ChannelPair) -> Result<ResolvedConfig> {
        self.validate()?;
        let lipschitz = lipschitz_constant(ch)?;
        let l0 = self.l0.unwrap_or_else(|| (1e-6 * lipschitz).max(1e-12));
        let beta0 = self.beta0.unwrap_or(l0);
        Ok(ResolvedConfig {
            beta0,
            l0,
            lipschitz,
            settings: self.clone(),
        })
    }
}

/// Configuration echo stored with every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub beta0: f64,
    pub l0: f64,
    pub lipschitz: f64,
    pub settings: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgConfig {
    /// Defaults to `1 / L`.
    pub step: Option<f64>,
    pub max_iters: usize,
    pub epsilon: f64,
    pub window: usize,
}

impl Default for PgConfig {
    fn default() -> Self {
        Self {
            step: None,
            max_iters: 5_000_000,
            epsilon: 1e-8,
            window: 5,
        }
    }
}

impl PgConfig {
    pub fn with_stopping(mut self, epsilon: f64, window: usize) -> Self {
        self.epsilon = epsilon;
        self.window = window;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    DegradedZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    /// `beta` accepted by the line search at this iteration (`1 / step` for the fixed-step baseline).
    pub beta: f64,
    /// Momentum after the monitor update (0 for the baseline).
    pub alpha: f64,
    /// Gradient steps tried, including the accepted one.
    pub linesearch_steps: usize,
    /// `||grad C_s(Q_k)||_F`.
    pub grad_norm: f64,
    /// `||Q_k - Q_{k-1}||_F`.
    pub step_norm: f64,
    pub extrapolation_accepted: bool,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

pub const TRACE_CSV_HEADER: &str =
    "iter,objective_nats,beta,alpha,linesearch_steps,grad_norm,step_norm,extrap_accepted,elapsed_s";

impl IterationTrace {
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    /// Iterations performed, not counting the initial point.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.k,
                r.objective,
                r.beta,
                r.alpha,
                r.linesearch_steps,
                r.grad_norm,
                r.step_norm,
                u8::from(r.extrapolation_accepted),
                r.elapsed
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub q_opt: Covariance,
    pub objective: f64,
    pub trace: IterationTrace,
    pub kkt: KktReport,
    pub status: SolveStatus,
    pub config: ResolvedConfig,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }
}

fn initial_point(ch: &ChannelPair, p_total: f64, q_init: Option<&Covariance>) -> Result<CMatrix> {
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(invalid(format!(
            "power budget must be positive and finite, got {p_total}"
        )));
    }
    match q_init {
        None => Ok(Covariance::uniform(ch.n_t(), p_total)?.into_matrix()),
        Some(q) => {
            if q.dim() != ch.n_t() {
                return Err(invalid(format!(
                    "initial covariance is {0}x{0} but the channel has {1} transmit antennas",
                    q.dim(),
                    ch.n_t()
                )));
            }
            if q.trace() > p_total * (1.0 + TRACE_TOL) {
                return Err(invalid(format!(
                    "initial covariance trace {} exceeds {p_total}",
                    q.trace()
                )));
            }
            Ok(q.matrix().clone())
        }
    }
}

fn degraded_result(
    ch: &ChannelPair,
    p_total: f64,
    config: ResolvedConfig,
    start: Instant,
) -> Result<SolveResult> {
    let q_opt = Covariance::zeros(ch.n_t(), p_total)?;
    let kkt = kkt_residuals(&q_opt, ch)?;
    let record = IterationRecord {
        k: 0,
        objective: 0.0,
        beta: config.beta0,
        alpha: config.settings.alpha0,
        linesearch_steps: 0,
        grad_norm: frobenius(&ch.gram_difference()),
        step_norm: 0.0,
        extrapolation_accepted: false,
        elapsed: start.elapsed().as_secs_f64(),
    };
    Ok(SolveResult {
        q_opt,
        objective: 0.0,
        trace: IterationTrace {
            records: vec![record],
        },
        kkt,
        status: SolveStatus::DegradedZero,
        config,
    })
}

fn stalled(history: &[f64], epsilon: f64, window: usize) -> bool {
    let n = history.len();
    n > window && history[n - 1] - history[n - 1 - window] <= epsilon
}

/// Feasibility test for an extrapolated point; returns the point with any
/// slightly negative eigenvalues clipped to zero.
fn feasible_extrapolation(z: &CMatrix, p_total: f64, feas_tol: f64) -> Result<Option<CMatrix>> {
    let z = hermitize(z);
    if re_trace(&z) > p_total * (1.0 + feas_tol) {
        return Ok(None);
    }
    let sys = EigenSystem::decompose(&z)?;
    let min_eig = sys.min_eigenvalue();
    if min_eig < -feas_tol * frobenius(&z).max(1.0) {
        return Ok(None);
    }
    if min_eig >= 0.0 {
        return Ok(Some(z));
    }
    let clipped: Vec<f64> = sys.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    Ok(Some(sys.recompose(&clipped)))
}

/// Accelerated projected gradient ascent on `C_s` over `{Q >= 0, tr(Q) <= P_T}`.
///
/// Channels whose `H^H H - G^H G` is negative semidefinite have zero secrecy
/// capacity and return `Q = 0` with [`SolveStatus::DegradedZero`] before any
/// iteration.
pub fn solve_apg(
    ch: &ChannelPair,
    p_total: f64,
    cfg: &SolverConfig,
    q_init: Option<&Covariance>,
) -> Result<SolveResult> {
    let start = Instant::now();
    let config = cfg.resolve(ch)?;
    let mut q_prev = initial_point(ch, p_total, q_init)?;
    if classify(ch)?.is_degraded_zero() {
        return degraded_result(ch, p_total, config, start);
    }
    let obj = SecrecyObjective::new(ch);
    let (c0, g0) = obj.value_and_gradient(&q_prev)?;

    let mut beta = config.beta0;
    let mut alpha = cfg.alpha0;
    let mut y = q_prev.clone();
    let (mut c_y, mut g_y) = (c0, g0.clone());
    let mut history = vec![c0];
    let mut records = vec![IterationRecord {
        k: 0,
        objective: c0,
        beta,
        alpha,
        linesearch_steps: 0,
        grad_norm: frobenius(&g0),
        step_norm: 0.0,
        extrapolation_accepted: false,
        elapsed: start.elapsed().as_secs_f64(),
    }];
    let mut status = SolveStatus::MaxIters;

    for k in 1..=cfg.max_iters {
        let slack = MODEL_SLACK * c_y.abs().max(1.0);
        let mut steps = 0;
        let (q, c_q, g_q) = loop {
            steps += 1;
            let q = project_matrix(&(&y + g_y.scale(1.0 / beta)), p_total)?;
            let (c_q, g_q) = obj.value_and_gradient(&q)?;
            if c_q >= model_from_parts(c_y, &g_y, &y, &q, beta) - slack {
                break (q, c_q, g_q);
            }
            if steps >= cfg.max_linesearch {
                return Err(Error::LineSearch { steps, beta });
            }
            beta *= cfg.gamma_u;
        };
        let beta_used = beta;
        beta = (beta / cfg.gamma_u).max(config.l0);

        let z = &q + (&q - &q_prev).scale(alpha);
        let mut accepted = false;
        if let Some(z) = feasible_extrapolation(&z, p_total, cfg.feas_tol)? {
            let (c_z, g_z) = obj.value_and_gradient(&z)?;
            if c_z >= c_q {
                accepted = true;
                alpha = (alpha / cfg.xi).min(1.0);
                y = z;
                c_y = c_z;
                g_y = g_z;
            }
        }
        if !accepted {
            alpha *= cfg.xi;
            y = q.clone();
            c_y = c_q;
            g_y = g_q.clone();
        }

        records.push(IterationRecord {
            k,
            objective: c_q,
            beta: beta_used,
            alpha,
            linesearch_steps: steps,
            grad_norm: frobenius(&g_q),
            step_norm: frobenius(&(&q - &q_prev)),
            extrapolation_accepted: accepted,
            elapsed: start.elapsed().as_secs_f64(),
        });
        history.push(c_q);
        q_prev = q;
        if stalled(&history, cfg.epsilon, cfg.window) {
            status = SolveStatus::Converged;
            break;
        }
    }

    let objective = *history
        .last()
        .expect("history starts with the initial objective");
    let q_opt = Covariance::from_parts(q_prev, p_total);
    let kkt = kkt_residuals(&q_opt, ch)?;
    Ok(SolveResult {
        q_opt,
        objective,
        trace: IterationTrace { records },
        kkt,
        status,
        config,
    })
}

/// Classical projected gradient ascent `Q_{k+1} = P(Q_k + step * grad(Q_k))`.
/// With `step = 1 / L` the objective is non-decreasing.
pub fn solve_pg_fixed(
    ch: &ChannelPair,
    p_total: f64,
    cfg: &PgConfig,
    q_init: Option<&Covariance>,
) -> Result<SolveResult> {
    let start = Instant::now();
    let mut apg_echo = SolverConfig::default().with_stopping(cfg.epsilon, cfg.window);
    apg_echo.max_iters = cfg.max_iters.max(1);
    let mut config = apg_echo.resolve(ch)?;
    let step = cfg.step.unwrap_or(1.0 / config.lipschitz);
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid(format!(
            "step must be positive and finite, got {step}"
        )));
    }
    if cfg.max_iters == 0 || cfg.window == 0 || !(cfg.epsilon >= 0.0) {
        return Err(invalid(
            "max_iters and window must be at least 1 and epsilon non-negative",
        ));
    }
    config.beta0 = 1.0 / step;
    config.l0 = 1.0 / step;
    let mut q = initial_point(ch, p_total, q_init)?;
    if classify(ch)?.is_degraded_zero() {
        return degraded_result(ch, p_total, config, start);
    }
    let obj = SecrecyObjective::new(ch);
    let (mut c_q, mut g_q) = obj.value_and_gradient(&q)?;
    let mut history = vec![c_q];
    let mut records = vec![IterationRecord {
        k: 0,
        objective: c_q,
        beta: 1.0 / step,
        alpha: 0.0,
        linesearch_steps: 0,
        grad_norm: frobenius(&g_q),
        step_norm: 0.0,
        extrapolation_accepted: false,
        elapsed: start.elapsed().as_secs_f64(),
    }];
    let mut status = SolveStatus::MaxIters;
    for k in 1..=cfg.max_iters {
        let next = project_matrix(&(&q + g_q.scale(step)), p_total)?;
        let (c_next, g_next) = obj.value_and_gradient(&next)?;
        records.push(IterationRecord {
            k,
            objective: c_next,
            beta: 1.0 / step,
            alpha: 0.0,
            linesearch_steps: 1,
            grad_norm: frobenius(&g_next),
            step_norm: frobenius(&(&next - &q)),
            extrapolation_accepted: false,
            elapsed: start.elapsed().as_secs_f64(),
        });
        q = next;
        c_q = c_next;
        g_q = g_next;
        history.push(c_q);
        if stalled(&history, cfg.epsilon, cfg.window) {
            status = SolveStatus::Converged;
            break;
        }
    }
    let q_opt = Covariance::from_parts(q, p_total);
    let kkt = kkt_residuals(&q_opt, ch)?;
    Ok(SolveResult {
        q_opt,
        objective: c_q,
        trace: IterationTrace { records },
        kkt,
        status,
        config,
    })
}
