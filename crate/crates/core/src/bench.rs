//! Monte Carlo experiments over random channel ensembles: convergence curves
//! (residual to the best objective found on each channel) and wall-clock
//! comparisons between the accelerated and the fixed-step solver.
//!
//! Every trial draws its channel from a seed derived from
//! `(spec.seed, dims index, trial index)`, so all solvers see the same
//! instances and repeated runs reproduce the same iteration counts.

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_channel, ChannelPair};
use crate::error::{invalid, Result};
use crate::kkt::random_feasible_start;
use crate::solver::{solve_apg, solve_pg_fixed, PgConfig, SolveResult, SolveStatus, SolverConfig};

/// KKT tolerance used for the per-trial `kkt_pass` flag.
pub const BENCH_KKT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Apg,
    PgFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stopping {
    pub epsilon: f64,
    pub window: usize,
}

impl Default for Stopping {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            window: 5,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_reference_starts() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    /// `(N_t, N_r, N_e)` triples.
    pub dims: Vec<(usize, usize, usize)>,
    /// `P_T = 10^(snr_db / 10)` with unit noise.
    pub snr_db: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub stopping: Stopping,
    /// Replace Eve's channel by `eve_scale * H` (a degraded ensemble).
    #[serde(default)]
    pub eve_scale: Option<f64>,
    /// Iteration cap for every solver; defaults to each solver's own default.
    #[serde(default)]
    pub max_iters: Option<usize>,
    /// Extra tightly converged APG runs from random starts used for the
    /// capacity reference in convergence experiments.
    #[serde(default = "default_reference_starts")]
    pub reference_starts: usize,
    #[serde(default = "default_true")]
    pub parallel: bool,
}

impl BenchSpec {
    pub fn p_total(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(invalid("n_trials must be at least 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db must be finite"));
        }
        if self.dims.is_empty() || self.solvers.is_empty() {
            return Err(invalid("need at least one dimension triple and one solver"));
        }
        if let Some(&(a, b, c)) = self.dims.iter().find(|d| d.0 == 0 || d.1 == 0 || d.2 == 0) {
            return Err(invalid(format!("invalid dimensions {a}x{b}x{c}")));
        }
        if !(self.stopping.epsilon >= 0.0) || self.stopping.window == 0 {
            return Err(invalid("stopping needs epsilon >= 0 and window >= 1"));
        }
        if let Some(s) = self.eve_scale {
            if !s.is_finite() {
                return Err(invalid("eve_scale must be finite"));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let spec: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    fn trial_seed(&self, dim_index: usize, trial: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(((dim_index as u64) << 32) | trial as u64))
    }

    fn channel(&self, dim_index: usize, trial: usize) -> Result<(u64, ChannelPair)> {
        let (n_t, n_r, n_e) = self.dims[dim_index];
        let seed = self.trial_seed(dim_index, trial);
        let ch = generate_channel(n_t, n_r, n_e, seed)?;
        Ok((
            seed,
            match self.eve_scale {
                Some(s) => ch.with_degraded_eve(s),
                None => ch,
            },
        ))
    }

    fn apg_config(&self) -> SolverConfig {
        let mut cfg =
            SolverConfig::default().with_stopping(self.stopping.epsilon, self.stopping.window);
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        cfg
    }

    fn pg_config(&self) -> PgConfig {
        let mut cfg =
            PgConfig::default().with_stopping(self.stopping.epsilon, self.stopping.window);
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        cfg
    }

    fn run_solver(&self, kind: SolverKind, ch: &ChannelPair) -> Result<(SolveResult, f64)> {
        let p = self.p_total();
        let start = Instant::now();
        let r = match kind {
            SolverKind::Apg => solve_apg(ch, p, &self.apg_config(), None)?,
            SolverKind::PgFixed => solve_pg_fixed(ch, p, &self.pg_config(), None)?,
        };
        Ok((r, start.elapsed().as_secs_f64()))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub dims: (usize, usize, usize),
    pub trial: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub final_objective: f64,
    pub status: SolveStatus,
    pub kkt_pass: bool,
}

impl TrialRecord {
    fn from_result(
        dims: (usize, usize, usize),
        trial: usize,
        seed: u64,
        solver: SolverKind,
        r: &SolveResult,
        wall: f64,
    ) -> Self {
        Self {
            dims,
            trial,
            seed,
            solver,
            iterations: r.iterations(),
            wall_time_s: wall,
            final_objective: r.objective,
            status: r.status,
            kkt_pass: r.status == SolveStatus::DegradedZero || r.kkt.is_kkt_point(BENCH_KKT_TOL),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dims: (usize, usize, usize),
    pub solver: SolverKind,
    pub n: usize,
    pub mean_time_s: f64,
    pub median_time_s: f64,
    pub mean_iterations: f64,
    pub kkt_pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub spec: BenchSpec,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Groups records by `(dims, solver)` in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<((usize, usize, usize), SolverKind)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.dims, r.solver)) {
            keys.push((r.dims, r.solver));
        }
    }
    keys.into_iter()
        .map(|(dims, solver)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.dims == dims && r.solver == solver)
                .collect();
            let n = group.len();
            let mut times: Vec<f64> = group.iter().map(|r| r.wall_time_s).collect();
            times.sort_by(f64::total_cmp);
            let median = if n % 2 == 1 {
                times[n / 2]
            } else {
                0.5 * (times[n / 2 - 1] + times[n / 2])
            };
            Aggregate {
                dims,
                solver,
                n,
                mean_time_s: times.iter().sum::<f64>() / n as f64,
                median_time_s: median,
                mean_iterations: group.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64,
                kkt_pass_rate: group.iter().filter(|r| r.kkt_pass).count() as f64 / n as f64,
            }
        })
        .collect()
}

impl BenchResult {
    fn new(spec: BenchSpec, records: Vec<TrialRecord>) -> Self {
        let aggregates = aggregate(&records);
        Self {
            spec,
            records,
            aggregates,
        }
    }

    pub fn aggregate_for(
        &self,
        dims: (usize, usize, usize),
        solver: SolverKind,
    ) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.dims == dims && a.solver == solver)
    }

    /// True when the stored aggregates match a recomputation from the records.
    pub fn aggregates_consistent(&self) -> bool {
        let fresh = aggregate(&self.records);
        fresh.len() == self.aggregates.len()
            && fresh.iter().zip(&self.aggregates).all(|(a, b)| {
                a.dims == b.dims
                    && a.solver == b.solver
                    && a.n == b.n
                    && (a.mean_time_s - b.mean_time_s).abs() <= 1e-12 * a.mean_time_s.max(1.0)
                    && (a.median_time_s - b.median_time_s).abs() <= 1e-12 * a.median_time_s.max(1.0)
                    && (a.mean_iterations - b.mean_iterations).abs() <= 1e-9
                    && a.kkt_pass_rate == b.kkt_pass_rate
            })
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Per-iteration residual `C_best - C_s(Q_k)` of one solver on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCurve {
    pub dims: (usize, usize, usize),
    pub trial: usize,
    pub solver: SolverKind,
    pub c_best: f64,
    pub objectives: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ResidualCurve {
    /// Non-increasing up to `slack * max(1, |residual|)` between consecutive entries.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.residuals
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * w[0].abs().max(1.0))
    }

    /// First iteration with residual at or below `tol`.
    pub fn first_below(&self, tol: f64) -> Option<usize> {
        self.residuals.iter().position(|&r| r <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub bench: BenchResult,
    pub curves: Vec<ResidualCurve>,
}

impl ConvergenceResult {
    /// Writes `bench_results.json` and one `convergence_<n>.csv` per trial into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.bench.save_json(dir.join("bench_results.json"))?;
        let mut trials: Vec<((usize, usize, usize), usize)> = Vec::new();
        for c in &self.curves {
            if !trials.contains(&(c.dims, c.trial)) {
                trials.push((c.dims, c.trial));
            }
        }
        for (n, key) in trials.iter().enumerate() {
            let mut out = String::from("iter,solver,objective_nats,residual_nats\n");
            for c in self.curves.iter().filter(|c| (c.dims, c.trial) == *key) {
                let name = match c.solver {
                    SolverKind::Apg => "apg",
                    SolverKind::PgFixed => "pg_fixed",
                };
                for (k, (o, r)) in c.objectives.iter().zip(&c.residuals).enumerate() {
                    out.push_str(&format!("{k},{name},{o},{r}\n"));
                }
            }
            std::fs::write(dir.join(format!("convergence_{n}.csv")), out)?;
        }
        Ok(())
    }
}

fn trial_keys(spec: &BenchSpec) -> Vec<(usize, usize)> {
    (0..spec.dims.len())
        .flat_map(|d| (0..spec.n_trials).map(move |t| (d, t)))
        .collect()
}

fn map_trials<T: Send>(
    spec: &BenchSpec,
    f: impl Fn(usize, usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let keys = trial_keys(spec);
    if spec.parallel {
        keys.into_par_iter().map(|(d, t)| f(d, t)).collect()
    } else {
        keys.into_iter().map(|(d, t)| f(d, t)).collect()
    }
}

/// Runs every solver on every trial, plus tightly converged APG reference
/// runs, and reports residual curves against the best objective seen on the
/// channel. No external solver is involved: the KKT point is unique, so the
/// best converged stationary value is the capacity.
pub fn run_convergence_experiment(spec: &BenchSpec) -> Result<ConvergenceResult> {
    spec.validate()?;
    let per_trial = map_trials(spec, |d, t| {
        let (seed, ch) = spec.channel(d, t)?;
        let dims = spec.dims[d];
        let mut runs = Vec::new();
        for &kind in &spec.solvers {
            let (r, wall) = spec.run_solver(kind, &ch)?;
            runs.push((kind, r, wall));
        }
        let mut c_best = runs
            .iter()
            .map(|x| x.1.objective)
            .fold(f64::NEG_INFINITY, f64::max);
        let reference = SolverConfig {
            max_iters: 100_000,
            ..SolverConfig::default().with_stopping(1e-14, 5)
        };
        c_best = c_best.max(solve_apg(&ch, spec.p_total(), &reference, None)?.objective);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..spec.reference_starts {
            let q0 = random_feasible_start(ch.n_t(), spec.p_total(), &mut rng)?;
            c_best = c_best.max(solve_apg(&ch, spec.p_total(), &reference, Some(&q0))?.objective);
        }
        let mut records = Vec::new();
        let mut curves = Vec::new();
        for (kind, r, wall) in runs {
            records.push(TrialRecord::from_result(dims, t, seed, kind, &r, wall));
            let objectives: Vec<f64> = r.trace.objectives().collect();
            let residuals = objectives.iter().map(|o| c_best - o).collect();
            curves.push(ResidualCurve {
                dims,
                trial: t,
                solver: kind,
                c_best,
                objectives,
                residuals,
            });
        }
        Ok((records, curves))
    })?;
    let (records, curves): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
    Ok(ConvergenceResult {
        bench: BenchResult::new(spec.clone(), records.into_iter().flatten().collect()),
        curves: curves.into_iter().flatten().collect(),
    })
}

/// Wall-clock comparison. Within a trial the solvers run back to back on the
/// same channel; the timer covers the solve call only.
pub fn run_timing_experiment(spec: &BenchSpec) -> Result<BenchResult> {
    spec.validate()?;
    if spec.solvers.len() < 2 && spec.dims.len() < 2 {
        return Err(invalid(
            "a timing experiment needs at least two solvers or two dimension triples",
        ));
    }
    let per_trial = map_trials(spec, |d, t| {
        let (seed, ch) = spec.channel(d, t)?;
        spec.solvers
            .iter()
            .map(|&kind| {
                let (r, wall) = spec.run_solver(kind, &ch)?;
                Ok(TrialRecord::from_result(
                    spec.dims[d],
                    t,
                    seed,
                    kind,
                    &r,
                    wall,
                ))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(BenchResult::new(
        spec.clone(),
        per_trial.into_iter().flatten().collect(),
    ))
}
