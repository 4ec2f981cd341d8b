use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use secrecy_core::bench::{run_convergence_experiment, run_timing_experiment, BenchSpec};
use secrecy_core::channel::encode_matrix;
use secrecy_core::oracle::{oracle_2x2, oracle_scalar, Grid2x2};
use secrecy_core::{
    classify, generate_channel, kkt_residuals, solve_apg, uniqueness_experiment, ChannelPair,
    Covariance, Error, KktReport, SolveResult, SolveStatus, SolverConfig,
};
use serde::Serialize;

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "secrecy",
    version,
    about = "Secrecy capacity of the MIMO Gaussian wiretap channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize the secrecy rate under a sum power constraint.
    Solve(SolveArgs),
    /// Check the KKT conditions at a covariance (a solve JSON) or at a fresh solve.
    Kkt(KktArgs),
    /// Compare the solver against brute-force search (1 or 2 transmit antennas).
    Oracle(OracleArgs),
    /// Solve from many random starts and check that they agree.
    Unique(UniqueArgs),
    /// Run a Monte Carlo experiment described by a JSON spec.
    Bench(BenchArgs),
    /// Draw a random channel pair.
    Gen(GenArgs),
}

#[derive(Args)]
struct Common {
    /// Channel JSON file with fields "H" and "G".
    channel: PathBuf,
    /// Total transmit power P_T (noise power is 1).
    #[arg(long)]
    power: f64,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Report rates in bits instead of nats (display only).
    #[arg(long)]
    bits: bool,
}

impl Common {
    fn config(&self) -> Result<SolverConfig, Failure> {
        let cfg = SolverConfig {
            max_iters: self.max_iters,
            ..SolverConfig::default().with_stopping(self.epsilon, 5)
        };
        cfg.validate().map_err(Failure::from)?;
        Ok(cfg)
    }

    fn load(&self) -> Result<ChannelPair, Failure> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Failure::input(format!(
                "--power must be positive and finite, got {}",
                self.power
            )));
        }
        ChannelPair::load(&self.channel)
            .map_err(|e| Failure::input(format!("{}: {e}", self.channel.display())))
    }

    fn rate(&self, nats: f64) -> String {
        if self.bits {
            format!("{} bits", nats / std::f64::consts::LN_2)
        } else {
            format!("{nats} nats")
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct KktArgs {
    #[command(flatten)]
    common: Common,
    /// JSON written by `solve --json-out`; solves afresh when omitted.
    #[arg(long)]
    solution: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Allowed gap between solver and oracle objectives (nats).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Grid points for one transmit antenna.
    #[arg(long, default_value_t = 1_000_001)]
    grid_points: usize,
    #[arg(long, default_value_t = 200)]
    power_steps: usize,
    #[arg(long, default_value_t = 64)]
    angle_steps: usize,
    #[arg(long, default_value_t = 2000)]
    refine_iters: usize,
}

#[derive(Args)]
struct UniqueArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 20)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest allowed Frobenius distance between any two final points.
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Convergence,
    Timing,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value_t = Experiment::Convergence)]
    experiment: Experiment,
    /// Output directory for bench_results.json (and convergence CSVs).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Antenna counts as NtxNrxNe, e.g. 4x4x2.
    #[arg(long, value_parser = parse_dims)]
    dims: (usize, usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace G by this multiple of H.
    #[arg(long)]
    eve_scale: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums: Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse::<usize>()).collect();
    match nums {
        Ok(v) if v.len() == 3 && v.iter().all(|&n| n > 0) => Ok((v[0], v[1], v[2])),
        _ => Err(format!(
            "expected NtxNrxNe with positive integers, got '{s}'"
        )),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::LineSearch { .. } => EXIT_NOT_CONVERGED,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    objective_nats: f64,
    #[serde(rename = "Q")]
    q: Vec<Vec<[f64; 2]>>,
    status: SolveStatus,
    iterations: usize,
    kkt: &'a KktReport,
    config: ConfigEcho<'a>,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    power: f64,
    solver: &'a SolverConfig,
    beta0: f64,
    l0: f64,
    lipschitz: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::MaxIters => EXIT_NOT_CONVERGED,
        SolveStatus::Converged | SolveStatus::DegradedZero => EXIT_OK,
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let ch = c.load()?;
    let cfg = c.config()?;
    let r = solve_apg(&ch, c.power, &cfg, None)?;
    println!("status: {:?}", r.status);
    println!("iterations: {}", r.iterations());
    println!("secrecy rate: {}", c.rate(r.objective));
    println!(
        "kkt stationarity residual: {:e}",
        r.kkt.stationarity_residual
    );
    if let Some(path) = &args.trace_out {
        r.trace
            .save_csv(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &args.json_out {
        write_json(path, &solve_output(&r, &cfg, c.power))?;
    }
    Ok(status_code(r.status))
}

fn solve_output<'a>(r: &'a SolveResult, cfg: &'a SolverConfig, power: f64) -> SolveOutput<'a> {
    SolveOutput {
        objective_nats: r.objective,
        q: encode_matrix(r.q_opt.matrix()),
        status: r.status,
        iterations: r.iterations(),
        kkt: &r.kkt,
        config: ConfigEcho {
            power,
            solver: cfg,
            beta0: r.config.beta0,
            l0: r.config.l0,
            lipschitz: r.config.lipschitz,
        },
    }
}

fn load_solution(path: &Path, power: f64) -> Result<Covariance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> = value
        .get("Q")
        .cloned()
        .ok_or_else(|| Failure::input(format!("{}: missing field \"Q\"", path.display())))
        .and_then(|q| {
            serde_json::from_value(q)
                .map_err(|e| Failure::input(format!("{}: field \"Q\": {e}", path.display())))
        })?;
    let q = secrecy_core::channel::decode_matrix("Q", &rows)?;
    Ok(Covariance::new(q, power)?)
}

fn cmd_kkt(args: &KktArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let ch = c.load()?;
    if !(args.tol > 0.0) {
        return Err(Failure::input("--tol must be positive"));
    }
    let (q, degraded) = match &args.solution {
        Some(path) => {
            let q = load_solution(path, c.power)?;
            if q.dim() != ch.n_t() {
                return Err(Failure::input(format!(
                    "Q is {}x{}, channel has {} transmit antennas",
                    q.dim(),
                    q.dim(),
                    ch.n_t()
                )));
            }
            (q, classify(&ch)?.is_degraded_zero())
        }
        None => {
            let r = solve_apg(&ch, c.power, &c.config()?, None)?;
            (r.q_opt, r.status == SolveStatus::DegradedZero)
        }
    };
    let report = kkt_residuals(&q, &ch)?;
    println!("lambda: {:e}", report.lambda);
    println!("stationarity residual: {:e}", report.stationarity_residual);
    println!("min eigenvalue of Z: {:e}", report.z_min_eig);
    println!("complementarity: {:e}", report.complementarity_qz);
    println!("trace gap: {:e}", report.trace_gap);
    println!("primal infeasibility: {:e}", report.primal_feas);
    if let Some(note) = &report.note {
        println!("note: {note}");
    }
    let zero_is_optimal = degraded && q.matrix().norm() == 0.0;
    let pass = zero_is_optimal || report.is_kkt_point(args.tol);
    println!("kkt: {}", if pass { "pass" } else { "fail" });
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_oracle(args: &OracleArgs) -> Result<u8, Failure> {
    let c = &args.common;
    let ch = c.load()?;
    let oracle_value = match ch.n_t() {
        1 => {
            // With one transmit antenna only the channel gains matter.
            let h = Complex64::new(ch.h().norm(), 0.0);
            let g = Complex64::new(ch.g().norm(), 0.0);
            oracle_scalar(h, g, c.power, args.grid_points)?.best_objective
        }
        2 => {
            let grid = Grid2x2 {
                power_steps: args.power_steps,
                angle_steps: args.angle_steps,
                refine_iters: args.refine_iters,
            };
            let r = oracle_2x2(&ch, c.power, grid)?;
            r.refined_objective
                .map_or(r.best_objective, |v| v.max(r.best_objective))
        }
        n => {
            return Err(Failure::input(format!(
                "oracle supports 1 or 2 transmit antennas, channel has {n}"
            )))
        }
    };
    let r = solve_apg(&ch, c.power, &c.config()?, None)?;
    let gap = (r.objective - oracle_value).abs();
    println!("solver: {}", c.rate(r.objective));
    println!("oracle: {}", c.rate(oracle_value));
    println!("gap: {gap:e} nats");
    if gap <= args.tol {
        Ok(status_code(r.status))
    } else {
        Ok(EXIT_VERIFY)
    }
}

fn cmd_unique(args: &UniqueArgs) -> Result<u8, Failure> {
    let c = &args.common;
    if args.starts < 2 {
        return Err(Failure::input(format!(
            "--starts must be at least 2, got {}",
            args.starts
        )));
    }
    let ch = c.load()?;
    let report = uniqueness_experiment(&ch, c.power, args.starts, args.seed, &c.config()?)?;
    println!("max pairwise distance: {:e}", report.max_pairwise_dist);
    println!("objective spread: {:e} nats", report.objective_spread);
    if !report.theorem_applies {
        println!("note: H^H H - G^H G is negative semidefinite; every start returns Q = 0");
    }
    Ok(if report.max_pairwise_dist <= args.threshold {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Failure> {
    let spec = BenchSpec::load(&args.spec)
        .map_err(|e| Failure::input(format!("{}: {e}", args.spec.display())))?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::input(format!("{}: {e}", args.out.display())))?;
    let bench = match args.experiment {
        Experiment::Convergence => {
            let r = run_convergence_experiment(&spec)?;
            r.write_outputs(&args.out)?;
            r.bench
        }
        Experiment::Timing => {
            let r = run_timing_experiment(&spec)?;
            r.save_json(args.out.join("bench_results.json"))?;
            r
        }
    };
    for a in &bench.aggregates {
        println!(
            "{}x{}x{} {:?}: mean {:.3e} s, median {:.3e} s, mean iterations {:.1}, kkt pass rate {:.3}",
            a.dims.0, a.dims.1, a.dims.2, a.solver, a.mean_time_s, a.median_time_s, a.mean_iterations, a.kkt_pass_rate
        );
    }
    Ok(EXIT_OK)
}

fn cmd_gen(args: &GenArgs) -> Result<u8, Failure> {
    let (n_t, n_r, n_e) = args.dims;
    let mut ch = generate_channel(n_t, n_r, n_e, args.seed)?;
    if let Some(s) = args.eve_scale {
        if !s.is_finite() {
            return Err(Failure::input("--eve-scale must be finite"));
        }
        ch = ch.with_degraded_eve(s);
    }
    ch.save(&args.out)
        .map_err(|e| Failure::input(format!("{}: {e}", args.out.display())))?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Kkt(a) => cmd_kkt(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Unique(a) => cmd_unique(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
