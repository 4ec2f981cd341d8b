mod common;

use common::{feasible_point, rng};
use proptest::prelude::*;
use secrecy_core::bench::{
    run_convergence_experiment, run_timing_experiment, BenchSpec, SolverKind, Stopping,
};
use secrecy_core::kkt::uniqueness_experiment_sequential;
use secrecy_core::linalg::{c, identity};
use secrecy_core::oracle::{oracle_2x2, oracle_scalar, Grid2x2};
use secrecy_core::projection::EigenSystem;
use secrecy_core::{
    generate_channel, kkt_residuals, lipschitz_constant, recover_multipliers, solve_apg,
    solve_pg_fixed, uniqueness_experiment, ChannelPair, PgConfig, SolveStatus, SolverConfig,
};

const P15DB: f64 = 31.622776601683793;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apg_trace_invariants((n_t, n_r, n_e) in (1usize..=4, 1usize..=4, 1usize..=4), seed in any::<u64>(), p in 0.5f64..50.0, random_start in any::<bool>()) {
        let ch = generate_channel(n_t, n_r, n_e, seed).unwrap();
        let start = random_start.then(|| feasible_point(n_t, p, &mut rng(seed)));
        let cfg = SolverConfig::default();
        let r = solve_apg(&ch, p, &cfg, start.as_ref()).unwrap();
        let l = lipschitz_constant(&ch).unwrap();
        let recs = &r.trace.records;
        for w in recs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            prop_assert!(b.objective >= a.objective - 1e-12 * a.objective.abs().max(1.0));
            prop_assert!(b.beta <= cfg.gamma_u * l * (1.0 + 1e-12));
            prop_assert!(b.alpha > 0.0 && b.alpha <= 1.0);
            let bound = 3.0 + (b.beta / a.beta).log(cfg.gamma_u) + 1e-9;
            prop_assert!((b.linesearch_steps as f64) <= bound, "steps {} > {bound}", b.linesearch_steps);
        }
        let q = r.q_opt.matrix();
        prop_assert!(EigenSystem::decompose(q).unwrap().min_eigenvalue() >= -1e-12 * p);
        prop_assert!(r.q_opt.trace() <= p * (1.0 + 1e-12));
    }
}

#[test]
fn degraded_channel_short_circuits() {
    let ch = ChannelPair::new(identity(4), identity(4).scale(2.0)).unwrap();
    let r = solve_apg(&ch, 10.0, &SolverConfig::default(), None).unwrap();
    assert_eq!(r.status, SolveStatus::DegradedZero);
    assert_eq!(r.objective, 0.0);
    assert_eq!(r.q_opt.matrix().norm(), 0.0);
}

#[test]
fn scalar_solve_matches_closed_form() {
    let ch = ChannelPair::scalar(c(2.0, 0.0), c(1.0, 0.0)).unwrap();
    let r = solve_apg(&ch, 1.0, &SolverConfig::default(), None).unwrap();
    assert!((r.objective - 2.5f64.ln()).abs() < 1e-9);
    let grid = oracle_scalar(c(2.0, 0.0), c(1.0, 0.0), 1.0, 100_001).unwrap();
    assert!((r.objective - grid.best_objective).abs() < 1e-9);
}

#[test]
fn kkt_residual_shrinks_with_epsilon() {
    for seed in 0..5 {
        let ch = generate_channel(4, 4, 4, 900 + seed).unwrap();
        let residuals: Vec<f64> = [1e-4, 1e-6, 1e-8]
            .iter()
            .map(|&eps| {
                let cfg = SolverConfig::default().with_stopping(eps, 5);
                solve_apg(&ch, P15DB, &cfg, None)
                    .unwrap()
                    .kkt
                    .stationarity_residual
            })
            .collect();
        assert!(
            residuals[0] >= residuals[1] && residuals[1] >= residuals[2],
            "seed {seed}: {residuals:?}"
        );
    }
}

#[test]
fn kkt_recovery_is_pure_and_converged_points_use_full_power() {
    for seed in 0..5 {
        let ch = generate_channel(4, 4, 4, 700 + seed).unwrap();
        let r = solve_apg(&ch, P15DB, &SolverConfig::default(), None).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        let a = kkt_residuals(&r.q_opt, &ch).unwrap();
        let b = kkt_residuals(&r.q_opt, &ch).unwrap();
        assert_eq!(a, b);
        assert_eq!(recover_multipliers(&r.q_opt, &ch).unwrap().0, a.lambda);
        assert!(a.lambda > 0.0);
        assert!(a.trace_gap <= 1e-6);
    }
}

#[test]
fn parallel_and_sequential_uniqueness_agree() {
    let ch = generate_channel(3, 3, 2, 41).unwrap();
    let cfg = SolverConfig::default().with_stopping(1e-10, 5);
    let par = uniqueness_experiment(&ch, 10.0, 6, 9, &cfg).unwrap();
    let seq = uniqueness_experiment_sequential(&ch, 10.0, 6, 9, &cfg).unwrap();
    assert_eq!(par.pairwise_dist, seq.pairwise_dist);
    assert_eq!(
        par.per_start
            .iter()
            .map(|s| s.objective)
            .collect::<Vec<_>>(),
        seq.per_start
            .iter()
            .map(|s| s.objective)
            .collect::<Vec<_>>()
    );
    assert!(par.max_pairwise_dist <= 1e-4);
    assert!(uniqueness_experiment(&ch, 10.0, 1, 9, &cfg).is_err());
}

#[test]
fn fixed_step_baseline_reaches_the_same_value() {
    let ch = generate_channel(2, 2, 2, 5).unwrap();
    let apg = solve_apg(
        &ch,
        10.0,
        &SolverConfig::default().with_stopping(1e-12, 5),
        None,
    )
    .unwrap();
    let pg = solve_pg_fixed(
        &ch,
        10.0,
        &PgConfig::default().with_stopping(1e-13, 5),
        None,
    )
    .unwrap();
    assert_eq!(pg.status, SolveStatus::Converged);
    assert!((apg.objective - pg.objective).abs() < 1e-6);
    for w in pg.trace.records.windows(2) {
        assert!(w[1].objective >= w[0].objective - 1e-12 * w[0].objective.abs().max(1.0));
    }
}

#[test]
fn oracle_never_beats_the_solver() {
    let grid = Grid2x2 {
        power_steps: 64,
        angle_steps: 32,
        refine_iters: 2000,
    };
    for seed in 0..2 {
        let ch = generate_channel(2, 2, 2, 60 + seed).unwrap();
        let o = oracle_2x2(&ch, 10.0, grid).unwrap();
        let r = solve_apg(&ch, 10.0, &SolverConfig::default(), None).unwrap();
        assert!(o.best_objective <= r.objective + 1e-9);
        assert!(o.refined_objective.unwrap() <= r.objective + 1e-9);
        assert!(r.objective - o.refined_objective.unwrap() <= 1e-3);
    }
}

fn small_spec() -> BenchSpec {
    BenchSpec {
        dims: vec![(2, 2, 1), (3, 2, 2)],
        snr_db: 10.0,
        n_trials: 3,
        seed: 17,
        solvers: vec![SolverKind::Apg, SolverKind::PgFixed],
        stopping: Stopping {
            epsilon: 1e-14,
            window: 5,
        },
        eve_scale: None,
        max_iters: None,
        reference_starts: 1,
        parallel: true,
    }
}

#[test]
fn bench_timing_is_reproducible_and_aggregates_check_out() {
    let spec = small_spec();
    let a = run_timing_experiment(&spec).unwrap();
    let b = run_timing_experiment(&BenchSpec {
        parallel: false,
        ..spec.clone()
    })
    .unwrap();
    assert_eq!(a.records.len(), 2 * 3 * 2);
    assert!(a.aggregates_consistent());
    let key = |r: &secrecy_core::bench::TrialRecord| {
        (
            r.dims,
            r.trial,
            r.solver,
            r.seed,
            r.iterations,
            r.final_objective.to_bits(),
        )
    };
    assert_eq!(
        a.records.iter().map(key).collect::<Vec<_>>(),
        b.records.iter().map(key).collect::<Vec<_>>()
    );
    assert!(
        a.records.iter().all(|r| r.kkt_pass),
        "{:?}",
        a.records.iter().filter(|r| !r.kkt_pass).collect::<Vec<_>>()
    );
}

#[test]
fn bench_convergence_curves_and_outputs() {
    let spec = BenchSpec {
        solvers: vec![SolverKind::Apg],
        ..small_spec()
    };
    let r = run_convergence_experiment(&spec).unwrap();
    assert_eq!(r.curves.len(), 6);
    for curve in &r.curves {
        assert!(curve.is_non_increasing(1e-12));
        assert!(*curve.residuals.last().unwrap() >= -1e-12);
    }
    let dir = tempfile::tempdir().unwrap();
    r.write_outputs(dir.path()).unwrap();
    assert!(dir.path().join("bench_results.json").exists());
    assert!(dir.path().join("convergence_5.csv").exists());
    let text = std::fs::read_to_string(dir.path().join("bench_results.json")).unwrap();
    let back: secrecy_core::bench::BenchResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r.bench);
}
