use std::path::Path;
use std::process::{Command, Output};

fn secrecy(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secrecy"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const SCALAR: &str = r#"{"H": [[[2, 0]]], "G": [[[1, 0]]]}"#;
const DEGRADED: &str =
    r#"{"H": [[[1,0],[0,0]],[[0,0],[1,0]]], "G": [[[2,0],[0,0]],[[0,0],[2,0]]]}"#;

#[test]
fn solve_scalar_writes_json_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.json", SCALAR);
    let o = secrecy(
        &[
            "solve",
            "s.json",
            "--power",
            "1",
            "--json-out",
            "out.json",
            "--trace-out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap())
            .unwrap();
    assert!((v["objective_nats"].as_f64().unwrap() - 0.916290731874155).abs() < 1e-6);
    assert_eq!(v["status"], "Converged");
    assert!((v["Q"][0][0][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["kkt"]["lambda"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["power"], 1.0);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,objective_nats,"));
    assert!(trace.lines().count() >= 2);

    let bits = secrecy(&["solve", "s.json", "--power", "1", "--bits"], dir.path());
    assert!(String::from_utf8_lossy(&bits.stdout).contains("1.32192809"));
}

#[test]
fn solve_degraded_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.json", DEGRADED);
    let o = secrecy(
        &["solve", "d.json", "--power", "5", "--json-out", "out.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap())
            .unwrap();
    assert_eq!(v["status"], "DegradedZero");
    assert_eq!(v["objective_nats"], 0.0);
}

#[test]
fn malformed_inputs_exit_one_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "ragged.json",
        r#"{"H": [[[1,0],[0,0]],[[0,0]]], "G": [[[1,0],[0,0]]]}"#,
    );
    let o = secrecy(&["solve", "ragged.json", "--power", "1"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("H row 1"));

    write(
        dir.path(),
        "broken.json",
        "{\"H\": [[[1, 0]]],\n \"G\": [[[1, oops]]]}",
    );
    let o = secrecy(&["solve", "broken.json", "--power", "1"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    write(dir.path(), "s.json", SCALAR);
    for args in [
        vec!["solve", "s.json", "--power", "-1"],
        vec!["solve", "s.json"],
        vec!["solve", "missing.json", "--power", "1"],
        vec!["unique", "s.json", "--power", "1", "--starts", "1"],
        vec!["bench", "--spec", "missing.json"],
        vec!["gen", "--dims", "2x2", "--out", "x.json"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&secrecy(&args, dir.path())), 1, "{args:?}");
    }
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&secrecy(
            &["gen", "--dims", "4x4x4", "--seed", "1", "--out", "c.json"],
            dir.path()
        )),
        0
    );
    let o = secrecy(
        &["solve", "c.json", "--power", "31.6", "--max-iters", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        assert_eq!(
            code(&secrecy(
                &["gen", "--dims", "2x2x2", "--seed", "5", "--out", name],
                dir.path()
            )),
            0
        );
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let parsed = secrecy_core::ChannelPair::load(dir.path().join("a.json")).unwrap();
    assert_eq!(parsed, secrecy_core::generate_channel(2, 2, 2, 5).unwrap());
}

#[test]
fn unique_kkt_and_oracle_verification() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.json", SCALAR);
    let o = secrecy(
        &["unique", "s.json", "--power", "1", "--starts", "10"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout).to_string();
    let dist: f64 = out
        .lines()
        .find(|l| l.starts_with("max pairwise distance"))
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(dist <= 1e-8);

    assert_eq!(
        code(&secrecy(
            &["oracle", "s.json", "--power", "1", "--tol", "1e-6"],
            dir.path()
        )),
        0
    );

    secrecy(
        &["gen", "--dims", "4x4x4", "--seed", "3", "--out", "c.json"],
        dir.path(),
    );
    assert_eq!(
        code(&secrecy(
            &["unique", "c.json", "--power", "31.6", "--starts", "20"],
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&secrecy(
            &[
                "unique",
                "c.json",
                "--power",
                "31.6",
                "--starts",
                "4",
                "--threshold",
                "0"
            ],
            dir.path()
        )),
        3
    );

    assert_eq!(
        code(&secrecy(
            &["solve", "c.json", "--power", "31.6", "--json-out", "q.json"],
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&secrecy(
            &["kkt", "c.json", "--power", "31.6", "--solution", "q.json"],
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&secrecy(&["kkt", "c.json", "--power", "31.6"], dir.path())),
        0
    );
    assert_eq!(
        code(&secrecy(
            &[
                "solve",
                "c.json",
                "--power",
                "31.6",
                "--max-iters",
                "2",
                "--json-out",
                "early.json"
            ],
            dir.path()
        )),
        2
    );
    assert_eq!(
        code(&secrecy(
            &[
                "kkt",
                "c.json",
                "--power",
                "31.6",
                "--solution",
                "early.json"
            ],
            dir.path()
        )),
        3
    );
}

#[test]
fn bench_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "spec.json",
        r#"{"dims": [[2, 2, 1]], "snr_db": 10, "n_trials": 2, "seed": 1, "solvers": ["apg", "pg_fixed"], "stopping": {"epsilon": 1e-6, "window": 5}}"#,
    );
    let o = secrecy(
        &["bench", "--spec", "spec.json", "--out", "conv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("conv/bench_results.json").exists());
    assert!(dir.path().join("conv/convergence_1.csv").exists());
    let o = secrecy(
        &[
            "bench",
            "--spec",
            "spec.json",
            "--experiment",
            "timing",
            "--out",
            "timing",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("timing/bench_results.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 4);

    write(
        dir.path(),
        "zero.json",
        r#"{"dims": [[2, 2, 1]], "snr_db": 10, "n_trials": 0, "seed": 1, "solvers": ["apg"]}"#,
    );
    assert_eq!(
        code(&secrecy(&["bench", "--spec", "zero.json"], dir.path())),
        1
    );
}
