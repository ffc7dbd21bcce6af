use std::process::{Command, Output};

use ensemble_harness::TrialStats;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensemble-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bell_run_reports_json() {
    let o = sim(&["bell", "--state", "psi+", "--trials", "200", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stats: TrialStats = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stats.n_trials, 200);
    assert_eq!(stats.verdicts["PsiPlus"], 200);
    assert_eq!(stats.verdicts["Discard"], 0);
}

#[test]
fn invalid_configuration_exits_with_two() {
    for args in [
        vec!["bell", "--trials", "10"],
        vec!["bell", "--seed", "1", "--trials", "0"],
        vec![
            "bell",
            "--seed",
            "1",
            "--eta",
            "1.5",
            "--backend",
            "physical",
        ],
        vec!["dj", "--seed", "1"],
        vec!["dj", "--seed", "1", "--oracle", "F9"],
        vec!["bell", "--seed", "1", "--backend", "quantum"],
        vec!["cnot", "--seed", "1", "--state", "+"],
        vec![
            "sweep",
            "--protocol",
            "bell",
            "--parameter",
            "eta",
            "--start",
            "0.5",
            "--stop",
            "1.0",
            "--step",
            "0.1",
            "--seed",
            "1",
        ],
    ] {
        let o = sim(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn self_check_passes_before_running() {
    let o = sim(&[
        "dj",
        "--oracle",
        "F1",
        "--trials",
        "5",
        "--seed",
        "1",
        "--self-check",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn flags_override_config_file_and_out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "backend = \"physical\"\neta = 0.5\ndark = 0.01\nseed = 11\ntrials = 50\n",
    )
    .unwrap();
    let out = dir.path().join("stats.json");
    let o = sim(&[
        "bell",
        "--config-file",
        cfg.to_str().unwrap(),
        "--eta",
        "0.9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let stats: TrialStats = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(stats.spec.detectors.efficiency, 0.9);
    assert_eq!(stats.spec.detectors.dark_count_prob, 0.01);
    assert_eq!(stats.spec.seed, 11);
    assert_eq!(stats.n_trials, 50);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seeds = 3\n").unwrap();
    let o = sim(&["bell", "--config-file", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_reported_with_path() {
    let o = sim(&[
        "bell",
        "--seed",
        "1",
        "--trials",
        "2",
        "--out",
        "/nonexistent-dir/x.json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/x.json"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "cnot",
        "--backend",
        "physical",
        "--eta",
        "0.8",
        "--dark",
        "0.01",
        "--trials",
        "300",
        "--seed",
        "77",
        "--omit-timing",
    ];
    let a = sim(&args);
    let b = sim(&args);
    let mut serial_args = args.to_vec();
    serial_args.push("--serial");
    let c = sim(&serial_args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn sweep_csv_has_header_and_one_row_per_point() {
    let o = sim(&[
        "sweep",
        "--protocol",
        "bell",
        "--parameter",
        "eta",
        "--start",
        "0.5",
        "--stop",
        "1.0",
        "--step",
        "0.1",
        "--backend",
        "physical",
        "--trials",
        "100",
        "--seed",
        "4",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[0].starts_with("protocol,state,oracle,backend,config,efficiency"));
}
