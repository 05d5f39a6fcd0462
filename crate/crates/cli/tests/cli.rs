use std::path::Path;
use std::process::{Command, Output};

use qmetro::numerics::pauli;
use qmetro::scenarios::scenario_dephasing_qubit;
use qmetro::DensityMatrix;
use serde_json::Value;

fn qmetro(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qmetro"));
    cmd.current_dir(dir).args(args).env_remove("QMETRO_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn f(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap(),
        Value::String(s) => s.parse().unwrap(),
        _ => panic!("not a number: {v}"),
    }
}

/// Strips the trailing timing block, the only part allowed to differ between runs.
fn without_timing(text: &str) -> &str {
    &text[..text.find("\"timing\"").expect("timing block")]
}

#[test]
fn qubit_theta_phi_qfim_is_diag_4_1() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&qmetro(
        dir.path(),
        &["qfim", "--family", "builtin:qubit-theta-phi", "--theta", "0.7853981633974483", "--phi", "0"],
        &[],
    ));
    let q = &r["points"][0]["qfim"];
    for (i, j, want) in [(0, 0, 4.0), (0, 1, 0.0), (1, 0, 0.0), (1, 1, 1.0)] {
        assert!((f(&q[i][j]) - want).abs() < 1e-12, "F[{i}][{j}] = {}", q[i][j]);
    }
}

#[test]
fn dephasing_scenario_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&qmetro(dir.path(), &["scenario", "dephasing", "--B", "1", "--gamma", "0.1", "--t", "2"], &[]));
    let p = &r["points"][0];
    assert!(f(&p["deviation"]) < 1e-8);
    assert_eq!(p["flags"], Value::Array(vec![]));
}

#[test]
fn report_numbers_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&qmetro(dir.path(), &["scenario", "dephasing", "--B", "0.3", "--gamma", "0.07", "--t", "1.9"], &[]));
    let plus = DensityMatrix::new((&pauli::id() + &pauli::dot([1.0, 0.0, 0.0])).scale_real(0.5)).unwrap();
    let direct = scenario_dephasing_qubit(0.3, 0.07, 1.9, &plus).unwrap();
    let q = &r["points"][0]["qfim"];
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(f(&q[i][j]).to_bits(), direct.computed.matrix[(i, j)].to_bits());
        }
    }
    assert_eq!(f(&r["points"][0]["trace_inverse"]).to_bits(), direct.trace_inverse.to_bits());
}

#[test]
fn unknown_key_is_named_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"family": "builtin:thermal", "grpae": {"slices": 4}}"#).unwrap();
    let out = qmetro(dir.path(), &["qfim", "--config", "c.json"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grpae"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn type_error_reports_path_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"grape": {"slices": "many"}}"#).unwrap();
    let out = qmetro(dir.path(), &["grape", "--config", "c.json"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grape.slices"));
}

#[test]
fn out_of_domain_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmetro(dir.path(), &["scenario", "dephasing", "--gamma", "-1"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn grid_of_eleven_gives_eleven_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"scenario": "dephasing", "params": {"gamma": 0.1, "t": 2},
            "grid": {"B": {"start": 0, "stop": 1, "count": 11}}}"#,
    )
    .unwrap();
    let out = qmetro(dir.path(), &["scenario", "--config", "c.json", "--csv", "t.csv", "--out", "r.json"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# qmetro-csv v1"));
    let header: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(header[0], "B");
    assert!(header.contains(&"F:B:gamma") && header.contains(&"trace_inverse"));
    assert_eq!(*header.last().unwrap(), "flags");
    assert_eq!(lines.len() - 2, 11);
    let bs: Vec<f64> = lines[2..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!((bs[10] - 1.0).abs() < 1e-15 && bs[0] == 0.0);

    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["points"].as_array().unwrap().len(), 11);
}

#[test]
fn reruns_are_byte_identical_and_thread_count_independent() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"family": "builtin:thermal", "hamiltonian": "random", "params": {"levels": 4},
            "grid": {"T": [0.5, 1, 2, 3], "omega": [0.7, 1.3]}}"#,
    )
    .unwrap();
    let run = |name: &str, threads: Option<&str>| {
        let env: Vec<(&str, &str)> = threads.map(|t| ("QMETRO_THREADS", t)).into_iter().collect();
        let out = qmetro(
            dir.path(),
            &["thermo", "--config", "cfg.json", "--seed", "9", "--out", &format!("{name}.json"), "--csv", &format!("{name}.csv")],
            &env,
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let json = std::fs::read_to_string(dir.path().join(format!("{name}.json"))).unwrap();
        let csv = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        (json, csv)
    };
    let (a, ca) = run("a", None);
    let (b, cb) = run("b", None);
    let (c, cc) = run("c", Some("1"));
    assert_eq!(without_timing(&a), without_timing(&b));
    assert_eq!(without_timing(&a), without_timing(&c));
    assert_eq!(ca, cb);
    assert_eq!(ca, cc);
    assert_eq!(ca.lines().count(), 2 + 8);

    let (d, _) = run("d", None);
    let other = qmetro(dir.path(), &["thermo", "--config", "cfg.json", "--seed", "10"], &[]);
    assert_eq!(without_timing(&d), without_timing(&a));
    assert_ne!(without_timing(std::str::from_utf8(&other.stdout).unwrap()), without_timing(&a));
}

#[test]
fn invalid_thread_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["0", "lots"] {
        let out = qmetro(dir.path(), &["qfim", "--family", "builtin:thermal"], &[("QMETRO_THREADS", bad)]);
        assert_eq!(out.status.code(), Some(2), "QMETRO_THREADS={bad}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("QMETRO_THREADS"));
    }
}

#[test]
fn grape_writes_iteration_history() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.json"), r#"{"grape": {"slices": 6, "max_iterations": 40}}"#).unwrap();
    let out = qmetro(dir.path(), &["grape", "--config", "g.json", "--out", "g_report.json"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let hist = std::fs::read_to_string(dir.path().join("g_report.history.csv")).unwrap();
    let lines: Vec<&str> = hist.lines().collect();
    assert_eq!(lines[1], "iteration,objective,gradient_norm");
    assert_eq!(lines.len() - 2, 40);
    let obj = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(obj(lines[lines.len() - 1]) > obj(lines[2]));

    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g_report.json")).unwrap()).unwrap();
    assert!(f(&r["best_objective"]) >= f(&r["initial_objective"]));
}

#[test]
fn measurement_and_bounds_run() {
    let dir = tempfile::tempdir().unwrap();
    let m = report(&qmetro(dir.path(), &["measurement", "--family", "builtin:qubit-theta-phi"], &[]));
    assert!(m["points"][0].get("cfim").is_some(), "{m}");
    let b = report(&qmetro(dir.path(), &["bounds", "--family", "builtin:dephasing-qubit", "--repetitions", "10"], &[]));
    assert!(b["points"][0].get("crb").is_some(), "{b}");
}
