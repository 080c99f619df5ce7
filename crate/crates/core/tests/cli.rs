//! Command-line contract: exit codes, report layout and CSV output.

mod common;

use std::fs;

use common::{run_cli, strip_timestamp};
use serde_json::Value;

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hardy_suite_writes_one_holding_record_per_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(
        &[
            "verify", "hardy", "--cases", "200", "--seed", "7", "--out", "r.json",
        ],
        dir.path(),
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = read_json(&dir.path().join("r.json"));
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 200);
    assert!(records.iter().all(|r| r["verdict"] == "holds"));
    assert_eq!(report["summary"]["holds"], 200);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["seed"], 7);
}

#[test]
fn korn_first_sweep_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "korn-first",
        "--domain",
        "rect",
        "--l",
        "1",
        "--h-sweep",
        "0.2,0.1,0.05,0.025",
        "--bc",
        "dirichlet-ends",
        "--nx",
        "8",
        "--ny",
        "64",
        "--out",
        "k.json",
        "--csv",
        "k.csv",
    ];
    let out = run_cli(&args, dir.path(), None);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = read_json(&dir.path().join("k.json"));
    let exponent = report["records"][0]["fit"]["exponent"].as_f64().unwrap();
    assert!((-2.3..=-1.7).contains(&exponent), "exponent {exponent}");
    let csv = fs::read_to_string(dir.path().join("k.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,lhs,rhs,ratio");
    assert_eq!(lines.len() - 1, 4);
}

#[test]
fn eps_outside_unit_interval_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for eps in ["0", "1.5", "-0.2"] {
        let out = run_cli(&["verify", "hardy", "--eps", eps], dir.path(), None);
        assert_eq!(out.status.code(), Some(2), "eps {eps}");
    }
}

#[test]
fn argument_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["verify", "nonsense"],
        &["korn-first", "--domain", "disk"],
        &["strong-ratio"],
        &[
            "verify",
            "thm13",
            "--op",
            "1,0.5,0.5,1",
            "--h-sweep",
            "0.2,0.1,0.05",
        ],
        &["solve", "--h", "0.1", "--config", "missing.json"],
    ];
    for args in cases {
        assert_eq!(
            run_cli(args, dir.path(), None).status.code(),
            Some(2),
            "{args:?}"
        );
    }
    fs::write(
        dir.path().join("bad.json"),
        r#"{"command":"solve","unknown":1}"#,
    )
    .unwrap();
    assert_eq!(
        run_cli(&["solve", "--config", "bad.json"], dir.path(), None)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_file_round_trips_through_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(
        &[
            "verify", "lemma21", "--cases", "3", "--seed", "4", "--out", "a.json",
        ],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let first = read_json(&dir.path().join("a.json"));
    let mut cfg = first["config"].clone();
    cfg["out"] = Value::String("b.json".into());
    fs::write(dir.path().join("cfg.json"), cfg.to_string()).unwrap();
    let out = run_cli(
        &["verify", "lemma21", "--config", "cfg.json"],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let second = read_json(&dir.path().join("b.json"));
    assert_eq!(first["records"], second["records"]);
}

#[test]
fn reruns_are_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (k, threads) in [Some(1), Some(3), None].into_iter().enumerate() {
        let sub = dir.path().join(k.to_string());
        fs::create_dir(&sub).unwrap();
        let out = run_cli(
            &[
                "verify", "hardy", "--cases", "50", "--seed", "99", "--out", "r.json",
            ],
            &sub,
            threads,
        );
        assert_eq!(out.status.code(), Some(0));
        texts.push(strip_timestamp(
            &fs::read_to_string(sub.join("r.json")).unwrap(),
        ));
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn zero_cases_give_an_empty_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(
        &["verify", "lemma22", "--cases", "0", "--out", "e.json"],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("e.json"));
    assert_eq!(report["records"].as_array().unwrap().len(), 0);
    assert_eq!(report["summary"]["records"], 0);
    assert_eq!(report["summary"]["all_hold"], true);
}

#[test]
fn mesh_dump_and_solve_write_nodal_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(
        &[
            "mesh-dump",
            "--h",
            "0.1",
            "--nx",
            "2",
            "--ny",
            "2",
            "--csv",
            "m.csv",
            "--out",
            "m.json",
        ],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.path().join("m.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 9
    );
    assert_eq!(
        read_json(&dir.path().join("m.json"))["summary"]["informational"],
        1
    );

    let out = run_cli(
        &[
            "solve", "--domain", "cap", "--h", "0.1", "--nx", "4", "--ny", "16", "--csv", "s.csv",
        ],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.path().join("s.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 5 * 17
    );
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = std::process::Command::new(common::BIN)
        .args(["verify", "hardy", "--cases", "1"])
        .env("KORN_LAB_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["--help"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("korn-first"));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(
        &[
            "korn-first",
            "--h-sweep",
            "0.2,0.1,0.05",
            "--ny",
            "16",
            "--out",
            "x.json",
        ],
        dir.path(),
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let mut cfg = read_json(&dir.path().join("x.json"))["config"].clone();
    // a residual target below round-off cannot be met
    cfg["tolerances"]["eigen"] = serde_json::json!(1e-300);
    fs::write(dir.path().join("cfg.json"), cfg.to_string()).unwrap();
    let out = run_cli(&["korn-first", "--config", "cfg.json"], dir.path(), None);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
