use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardy-radial"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid json")
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-300
}

/// Compares two CSV profiles cell by cell to a relative tolerance.
fn assert_csv_close(got: &str, want: &str, rel: f64) {
    let (g, w): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(g.len(), w.len(), "row count");
    assert_eq!(g[0], "r,u,du_dr,flux,w");
    assert_eq!(g[0], w[0]);
    for (i, (a, b)) in g.iter().zip(&w).enumerate().skip(1) {
        for (x, y) in a.split(',').zip(b.split(',')) {
            if x.is_empty() || y.is_empty() {
                assert_eq!(x, y, "row {i}");
                continue;
            }
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            // values crossing zero at the ball boundary are compared absolutely
            assert!(close(x, y, rel) || (x - y).abs() < 1e-9, "row {i}: {x} vs {y}");
        }
    }
}

fn assert_json_close(got: &Value, want: &Value, rel: f64) {
    match (got, want) {
        (Value::Object(a), Value::Object(b)) => {
            let mut ka: Vec<_> = a.keys().collect();
            let mut kb: Vec<_> = b.keys().collect();
            ka.sort();
            kb.sort();
            assert_eq!(ka, kb);
            for k in a.keys() {
                assert_json_close(&a[k], &b[k], rel);
            }
        }
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!(close(x, y, rel) || (x.abs() < 1e-9 && y.abs() < 1e-9), "{x} vs {y}");
        }
        _ => assert_eq!(got, want),
    }
}

#[test]
fn exponents_summary() {
    let o = run(&["exponents", "--N", "4", "--p", "2", "--mu", "0.75"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&stdout(&o));
    assert!((v["gamma1"].as_f64().unwrap() - 0.5).abs() <= 1e-12);
    assert!((v["gamma2"].as_f64().unwrap() - 1.5).abs() <= 1e-12);
    assert_eq!(v["params"]["N"], 4);
    // absent fields are omitted, never null
    assert!(v.get("C1").is_none() && v.get("runtime_seconds").is_none());
    assert!(!stdout(&o).contains("null"));
}

#[test]
fn usage_errors_exit_2() {
    let o = run(&["exponents", "--N", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--p"), "{}", stderr(&o));
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    let o = run(&["ground-state", "--N", "4", "--p", "2", "--mu", "1.2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("requires mu < ((N-p)/p)^p"), "{}", stderr(&o));

    let o = run(&["exponents", "--N", "4", "--p", "2", "--s", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("requires 0 <= s < p"));

    let o = run(&["ground-state", "--N", "4", "--p", "2", "--samples", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--samples"));

    let o = run(&["closed-form", "--N", "5", "--p", "3", "--mu", "-2"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let o = run(&["ground-state", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--quad-tol"));
    assert!(stdout(&o).contains("default: 1e-12"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# test\nN = 4\np = 2\nmu = 0.5\n").unwrap();
    let c = cfg.to_str().unwrap();

    let o = run(&["exponents", "--config", c]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&stdout(&o))["params"]["mu"], 0.5);

    let o = run(&["exponents", "--config", c, "--mu", "0.75"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&stdout(&o));
    assert_eq!(v["params"]["mu"], 0.75);
    assert!((v["gamma1"].as_f64().unwrap() - 0.5).abs() <= 1e-12);

    fs::write(&cfg, "N = 4\nwidth = 3\n").unwrap();
    let o = run(&["exponents", "--config", c, "--p", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for prefix in [&a, &b] {
        let o = run(&[
            "ground-state",
            "--N",
            "5",
            "--p",
            "3",
            "--mu",
            "-2",
            "--samples",
            "301",
            "--out",
            prefix.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for ext in ["csv", "json"] {
        let x = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let y = fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert_eq!(x, y, "{ext}");
    }
    let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(!csv.contains('\r'));
    assert_eq!(csv.lines().count(), 302);
}

fn check_golden(name: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("run");
    let mut all = args.to_vec();
    all.extend_from_slice(&["--samples", "201", "--out", prefix.to_str().unwrap()]);
    let o = run(&all);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let got = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    let want = fs::read_to_string(golden(&format!("{name}.csv"))).unwrap();
    assert_csv_close(&got, &want, 1e-9);
    let got = json(&fs::read_to_string(prefix.with_extension("json")).unwrap());
    let want = json(&fs::read_to_string(golden(&format!("{name}.json"))).unwrap());
    assert_json_close(&got, &want, 1e-6);
}

#[test]
fn golden_closed_form() {
    check_golden("mu0_n4", &["closed-form", "--N", "4", "--p", "3"]);
}

#[test]
fn golden_ground_state() {
    check_golden("ground_n5_p3_mu-2", &["ground-state", "--N", "5", "--p", "3", "--mu", "-2"]);
}

#[test]
fn golden_ball() {
    check_golden(
        "ball_n5_p2_mu0.5",
        &["ball", "--N", "5", "--p", "2", "--mu", "0.5", "--lambda-frac", "0.3"],
    );
}

#[test]
fn verify_default_suite() {
    let t = Instant::now();
    let o = run(&["verify"]);
    let elapsed = t.elapsed().as_secs_f64();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(elapsed < 60.0, "{elapsed}");
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn verify_profile_detects_corruption() {
    let path = golden("mu0_n4.csv");
    let o = run(&["verify", "--N", "4", "--p", "3", "--profile", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mid = lines.len() / 2;
    let mut cells: Vec<String> = lines[mid].split(',').map(String::from).collect();
    let u: f64 = cells[1].parse().unwrap();
    cells[1] = format!("{:?}", u * 1.001);
    lines[mid] = cells.join(",");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let o = run(&["verify", "--N", "4", "--p", "3", "--profile", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL  closed-form sup relative error"), "{out}");
    assert!(out.contains("measured=") && out.contains("allowed="));
}

#[test]
fn verify_nonexistence_exits_0() {
    let o = run(&["verify", "--N", "5", "--p", "2", "--mu", "0.5", "--lambda", "-1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("no solution (consistent with nonexistence theorem)"));
}

#[test]
fn ball_without_solution_is_a_numerical_failure() {
    let o = run(&["ball", "--N", "5", "--p", "2", "--mu", "0.5", "--lambda", "-1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no solution"));
}

#[test]
fn eigen_summary() {
    let o = run(&["eigen", "--N", "3", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let lam = json(&stdout(&o))["lambda1"].as_f64().unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!(((lam - pi2) / pi2).abs() < 1e-4);
}

#[test]
fn sweep_writes_files_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("sw");
    let o = run(&[
        "sweep",
        "--N",
        "4",
        "--p",
        "2",
        "--axis",
        "mu=0,0.5",
        "--axis",
        "s=0,1",
        "--samples",
        "101",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let index = json(&fs::read_to_string(dir.path().join("sw_index.json")).unwrap());
    let entries = index.as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for (k, e) in entries.iter().enumerate() {
        assert_eq!(e["index"], k);
        let csv = dir.path().join(e["profile"].as_str().unwrap());
        assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 102);
        let summary = json(&fs::read_to_string(dir.path().join(e["summary"].as_str().unwrap())).unwrap());
        assert_eq!(summary["params"]["mu"], e["params"]["mu"]);
    }
    assert_eq!(entries[1]["params"]["s"], 1.0);

    // an inadmissible point is recorded in the index and fails the run
    let o = run(&[
        "sweep",
        "--task",
        "exponents",
        "--N",
        "4",
        "--p",
        "2",
        "--axis",
        "mu=0.5,2",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let index = json(&fs::read_to_string(dir.path().join("sw_index.json")).unwrap());
    assert!(index[1]["error"].as_str().unwrap().contains("requires mu"));
    assert!(index[0].get("error").is_none());
}
