use std::process::{Command, Output};

use swival::construction::build_rational_variant;
use swival::sysfile::SystemDescription;

fn swival(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swival"))
        .args(args)
        .output()
        .expect("spawn swival")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn make_system_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    let o = swival(&["make-system", "--variant", "rational", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("8.0000000000000002e-3"));
    let desc = SystemDescription::read(&path).unwrap();
    let c = build_rational_variant();
    assert_eq!(desc.system, c.system);
    assert_eq!(desc.cost, c.cost);
    assert_eq!(desc.system.mode(0).unwrap().to_rows()[0], vec![0.008, -0.006]);
}

#[test]
fn make_system_records_alpha_and_embeds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    let o = swival(&[
        "make-system", "--variant", "irrational", "--alpha", "0.6", "--dim", "4", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("alpha 5.9999999999999998e-1"));
    let desc = SystemDescription::read(&path).unwrap();
    assert_eq!(desc.system.dim(), 4);
    // the file feeds back into commands that need the rotation structure
    let t = swival(&["thresholds", "--system", path.to_str().unwrap()]);
    assert_eq!(t.status.code(), Some(0), "{}", String::from_utf8_lossy(&t.stderr));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(swival(&["make-system", "--variant", "irrational"]).status.code(), Some(2));
    assert_eq!(swival(&["thresholds", "--alpha", "0.2"]).status.code(), Some(2));
    assert_eq!(swival(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(swival(&["kinks", "--system", "/nonexistent/file.json"]).status.code(), Some(1));
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_swival"))
        .args(["jsr"])
        .env("SWIVAL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_swival"))
        .args(["jsr"])
        .env("SWIVAL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn profile_has_unit_cost_at_zero() {
    let o = swival(&["profile", "--points", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out
        .lines()
        .skip(1)
        .find(|l| l.starts_with("0.0000000000000000e0,"))
        .expect("row at theta = 0");
    let ct: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(ct, 1.0);
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        vec!["profile", "--points", "300"],
        vec!["profile", "--grid", "--points", "512", "--objective", "max"],
        vec!["delta", "--alpha", "0.7"],
        vec!["kinks", "--max-depth", "5"],
        vec!["orbit", "--depth", "200"],
    ] {
        let a = swival(&args);
        let b = Command::new(env!("CARGO_BIN_EXE_swival"))
            .args(&args)
            .env("SWIVAL_THREADS", "3")
            .output()
            .unwrap();
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn grid_export_header_and_modes() {
    let o = swival(&["profile", "--grid", "--points", "64"]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("theta,value,mode"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.ends_with(",0") || r.ends_with(",1")));
}

#[test]
fn kinks_file_is_json_array() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kinks.json");
    let o = swival(&["kinks", "--max-depth", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 4);
    assert_eq!(arr[0]["depth"], 0);
    assert_eq!(arr[0]["fd_confirmed"], true);
    assert!(arr[3]["fd_gap"].is_null());
}

#[test]
fn verify_suite_passes() {
    let o = swival(&["verify", "--suite", "lemmas"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("13 of 13 checks passed"));
}
