use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn knva(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knva"))
        .args(args)
        .current_dir(dir)
        .env_remove("KNVA_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn genus0_files(dir: &Path) {
    let o = knva(&["atlas", "--genus", "0", "--window", "8", "--max-weight", "3", "-o", "a.json"], dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = knva(&["tables", "--atlas", "a.json", "-o", "t.json"], dir);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn genus0_pipeline_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    genus0_files(d);
    assert!(stdout(&knva(&["tables", "--atlas", "a.json"], d)).contains("gamma band |n+m| <= 0"));
    let first = std::fs::read(d.join("t.json")).unwrap();
    knva(&["tables", "--atlas", "a.json", "-o", "t.json"], d);
    assert_eq!(first, std::fs::read(d.join("t.json")).unwrap());

    let o = knva(&["verify", "--atlas", "a.json", "--tables", "t.json", "--max-degree", "2", "--report", "r.jsonl"], d);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = std::fs::read_to_string(d.join("r.jsonl")).unwrap();
    let records: Vec<Value> = report.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(records.len() > 20);
    assert!(records.iter().all(|r| r["status"] == "pass"));
    for suite in ["duality", "bands", "vacuum", "translation", "locality", "wick", "affine"] {
        assert!(records.iter().any(|r| r["suite"] == suite), "{suite}");
    }
    knva(&["verify", "--atlas", "a.json", "--tables", "t.json", "--max-degree", "2", "--report", "r2.jsonl"], d);
    assert_eq!(report, std::fs::read_to_string(d.join("r2.jsonl")).unwrap());
}

#[test]
fn corrupted_gamma_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    genus0_files(d);
    let mut t: Value = serde_json::from_str(&std::fs::read_to_string(d.join("t.json")).unwrap()).unwrap();
    let entries = t["tables"]["gamma"]["entries"].as_array_mut().unwrap();
    let e = entries.iter_mut().find(|e| e["doubled_indices"] == serde_json::json!([-6, 6])).unwrap();
    e["value"] = Value::from("4/1");
    std::fs::write(d.join("bad.json"), serde_json::to_string_pretty(&t).unwrap()).unwrap();
    let o = knva(&["verify", "--atlas", "a.json", "--tables", "bad.json", "--suite", "bands", "--format", "json"], d);
    assert_eq!(o.status.code(), Some(1));
    let failed: Vec<Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|r| r["status"] == "fail")
        .collect();
    assert_eq!(failed.len(), 1, "{failed:?}");
    assert_eq!(failed[0]["check"], "gamma_antisymmetry");
    let detail = failed[0]["detail"]["detail"].as_str().unwrap();
    assert!(detail.contains("(-3,3)") || detail.contains("(3,-3)"), "{detail}");
}

#[test]
fn field_queries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    genus0_files(d);
    let o = knva(&["field", "--tables", "t.json", "--state", "|0>", "--coeff", "0"], d);
    assert_eq!(stdout(&o), "field: id\n[0] id\n");
    let o = knva(&["field", "--tables", "t.json", "--state", "a[-1]|0>", "--coeff", "g/2-1", "--apply", "|0>"], d);
    assert!(stdout(&o).contains("applied: 1/1*a[-1]|0>"), "{}", stdout(&o));
    let o = knva(&["field", "--tables", "t.json", "--state", "a[-2]a[-1]|0>", "--coeff", "-2", "--apply", "|0>"], d);
    assert!(stdout(&o).contains("applied: 1/1*a[-2]a[-1]|0>"), "{}", stdout(&o));
    let o = knva(&["field", "--tables", "t.json", "--state", "a[-0]|0>"], d);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = knva(&["atlas", "--genus", "2"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("genus ≥ 2 requires --load"));
    assert_eq!(knva(&["atlas", "--genus", "1", "--window", "3.5"], d).status.code(), Some(2));
    assert_eq!(knva(&["atlas", "--genus", "0", "--window", "6.5"], d).status.code(), Some(2));
    assert_eq!(knva(&["verify", "--atlas", "missing.json"], d).status.code(), Some(2));
    genus0_files(d);
    assert_eq!(knva(&["verify", "--atlas", "a.json", "--suite", "nonsense"], d).status.code(), Some(2));
}

#[test]
fn precision_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "atlas", "--genus", "1", "--tau", "0+1i", "--p-plus", "0.17+0.31i", "--p-minus", "-0.21+0.12i", "--window", "2.5",
        "-o", "a.json", "--format", "json",
    ];
    let o = Command::new(env!("CARGO_BIN_EXE_knva")).args(args).current_dir(d).env("KNVA_PRECISION", "25").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let atlas: Value = serde_json::from_str(&std::fs::read_to_string(d.join("a.json")).unwrap()).unwrap();
    assert_eq!(atlas["config"]["scalar_mode"]["digits"], 25);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["passed"], true);
    let tol = report["tolerance"].as_f64().unwrap();
    assert!((tol / 10f64.powf(-12.5) - 1.0).abs() < 1e-9, "{tol}");
    let o = knva(&["atlas", "--genus", "1", "--tau", "0+1i", "--p-plus", "0.17+0.31i", "--p-minus", "-0.21+0.12i", "--window", "2.5", "--precision", "20", "-o", "b.json"], d);
    assert_eq!(o.status.code(), Some(0));
    let atlas: Value = serde_json::from_str(&std::fs::read_to_string(d.join("b.json")).unwrap()).unwrap();
    assert_eq!(atlas["config"]["scalar_mode"]["digits"], 20);
}
