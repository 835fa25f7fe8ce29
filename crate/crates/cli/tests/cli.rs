use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::io::Write;

fn example(name: &str) -> String {
    format!("{}/../core/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn sfbmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfbmc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn stopwatch_overflow_is_reported() {
    let o = sfbmc(&["check", &example("stopwatch.sfi"), "--prop", "cent >= 0 && cent <= 5", "--kmax", "200"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("VIOLATED at depth 8"), "{out}");
    assert!(out.contains("[8] {Run, Run.Running} cent=6"), "{out}");
}

#[test]
fn toggle_is_safe() {
    let prop = example("props/toggle_exclusive.prop");
    let o = sfbmc(&["check", &example("toggle.sfi"), "--prop-file", &prop, "--kmax", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("BOUNDED SAFE up to depth 10"));
}

#[test]
fn json_report_carries_the_counterexample() {
    let o = sfbmc(&["check", &example("stopwatch.sfi"), "--prop-file", &example("props/cent_le_5.prop"), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["program"], "Stopwatch");
    assert_eq!(v["result"]["verdict"], "violated");
    assert_eq!(v["result"]["depth"], 8);
    assert_eq!(v["report"]["transitions"], 22);
    assert_eq!(v["report"]["depths"].as_array().unwrap().len(), 9);
    assert_eq!(v["report"]["depths"][8]["result"], "sat");
}

#[test]
fn every_mode_gives_the_same_depth() {
    for flags in [&["--no-incremental"][..], &["--full-disjunction"], &["--no-ssa"], &["--prune-infeasible", "--skip-partition"]] {
        let model = example("stopwatch.sfi");
        let mut args = vec!["check", model.as_str(), "--prop", "cent <= 3", "--kmax", "10"];
        args.extend_from_slice(flags);
        let o = sfbmc(&args);
        assert_eq!(o.status.code(), Some(1), "{flags:?}");
        assert!(stdout(&o).contains("VIOLATED at depth 6"), "{flags:?}: {}", stdout(&o));
    }
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n).display().to_string();
    let o = sfbmc(&[
        "check", &example("stopwatch.sfi"), "--prop", "cent <= 2", "--kmax", "10",
        "--emit-smt", &d("smt"), "--emit-sts", &d("sts.json"), "--emit-derivations", &d("der"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let scripts = std::fs::read_dir(dir.path().join("smt")).unwrap().count();
    assert_eq!(scripts, 6);
    let first = std::fs::read_to_string(dir.path().join("smt/depth_0000.smt2")).unwrap();
    assert!(first.contains("(set-logic QF_LIA)") && first.trim_end().ends_with(")"), "{first}");
    let sts: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d("sts.json")).unwrap()).unwrap();
    assert_eq!(sts["transitions"].as_array().unwrap().len(), 22);
    let der: Vec<PathBuf> = std::fs::read_dir(dir.path().join("der")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(der.len(), 22);
    assert!(std::fs::read_to_string(dir.path().join("der/t000.txt")).unwrap().starts_with("# t0 "));
}

#[test]
fn derive_lists_the_system() {
    let o = sfbmc(&["derive", &example("stopwatch.sfi"), "--partition"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("5 control points:"));
    assert!(out.contains("22 transitions:"));
    assert!(out.contains("partition: 28 obligations discharged"));
    let o = sfbmc(&["derive", &example("toggle.sfi"), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["transitions"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_prints_one_line_per_step() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sfbmc"))
        .args(["simulate", &example("stopwatch.sfi"), "--events", "-", "--init", "cent=98"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"START # go\nTIC, TIC TIC\n").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0]["activeStates"].as_array().unwrap().len(), 0);
    assert_eq!(lines[1]["activeStates"], serde_json::json!(["Stop", "Stop.Lap_stop"]));
    assert_eq!(lines[2]["event"], "START");
    let cents: Vec<i64> = lines.iter().map(|l| l["vars"]["cent"].as_i64().unwrap()).collect();
    assert_eq!(cents, [98, 98, 98, 99, 100, 0]);
    assert_eq!(lines[5]["vars"]["sec"], 1);
}

#[test]
fn bad_input_exits_with_usage_code() {
    let sw = example("stopwatch.sfi");
    let cases: Vec<Vec<&str>> = vec![
        vec!["check", &sw],
        vec!["check", &sw, "--prop", "nope > 0"],
        vec!["check", &sw, "--prop", "cent <="],
        vec!["check", "/nonexistent.sfi", "--prop", "true"],
        vec!["simulate", &sw, "--events", "/nonexistent"],
        vec!["frobnicate"],
    ];
    for args in cases {
        assert_eq!(sfbmc(&args).status.code(), Some(2), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sfi");
    std::fs::write(&bad, "program X; events E; or { transitions { -> Missing; } state A { } }").unwrap();
    let o = sfbmc(&["derive", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.sfi"));
}

#[test]
fn missing_solver_is_a_failure() {
    let o = sfbmc(&["check", &example("toggle.sfi"), "--prop", "true", "--solver", "/nonexistent/z3"]);
    assert_eq!(o.status.code(), Some(3));
}
