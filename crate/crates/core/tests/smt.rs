mod common;

use std::process::Command;
use std::time::Duration;

use common::{fixture, fixture_prop, strings};
use sfbmc_core::bmc::{bmc_check_sts, BmcOptions};
use sfbmc_core::smt::*;
use sfbmc_core::symbolic::Sym;
use sfbmc_core::{bmc_check, build_sts, parse_expr, parse_model, replay_validate, Value, Verdict};

fn script(decls: &[&str], asserts: &[&str], values: &[&str]) -> SmtScript {
    let mut commands: Vec<String> = decls.iter().map(|d| format!("(declare-const {d} Int)")).collect();
    commands.extend(asserts.iter().map(|a| format!("(assert {a})")));
    SmtScript { logic: "QF_LIA".into(), commands, values: strings(values) }
}

fn z3_file(path: &std::path::Path) -> String {
    let cfg = SolverConfig::default();
    let args: Vec<&String> = cfg.args.iter().filter(|a| a.as_str() != "-in").collect();
    let out = Command::new(&cfg.path).args(args).arg(path).output().unwrap();
    String::from_utf8(out.stdout).unwrap().lines().next().unwrap_or("").to_string()
}

/// A stand-in solver that acknowledges everything and misbehaves on
/// `check-sat` or `get-value`.
fn fake_solver(dir: &tempfile::TempDir, on_check: &str, on_value: &str) -> SolverConfig {
    let path = dir.path().join("solver.sh");
    let body = format!(
        "#!/bin/sh\nwhile read -r line; do\n  case \"$line\" in\n    \"(check-sat)\") {on_check} ;;\n    \"(get-value\"*) {on_value} ;;\n    *) echo success ;;\n  esac\ndone\n"
    );
    std::fs::write(&path, body).unwrap();
    Command::new("chmod").arg("+x").arg(&path).status().unwrap();
    SolverConfig { path: path.display().to_string(), args: Vec::new(), timeout: Duration::from_millis(500) }
}

#[test]
fn contradiction_is_unsat_and_equation_has_its_model() {
    let cfg = SolverConfig::default();
    let mut s = SolverSession::start(&cfg).unwrap();
    assert_eq!(solve(&script(&["x"], &["(> x 0)", "(< x 0)"], &["x"]), &mut s).unwrap(), SolverVerdict::Unsat);
    match solve(&script(&["x"], &["(= x 3)"], &["x"]), &mut s).unwrap() {
        SolverVerdict::Sat(m) => assert_eq!(m["x"], Value::int(3)),
        v => panic!("{v:?}"),
    }
    match solve_fresh(&script(&["y"], &["(= (+ y 7) 2)"], &["y"]), &cfg).unwrap() {
        SolverVerdict::Sat(m) => assert_eq!(m["y"], Value::int(-5)),
        v => panic!("{v:?}"),
    }
}

#[test]
fn solver_errors_name_the_command() {
    let mut s = SolverSession::start(&SolverConfig::default()).unwrap();
    match s.command("(assert (> nope 0))") {
        Err(SolverError::Rejected { command, .. }) => assert!(command.contains("nope")),
        r => panic!("{r:?}"),
    }
    assert!(s.is_alive());
    s.command("(declare-const z Int)").unwrap();
    assert!(s.get_value(&strings(&["w"])).is_err());
}

#[test]
fn hanging_or_crashing_solver_gives_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let slow = fake_solver(&dir, "sleep 5", "echo '()'");
    let mut s = SolverSession::start(&slow).unwrap();
    assert!(matches!(s.check_sat().unwrap(), SatResult::Unknown(r) if r.contains("timeout")));
    assert!(!s.is_alive());

    let dir2 = tempfile::tempdir().unwrap();
    let crash = fake_solver(&dir2, "exit 1", "echo '()'");
    let mut s = SolverSession::start(&crash).unwrap();
    assert!(matches!(s.check_sat().unwrap(), SatResult::Unknown(r) if r.contains("exited")));

    let missing = SolverConfig { path: "/nonexistent/solver".into(), ..SolverConfig::default() };
    assert!(matches!(SolverSession::start(&missing), Err(SolverError::Spawn { .. })));
}

#[test]
fn malformed_model_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fake_solver(&dir, "echo sat", "echo '((x 1) (y))'");
    let mut s = SolverSession::start(&cfg).unwrap();
    assert!(matches!(s.check_and_model(&strings(&["x", "y"])), Err(SolverError::Protocol(_))));

    let dir = tempfile::tempdir().unwrap();
    let cfg = fake_solver(&dir, "echo sat", "echo '((x 1))'");
    let mut s = SolverSession::start(&cfg).unwrap();
    assert!(matches!(s.check_and_model(&strings(&["x", "y"])), Err(SolverError::Protocol(m)) if m.contains("lacks y")));
}

#[test]
fn default_arguments_follow_the_solver() {
    assert_eq!(SolverConfig::default_args("/opt/bin/z3")[..2], ["-in", "-smt2"]);
    assert!(SolverConfig::default_args("cvc5").contains(&"--incremental".to_string()));
    assert!(SolverConfig::default_args("mysolver").is_empty());
}

#[test]
fn depth_zero_query_is_init_and_negated_property() {
    let p = fixture("stopwatch.sfi");
    let sts = build_sts(&p).unwrap();
    let prop = fixture_prop("cent_le_5.prop");
    let q = encode_bmc_query(&sts, &prop, 0).unwrap();
    assert_eq!(q.transition_assertions(), 0);
    assert!(!q.text().contains("ev."));
    let asserts: Vec<&String> = q.commands.iter().filter(|c| c.starts_with("(assert")).collect();
    assert_eq!(asserts.len(), 2);
    assert_eq!(asserts[1], "(assert (not (and (<= 0 cent__0) (<= cent__0 5))))");
    assert_eq!(solve_fresh(&q, &SolverConfig::default()).unwrap(), SolverVerdict::Unsat);
}

#[test]
fn toggle_states_stay_exclusive() {
    let p = fixture("toggle.sfi");
    let sts = build_sts(&p).unwrap();
    let prop = fixture_prop("toggle_exclusive.prop");
    for k in 0..=4 {
        let q = encode_bmc_query(&sts, &prop, k).unwrap();
        assert_eq!(solve_fresh(&q, &SolverConfig::default()).unwrap(), SolverVerdict::Unsat, "k={k}");
    }
}

#[test]
fn toggle_reaches_b_after_one_event() {
    let p = fixture("toggle.sfi");
    let sts = build_sts(&p).unwrap();
    let prop = parse_expr("!in(B)").unwrap();
    let cfg = SolverConfig::default();
    assert_eq!(solve_fresh(&encode_bmc_query(&sts, &prop, 1).unwrap(), &cfg).unwrap(), SolverVerdict::Unsat);
    let q = encode_bmc_query(&sts, &prop, 2).unwrap();
    let SolverVerdict::Sat(model) = solve_fresh(&q, &cfg).unwrap() else { panic!("expected sat") };
    let ce = extract_counterexample(&model, &sts, &prop, 2).unwrap();
    assert_eq!(ce.violated_at, 2);
    let shown: Vec<(Option<&str>, String)> = ce
        .steps
        .iter()
        .map(|s| (s.event.as_deref(), s.active.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    assert_eq!(shown, [(None, String::new()), (None, "A".into()), (Some("E"), "B".into())]);
    assert_eq!(ce.events(), ["E"]);
    assert!(replay_validate(&ce, &p, &prop).ok);

    let safe = fixture_prop("toggle_exclusive.prop");
    assert_eq!(extract_counterexample(&model, &sts, &safe, 2), Err(ExtractError::NoViolation));
    let mut partial = model.clone();
    partial.remove("in.B__1");
    assert_eq!(extract_counterexample(&partial, &sts, &prop, 2), Err(ExtractError::Missing("in.B__1".into())));
}

#[test]
fn stopwatch_counts_past_five() {
    let p = fixture("stopwatch.sfi");
    let sts = build_sts(&p).unwrap();
    let prop = fixture_prop("cent_le_5.prop");
    let cfg = SolverConfig::default();
    assert_eq!(solve_fresh(&encode_bmc_query(&sts, &prop, 7).unwrap(), &cfg).unwrap(), SolverVerdict::Unsat);
    let SolverVerdict::Sat(model) = solve_fresh(&encode_bmc_query(&sts, &prop, 8).unwrap(), &cfg).unwrap() else {
        panic!("expected sat")
    };
    let ce = extract_counterexample(&model, &sts, &prop, 8).unwrap();
    assert_eq!(ce.violated_at, 8);
    assert_eq!(ce.steps[8].vars["cent"], Value::int(6));
    let mut evs = strings(&["START"]);
    evs.extend(std::iter::repeat_n("TIC".to_string(), 6));
    assert_eq!(ce.events(), evs);
    assert!(replay_validate(&ce, &p, &prop).ok);
}

#[test]
fn tampered_counterexample_fails_replay() {
    let p = fixture("stopwatch.sfi");
    let prop = fixture_prop("cent_le_5.prop");
    let (v, _) = bmc_check(&p, &prop, &BmcOptions { kmax: 10, ..Default::default() }).unwrap();
    let Verdict::Violated { counterexample: ce, .. } = v else { panic!("{v:?}") };
    assert!(replay_validate(&ce, &p, &prop).ok);
    let mut bad = ce.clone();
    bad.steps[5].event = Some("LAP".into());
    let r = replay_validate(&bad, &p, &prop);
    assert!(!r.ok);
    assert!(r.diff.unwrap().contains("step 5"));
    let mut late = ce.clone();
    late.violated_at = 7;
    assert!(!replay_validate(&late, &p, &prop).ok);
}

#[test]
fn satisfiable_depths_stay_satisfiable() {
    let p = fixture("stopwatch.sfi");
    let sts = build_sts(&p).unwrap();
    let prop = fixture_prop("cent_le_5.prop");
    let cfg = SolverConfig::default();
    for k in 8..=12 {
        let q = encode_bmc_query(&sts, &prop, k).unwrap();
        let SolverVerdict::Sat(m) = solve_fresh(&q, &cfg).unwrap() else { panic!("k={k}") };
        let ce = extract_counterexample(&m, &sts, &prop, k).unwrap();
        assert!(replay_validate(&ce, &p, &prop).ok, "k={k}");
    }
}

#[test]
fn emitted_scripts_replay_offline() {
    let p = fixture("stopwatch.sfi");
    let prop = fixture_prop("cent_le_5.prop");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut verdicts = Vec::new();
    for dir in [&a, &b] {
        let opts = BmcOptions { kmax: 10, emit_smt: Some(dir.path().to_path_buf()), ..Default::default() };
        let (v, report) = bmc_check(&p, &prop, &opts).unwrap();
        assert!(matches!(v, Verdict::Violated { depth: 8, .. }));
        verdicts.push(report.depths.iter().map(|d| d.result.clone()).collect::<Vec<_>>());
    }
    assert_eq!(verdicts[0].len(), 9);
    for (k, expected) in verdicts[0].iter().enumerate() {
        let name = format!("depth_{k:04}.smt2");
        let text = std::fs::read(a.path().join(&name)).unwrap();
        assert_eq!(text, std::fs::read(b.path().join(&name)).unwrap(), "{name}");
        assert_eq!(&z3_file(&a.path().join(&name)), expected, "{name}");
    }
}

#[test]
fn guards_of_fixtures_partition() {
    for name in ["toggle.sfi", "stopwatch.sfi"] {
        let sts = build_sts(&fixture(name)).unwrap();
        let mut s = SolverSession::start(&SolverConfig::default()).unwrap();
        let r = check_partition(&sts, &mut s).unwrap();
        assert!(r.passed(), "{name}: {:?}", r.failures().collect::<Vec<_>>());
        assert!(r.obligations.iter().any(|o| matches!(o.kind, ObligationKind::Disjoint { .. })) || name == "toggle.sfi");
    }
}

#[test]
fn overlapping_guards_are_reported() {
    let p = parse_model(
        "program O; events E; var x: int = 0;
         or { transitions { -> A; }
              state A { outer { on E [x > 0] -> B; on E -> A; } }
              state B { } }",
    )
    .unwrap();
    let mut sts = build_sts(&p).unwrap();
    let mut s = SolverSession::start(&SolverConfig::default()).unwrap();
    assert!(check_partition(&sts, &mut s).unwrap().passed());
    let gt = |n: i64| parse_expr(&format!("x > {n}")).unwrap().map_var(&mut |v: &String| Sym(v.clone()));
    let a = sfbmc_core::StatePath::parse("A");
    let from_a: Vec<usize> =
        sts.transitions.iter().filter(|t| t.event.is_some() && t.src.contains(&a)).map(|t| t.id).collect();
    assert_eq!(from_a.len(), 2);
    sts.transitions[from_a[0]].guard = vec![gt(0)];
    sts.transitions[from_a[1]].guard = vec![gt(1)];
    let r = check_partition(&sts, &mut s).unwrap();
    let failed: Vec<&ObligationKind> = r.failures().map(|o| &o.kind).collect();
    assert_eq!(failed.len(), 2, "{failed:?}");
    assert!(matches!(failed[0], ObligationKind::Disjoint { .. }));
    assert_eq!(failed[1], &ObligationKind::Coverage);
}

#[test]
fn infeasible_branches_are_pruned() {
    let p = parse_model(
        "program P; events E; var x: int = 0;
         or { transitions { -> A; }
              state A { outer { on E [x > 0 && x < 0] -> B; } }
              state B { outer { on E -> A; } } }",
    )
    .unwrap();
    let mut sts = build_sts(&p).unwrap();
    assert_eq!(sts.control_points.len(), 3);
    let mut s = SolverSession::start(&SolverConfig::default()).unwrap();
    let removed = prune_infeasible(&mut sts, &mut s).unwrap();
    assert_eq!(removed, 2);
    assert_eq!(sts.control_points.len(), 2);
    assert!(sts.transitions.iter().enumerate().all(|(i, t)| t.id == i));
    let prop = parse_expr("!in(B)").unwrap();
    let (v, _) = bmc_check_sts(&p, &sts, &prop, &BmcOptions { kmax: 6, ..Default::default() }).unwrap();
    assert_eq!(v, Verdict::BoundedSafe { kmax: 6 });
}
