mod common;

use std::time::Duration;

use common::{fixture, fixture_prop, gen_program, gen_property, min_violation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sfbmc_core::bmc::BmcError;
use sfbmc_core::{bmc_check, parse_expr, replay_validate, BmcOptions, Expr, Program, SolverConfig, Verdict};

fn check(p: &Program, prop: &Expr<String>, opts: &BmcOptions) -> Verdict {
    let (v, report) = bmc_check(p, prop, opts).unwrap();
    let per_depth: f64 = report.depths.iter().map(|d| d.seconds).sum();
    assert!(per_depth <= report.total_seconds + 1e-9);
    if let Verdict::Violated { counterexample, .. } = &v {
        assert!(replay_validate(counterexample, p, prop).ok);
    }
    v
}

fn depth(v: &Verdict) -> Option<usize> {
    match v {
        Verdict::Violated { depth, .. } => Some(*depth),
        Verdict::BoundedSafe { .. } => None,
        Verdict::Unknown { reason, .. } => panic!("unknown: {reason}"),
    }
}

fn opts(kmax: usize) -> BmcOptions {
    BmcOptions { kmax, ..Default::default() }
}

#[test]
fn toggle_is_bounded_safe() {
    let p = fixture("toggle.sfi");
    let v = check(&p, &fixture_prop("toggle_exclusive.prop"), &opts(10));
    assert_eq!(v, Verdict::BoundedSafe { kmax: 10 });
    assert_eq!(v.exit_code(), 0);
}

#[test]
fn initial_violation_is_found_at_depth_zero() {
    let p = fixture("stopwatch.sfi");
    let v = check(&p, &parse_expr("cent == 1").unwrap(), &opts(0));
    let Verdict::Violated { counterexample, depth: 0 } = &v else { panic!("{v:?}") };
    assert_eq!(counterexample.violated_at, 0);
    assert!(counterexample.steps[0].active.is_empty());
    assert_eq!(v.exit_code(), 1);
}

#[test]
fn every_mode_agrees_on_the_stopwatch() {
    let p = fixture("stopwatch.sfi");
    let prop = fixture_prop("cent_le_5.prop");
    let modes = [
        BmcOptions { kmax: 12, ..Default::default() },
        BmcOptions { kmax: 12, incremental: false, ..Default::default() },
        BmcOptions { kmax: 12, full_disjunction: true, ..Default::default() },
        BmcOptions { kmax: 12, ssa: false, ..Default::default() },
        BmcOptions { kmax: 12, prune_infeasible: true, ..Default::default() },
    ];
    for o in &modes {
        assert_eq!(depth(&check(&p, &prop, o)), Some(8), "{o:?}");
    }
}

#[test]
fn repeated_runs_agree() {
    let p = fixture("stopwatch.sfi");
    let prop = fixture_prop("cent_le_10.prop");
    let first = check(&p, &prop, &opts(20));
    assert_eq!(depth(&first), Some(13));
    for _ in 0..2 {
        assert_eq!(check(&p, &prop, &opts(20)), first);
    }
}

#[test]
fn safe_bound_is_safe_at_every_smaller_bound() {
    let p = fixture("stopwatch.sfi");
    let prop = fixture_prop("cent_le_10.prop");
    assert_eq!(check(&p, &prop, &opts(12)), Verdict::BoundedSafe { kmax: 12 });
    for k in 0..12 {
        assert_eq!(check(&p, &prop, &opts(k)), Verdict::BoundedSafe { kmax: k });
    }
    assert_eq!(depth(&check(&p, &prop, &opts(13))), Some(13));
}

#[test]
fn nonnegative_cent_holds() {
    let p = fixture("stopwatch.sfi");
    assert_eq!(check(&p, &fixture_prop("cent_nonneg.prop"), &opts(12)), Verdict::BoundedSafe { kmax: 12 });
}

#[test]
fn bounded_verdicts_match_exhaustive_runs_on_fixtures() {
    let cases = [
        ("stopwatch.sfi", "0 <= cent && cent <= 3"),
        ("stopwatch.sfi", "!(in(Run.Lap) && cent >= 2)"),
        ("stopwatch.sfi", "!in(Stop.Lap_stop)"),
        ("stopwatch.sfi", "disp_cent <= 2 || in(Run.Lap)"),
        ("stopwatch.sfi", "sec == 0"),
        ("toggle.sfi", "!in(B)"),
        ("toggle.sfi", "in(A) || in(B)"),
    ];
    for (file, text) in cases {
        let p = fixture(file);
        let prop = parse_expr(text).unwrap();
        let v = check(&p, &prop, &opts(7));
        assert_eq!(depth(&v), min_violation(&p, &prop, 7), "{file}: {text}");
    }
}

#[test]
fn bad_property_is_rejected() {
    let p = fixture("toggle.sfi");
    let r = bmc_check(&p, &parse_expr("y > 0").unwrap(), &opts(1));
    assert!(matches!(r, Err(BmcError::Property(_))));
    let r = bmc_check(&p, &parse_expr("in(A) + 1").unwrap(), &opts(1));
    assert!(matches!(r, Err(BmcError::Property(_))));
}

#[test]
fn solver_timeout_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slow.sh");
    std::fs::write(
        &path,
        "#!/bin/sh\nwhile read -r line; do\n  case \"$line\" in\n    \"(check-sat)\") sleep 5 ;;\n    *) echo success ;;\n  esac\ndone\n",
    )
    .unwrap();
    std::process::Command::new("chmod").arg("+x").arg(&path).status().unwrap();
    let solver = SolverConfig { path: path.display().to_string(), args: Vec::new(), timeout: Duration::from_millis(300) };
    let p = fixture("toggle.sfi");
    let (v, _) = bmc_check(&p, &fixture_prop("toggle_exclusive.prop"), &BmcOptions { kmax: 3, solver, ..Default::default() }).unwrap();
    assert!(matches!(&v, Verdict::Unknown { depth: 0, reason } if reason.contains("timeout")), "{v:?}");
    assert_eq!(v.exit_code(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn random_models_match_exhaustive_runs(seed in any::<u64>()) {
        let p = gen_program(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prop = gen_property(&p, &mut rng);
        let expect = min_violation(&p, &prop, 5);
        let direct = BmcOptions { kmax: 5, ssa: false, ..Default::default() };
        for o in [opts(5), direct] {
            let got = depth(&check(&p, &prop, &o));
            prop_assert_eq!(got, expect, "{}\n{}", prop, p);
        }
    }
}

#[test]
fn random_properties_are_mixed() {
    let mut depths = std::collections::BTreeMap::new();
    for seed in 0..60u64 {
        let p = gen_program(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prop = gen_property(&p, &mut rng);
        *depths.entry(min_violation(&p, &prop, 5)).or_insert(0) += 1;
    }
    assert!(depths.get(&None).copied().unwrap_or(0) >= 10, "{depths:?}");
    assert!(depths.keys().filter(|d| matches!(d, Some(k) if *k >= 2)).count() >= 2, "{depths:?}");
}
