//! Inputs shared by the benchmarks.

use sfbmc_core::{parse_expr, parse_model, Expr, Program};

pub fn example(name: &str) -> Program {
    let path = format!("{}/../core/examples/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_model(&std::fs::read_to_string(&path).expect("example model")).expect("example parses")
}

/// `0 <= cent && cent <= x`
pub fn cent_bound(x: i64) -> Expr<String> {
    parse_expr(&format!("0 <= cent && cent <= {x}")).expect("property parses")
}

/// START followed by `tics` TIC events with a LAP pair every 50 tics.
pub fn stopwatch_events(tics: usize) -> Vec<String> {
    let mut evs = vec!["START".to_string()];
    for i in 0..tics {
        evs.push("TIC".into());
        if i % 50 == 49 {
            evs.push("LAP".into());
            evs.push("LAP".into());
        }
    }
    evs
}
