use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sfbmc_core::bmc::{bmc_check_sts, BmcError};
use sfbmc_core::smt::{check_partition, prune_infeasible, ObligationKind, Outcome, SolverConfig, SolverSession};
use sfbmc_core::sts::show_cp;
use sfbmc_core::symbolic::Sym;
use sfbmc_core::{
    build_sts, parse_expr, parse_model, sos_step, validate_model, validate_property, BmcOptions, Configuration, Expr,
    Program, Sts, Value, Verdict,
};

const EXIT_USAGE: u8 = 2;
const EXIT_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "sfbmc", version, about = "Bounded model checking for Stateflow-style models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an invariant up to a bound.
    Check(CheckArgs),
    /// Run the concrete interpreter on an event script.
    Simulate(SimulateArgs),
    /// Derive the symbolic transition system.
    Derive(DeriveArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// SMT-LIB v2 solver executable (default: $SFBMC_SOLVER or z3).
    #[arg(long)]
    solver: Option<String>,
    /// Extra solver argument; repeatable.
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,
    /// Seconds allowed per solver query.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

#[derive(Args)]
struct Artifacts {
    /// Write the transition system as JSON.
    #[arg(long)]
    emit_sts: Option<PathBuf>,
    /// Write one derivation tree per transition into this directory.
    #[arg(long)]
    emit_derivations: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("property").required(true).args(["prop", "prop_file"]))]
struct CheckArgs {
    model: PathBuf,
    #[arg(long)]
    prop: Option<String>,
    #[arg(long)]
    prop_file: Option<PathBuf>,
    #[arg(long, default_value_t = sfbmc_core::bmc::DEFAULT_KMAX)]
    kmax: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the query of every depth into this directory.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    #[command(flatten)]
    artifacts: Artifacts,
    #[arg(long)]
    json: bool,
    /// Drop transitions whose guard is unsatisfiable before checking.
    #[arg(long)]
    prune_infeasible: bool,
    /// Regenerate the whole query at every depth instead of push/pop.
    #[arg(long)]
    no_incremental: bool,
    /// Assert the violation at any step up to the depth.
    #[arg(long)]
    full_disjunction: bool,
    /// Substitute derived updates instead of lowering action chains.
    #[arg(long)]
    no_ssa: bool,
    /// Do not check that guards partition each control point and event.
    #[arg(long)]
    skip_partition: bool,
}

#[derive(Args)]
struct SimulateArgs {
    model: PathBuf,
    /// Event names separated by whitespace or commas; `-` reads stdin.
    #[arg(long)]
    events: PathBuf,
    /// Override an initial value, e.g. `cent=98`; repeatable.
    #[arg(long = "init")]
    inits: Vec<String>,
}

#[derive(Args)]
struct DeriveArgs {
    model: PathBuf,
    #[command(flatten)]
    artifacts: Artifacts,
    #[arg(long)]
    json: bool,
    /// Also discharge the guard partition obligations with the solver.
    #[arg(long)]
    partition: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

struct Fail {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: EXIT_USAGE, msg: msg.into() }
}

fn failure(msg: impl Into<String>) -> Fail {
    Fail { code: EXIT_FAILURE, msg: msg.into() }
}

type R<T> = Result<T, Fail>;

fn read(path: &Path) -> R<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> R<()> {
    fs::write(path, text).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> R<Program> {
    let p = parse_model(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))?;
    let diags = validate_model(&p);
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}: {d}", path.display())).collect();
        return Err(usage(lines.join("\n")));
    }
    Ok(p)
}

fn derive(p: &Program) -> R<(Sts, f64)> {
    let t = Instant::now();
    let sts = build_sts(p).map_err(|e| usage(format!("derivation failed: {e}")))?;
    Ok((sts, t.elapsed().as_secs_f64()))
}

fn solver_config(a: &SolverArgs) -> R<SolverConfig> {
    let mut cfg = match &a.solver {
        Some(path) => SolverConfig::for_path(path),
        None => SolverConfig::default(),
    };
    cfg.args.extend(a.solver_args.iter().cloned());
    if !(a.timeout > 0.0 && a.timeout.is_finite()) {
        return Err(usage("--timeout must be positive"));
    }
    cfg.timeout = Duration::from_secs_f64(a.timeout);
    Ok(cfg)
}

fn emit_artifacts(sts: &Sts, a: &Artifacts) -> R<()> {
    if let Some(path) = &a.emit_sts {
        let text = serde_json::to_string_pretty(&sts.to_json()).expect("json");
        write(path, &text)?;
    }
    if let Some(dir) = &a.emit_derivations {
        fs::create_dir_all(dir).map_err(|e| failure(format!("{}: {e}", dir.display())))?;
        for t in &sts.transitions {
            let head = format!("# t{} {}\n", t.id, transition_line(t));
            write(&dir.join(format!("t{:03}.txt", t.id)), &(head + &t.derivation.render()))?;
        }
    }
    Ok(())
}

fn transition_line(t: &sfbmc_core::ProgramTransition) -> String {
    let ev = t.event.as_deref().unwrap_or("init");
    let mut s = format!("{} --{ev}--> {}", show_cp(&t.src), show_cp(&t.dst));
    if !t.guard.is_empty() {
        s.push_str(&format!("  [{}]", t.guard_expr()));
    }
    let updates: Vec<String> = t
        .update
        .0
        .iter()
        .filter(|(v, e)| **e != Expr::Var(Sym(v.to_string())))
        .map(|(v, e)| format!("{v} := {e}"))
        .collect();
    if !updates.is_empty() {
        s.push_str(&format!("  {{{}}}", updates.join("; ")));
    }
    s
}

/// Discharges the guard partition obligations; any failure is fatal.
fn partition(sts: &Sts, cfg: &SolverConfig) -> R<usize> {
    let mut s = SolverSession::start(cfg).map_err(|e| failure(e.to_string()))?;
    let report = check_partition(sts, &mut s).map_err(|e| failure(e.to_string()))?;
    let bad: Vec<String> = report
        .failures()
        .map(|o| {
            let ev = o.event.as_deref().unwrap_or("init");
            let what = match &o.kind {
                ObligationKind::Disjoint { a, b } => format!("guards of t{a} and t{b} overlap"),
                ObligationKind::Coverage => "guards do not cover every valuation".to_string(),
            };
            match &o.outcome {
                Outcome::Unknown(r) => format!("{} on {ev}: {what}? solver: {r}", o.source),
                _ => format!("{} on {ev}: {what}", o.source),
            }
        })
        .collect();
    if bad.is_empty() {
        Ok(report.obligations.len())
    } else {
        Err(failure(format!("partition check failed:\n  {}", bad.join("\n  "))))
    }
}

fn property(a: &CheckArgs, p: &Program) -> R<Expr<String>> {
    let text = match (&a.prop, &a.prop_file) {
        (Some(t), _) => t.clone(),
        (None, Some(f)) => read(f)?,
        (None, None) => return Err(usage("a property is required")),
    };
    let text: String = text.lines().filter(|l| !l.trim_start().starts_with("//")).collect::<Vec<_>>().join("\n");
    let prop = parse_expr(text.trim()).map_err(|e| usage(format!("property:{e}")))?;
    let diags = validate_property(p, &prop);
    if let Some(d) = diags.first() {
        return Err(usage(format!("property: {d}")));
    }
    Ok(prop)
}

fn check(a: CheckArgs) -> R<u8> {
    let p = load(&a.model)?;
    let prop = property(&a, &p)?;
    let solver = solver_config(&a.solver)?;
    let (mut sts, mut derive_seconds) = derive(&p)?;
    if a.prune_infeasible {
        let t = Instant::now();
        let mut s = SolverSession::start(&solver).map_err(|e| failure(e.to_string()))?;
        prune_infeasible(&mut sts, &mut s).map_err(|e| failure(e.to_string()))?;
        derive_seconds += t.elapsed().as_secs_f64();
    }
    emit_artifacts(&sts, &a.artifacts)?;
    if !a.skip_partition {
        partition(&sts, &solver)?;
    }
    let opts = BmcOptions {
        kmax: a.kmax,
        incremental: !a.no_incremental,
        full_disjunction: a.full_disjunction,
        ssa: !a.no_ssa,
        prune_infeasible: false,
        solver,
        emit_smt: a.emit_smt.clone(),
    };
    let (verdict, mut report) = bmc_check_sts(&p, &sts, &prop, &opts).map_err(|e| match e {
        BmcError::Property(m) => usage(m),
        e => failure(e.to_string()),
    })?;
    report.derive_seconds = derive_seconds;
    report.total_seconds += derive_seconds;
    if a.json {
        let out = json!({ "program": p.name, "property": prop.to_string(), "result": verdict, "report": report });
        println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    } else {
        println!(
            "{}: {} control points, {} transitions (derived in {:.3}s)",
            p.name, report.control_points, report.transitions, report.derive_seconds
        );
        println!("property: {prop}");
        match &verdict {
            Verdict::Violated { counterexample, depth } => {
                println!("VIOLATED at depth {depth} ({:.2}s, {})", report.total_seconds, report.mode);
                print!("{counterexample}");
            }
            Verdict::BoundedSafe { kmax } => {
                println!("BOUNDED SAFE up to depth {kmax} ({:.2}s, {})", report.total_seconds, report.mode);
            }
            Verdict::Unknown { reason, depth } => println!("UNKNOWN at depth {depth}: {reason}"),
        }
    }
    Ok(verdict.exit_code() as u8)
}

fn parse_init(p: &Program, s: &str) -> R<(String, Value)> {
    let (name, val) = s.split_once('=').ok_or_else(|| usage(format!("--init {s}: expected name=value")))?;
    let decl = p.var(name.trim()).ok_or_else(|| usage(format!("--init: unknown variable {name}")))?;
    let value = match parse_expr(val.trim()) {
        Ok(Expr::Int(n)) => Value::Int(n),
        Ok(Expr::Bool(b)) => Value::Bool(b),
        _ => return Err(usage(format!("--init {s}: expected a literal"))),
    };
    if value.sort() != decl.sort {
        return Err(usage(format!("--init {s}: {name} is {}", decl.sort)));
    }
    Ok((decl.name.clone(), value))
}

fn step_json(step: usize, event: Option<&str>, cfg: &Configuration) -> String {
    let active: Vec<String> = cfg.active.iter().map(|s| s.to_string()).collect();
    let vars: serde_json::Map<String, serde_json::Value> = cfg
        .env
        .iter()
        .map(|(k, v)| {
            let j = match v {
                Value::Bool(b) => json!(b),
                Value::Int(n) => serde_json::from_str(&n.to_string()).expect("integer"),
            };
            (k.clone(), j)
        })
        .collect();
    json!({ "step": step, "event": event, "activeStates": active, "vars": vars }).to_string()
}

fn simulate(a: SimulateArgs) -> R<u8> {
    let p = load(&a.model)?;
    let text = if a.events.as_os_str() == "-" {
        let mut s = String::new();
        for line in io::stdin().lock().lines() {
            s.push_str(&line.map_err(|e| usage(e.to_string()))?);
            s.push('\n');
        }
        s
    } else {
        read(&a.events)?
    };
    let events: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .collect();
    if let Some(bad) = events.iter().find(|e| !p.events.iter().any(|x| x == *e)) {
        return Err(usage(format!("unknown event {bad}")));
    }
    let mut env = p.initial_values();
    for s in &a.inits {
        let (k, v) = parse_init(&p, s)?;
        env.insert(k, v);
    }
    let mut cfg = Configuration::initial(env);
    let out = io::stdout();
    let mut out = out.lock();
    let mut emit = |line: String| writeln!(out, "{line}").map_err(|e| failure(e.to_string()));
    emit(step_json(0, None, &cfg))?;
    for step in 1..=events.len() + 1 {
        let ev = if step == 1 { None } else { Some(events[step - 2]) };
        cfg = sos_step(&p, &cfg, ev).map_err(|e| failure(format!("step {step}: {e}")))?;
        emit(step_json(step, ev, &cfg))?;
    }
    Ok(0)
}

fn derive_cmd(a: DeriveArgs) -> R<u8> {
    let p = load(&a.model)?;
    let (sts, secs) = derive(&p)?;
    emit_artifacts(&sts, &a.artifacts)?;
    let obligations = if a.partition { Some(partition(&sts, &solver_config(&a.solver)?)?) } else { None };
    if a.json {
        let mut v = sts.to_json();
        v["deriveSeconds"] = json!(secs);
        if let Some(n) = obligations {
            v["partitionObligations"] = json!(n);
        }
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        return Ok(0);
    }
    println!("{}: derived in {secs:.3}s", p.name);
    println!("{} control points:", sts.control_points.len());
    for cp in &sts.control_points {
        println!("  {}", show_cp(cp));
    }
    println!("{} transitions:", sts.transitions.len());
    for t in &sts.transitions {
        println!("  t{}: {}", t.id, transition_line(t));
    }
    if let Some(n) = obligations {
        println!("partition: {n} obligations discharged");
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Cmd::Check(a) => check(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Derive(a) => derive_cmd(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("sfbmc: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
