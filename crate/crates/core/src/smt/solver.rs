use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::encode::SmtScript;
use super::sexp::{depth, parse_sexp, Sexp};
use crate::expr::Value;

pub const SOLVER_ENV: &str = "SFBMC_SOLVER";
pub const SOLVER_ARGS_ENV: &str = "SFBMC_SOLVER_ARGS";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// How to launch an SMT-LIB v2 solver reading commands on stdin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    /// Arguments that make known solvers read SMT-LIB from stdin
    /// incrementally.
    pub fn default_args(path: &str) -> Vec<String> {
        let stem = std::path::Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let args: &[&str] = match stem {
            // The legacy arithmetic core is markedly faster on deep unrollings.
            "z3" => &["-in", "-smt2", "smt.arith.solver=2"],
            "cvc4" | "cvc5" => &["--lang=smt2", "--incremental"],
            "yices-smt2" => &["--incremental"],
            _ => &[],
        };
        args.iter().map(|a| a.to_string()).collect()
    }

    /// Solver at `path` with its default arguments, unless
    /// `SFBMC_SOLVER_ARGS` overrides them.
    pub fn for_path(path: &str) -> Self {
        let args = match std::env::var(SOLVER_ARGS_ENV) {
            Ok(a) => a.split_whitespace().map(str::to_string).collect(),
            Err(_) => Self::default_args(path),
        };
        SolverConfig { path: path.to_string(), args, timeout: DEFAULT_TIMEOUT }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let path = std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".to_string());
        SolverConfig::for_path(&path)
    }
}

pub type Model = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverVerdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SolverVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            SolverVerdict::Sat(_) => "sat",
            SolverVerdict::Unsat => "unsat",
            SolverVerdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown(String),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver {path}: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("solver I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited unexpectedly")]
    Exited,
    #[error("solver did not answer within {0:?}")]
    Timeout(Duration),
    #[error("solver error on `{command}`: {message}")]
    Rejected { command: String, message: String },
    #[error("unexpected solver output: {0}")]
    Protocol(String),
}

/// A running solver process driven over its textual interface. Every
/// command is acknowledged (`:print-success`), so errors are attributed to
/// the command that caused them.
pub struct SolverSession {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    timeout: Duration,
    dead: bool,
}

impl SolverSession {
    pub fn start(cfg: &SolverConfig) -> Result<Self, SolverError> {
        let mut child = Command::new(&cfg.path)
            .args(&cfg.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn { path: cfg.path.clone(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut s = SolverSession { child, stdin, lines: rx, timeout: cfg.timeout, dead: false };
        s.command("(set-option :print-success true)")?;
        s.command("(set-option :produce-models true)")?;
        Ok(s)
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn set_timeout(&mut self, t: Duration) {
        self.timeout = t;
    }

    fn send(&mut self, cmd: &str) -> Result<(), SolverError> {
        if self.dead {
            return Err(SolverError::Exited);
        }
        writeln!(self.stdin, "{cmd}").and_then(|_| self.stdin.flush()).map_err(|e| {
            self.dead = true;
            SolverError::Io(e)
        })
    }

    /// Reads one complete s-expression (possibly spanning several lines).
    fn response(&mut self) -> Result<String, SolverError> {
        let deadline = Instant::now() + self.timeout;
        let mut text = String::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    if !text.is_empty() {
                        text.push('\n');
                    }
                    text.push_str(&line);
                    match depth(&text) {
                        Some(0) if !text.trim().is_empty() => return Ok(text.trim().to_string()),
                        Some(_) => {}
                        None => return Err(SolverError::Protocol(text)),
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.kill();
                    return Err(SolverError::Timeout(self.timeout));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.dead = true;
                    return Err(SolverError::Exited);
                }
            }
        }
    }

    fn kill(&mut self) {
        self.dead = true;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    pub fn is_alive(&self) -> bool {
        !self.dead
    }

    /// Sends a command that answers `success`.
    pub fn command(&mut self, cmd: &str) -> Result<(), SolverError> {
        self.send(cmd)?;
        let r = self.response()?;
        if r == "success" {
            Ok(())
        } else {
            Err(rejected(cmd, &r))
        }
    }

    pub fn commands<S: AsRef<str>>(&mut self, cmds: &[S]) -> Result<(), SolverError> {
        cmds.iter().try_for_each(|c| self.command(c.as_ref()))
    }

    pub fn push(&mut self) -> Result<(), SolverError> {
        self.command("(push 1)")
    }

    pub fn pop(&mut self) -> Result<(), SolverError> {
        self.command("(pop 1)")
    }

    /// A timeout or a crash is reported as `Unknown`; the session is then
    /// unusable.
    pub fn check_sat(&mut self) -> Result<SatResult, SolverError> {
        self.send("(check-sat)")?;
        let r = match self.response() {
            Ok(r) => r,
            Err(SolverError::Timeout(t)) => return Ok(SatResult::Unknown(format!("timeout after {}s", t.as_secs_f64()))),
            Err(SolverError::Exited) => return Ok(SatResult::Unknown("solver exited".into())),
            Err(e) => return Err(e),
        };
        match r.as_str() {
            "sat" => Ok(SatResult::Sat),
            "unsat" => Ok(SatResult::Unsat),
            "unknown" => Ok(SatResult::Unknown(self.reason_unknown())),
            _ => Err(rejected("(check-sat)", &r)),
        }
    }

    fn reason_unknown(&mut self) -> String {
        let answer = self.send("(get-info :reason-unknown)").and_then(|_| self.response());
        match answer.ok().and_then(|r| parse_sexp(&r).ok()) {
            Some(Sexp::List(l)) if l.len() == 2 => l[1].to_string().trim_matches('"').to_string(),
            _ => "unknown".into(),
        }
    }

    pub fn get_value(&mut self, names: &[String]) -> Result<Model, SolverError> {
        let mut model = Model::new();
        if names.is_empty() {
            return Ok(model);
        }
        let cmd = format!("(get-value ({}))", names.join(" "));
        self.send(&cmd)?;
        let r = self.response()?;
        let s = parse_sexp(&r).map_err(|e| SolverError::Protocol(format!("{e}: {r}")))?;
        if s.list().and_then(|l| l.first()).and_then(Sexp::atom) == Some("error") {
            return Err(rejected(&cmd, &r));
        }
        for pair in s.list().ok_or_else(|| SolverError::Protocol(r.clone()))? {
            match pair.list() {
                Some([Sexp::Atom(n), v]) => {
                    let val = v.to_value().ok_or_else(|| SolverError::Protocol(format!("value of {n}: {v}")))?;
                    model.insert(n.clone(), val);
                }
                _ => return Err(SolverError::Protocol(format!("model entry {pair}"))),
            }
        }
        for n in names {
            if !model.contains_key(n) {
                return Err(SolverError::Protocol(format!("model lacks {n}")));
            }
        }
        Ok(model)
    }

    pub fn check_and_model(&mut self, names: &[String]) -> Result<SolverVerdict, SolverError> {
        Ok(match self.check_sat()? {
            SatResult::Sat => SolverVerdict::Sat(self.get_value(names)?),
            SatResult::Unsat => SolverVerdict::Unsat,
            SatResult::Unknown(r) => SolverVerdict::Unknown(r),
        })
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        if !self.dead {
            let _ = writeln!(self.stdin, "(exit)");
            let _ = self.stdin.flush();
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn rejected(cmd: &str, resp: &str) -> SolverError {
    let message = match parse_sexp(resp) {
        Ok(Sexp::List(l)) if l.len() == 2 && l[0].atom() == Some("error") => l[1].to_string().trim_matches('"').to_string(),
        _ => resp.to_string(),
    };
    let command: String = cmd.chars().take(200).collect();
    SolverError::Rejected { command, message }
}

/// Runs a whole script inside a push/pop frame of `session`.
pub fn solve(script: &SmtScript, session: &mut SolverSession) -> Result<SolverVerdict, SolverError> {
    session.push()?;
    // Logic may only be set once per session; scripts share one.
    session.commands(&script.commands)?;
    let v = session.check_and_model(&script.values)?;
    if session.is_alive() {
        session.pop()?;
    }
    Ok(v)
}

/// Starts a session with the script's logic and solves it.
pub fn solve_fresh(script: &SmtScript, cfg: &SolverConfig) -> Result<SolverVerdict, SolverError> {
    let mut s = SolverSession::start(cfg)?;
    s.command(&format!("(set-logic {})", script.logic))?;
    s.commands(&script.commands)?;
    s.check_and_model(&script.values)
}
