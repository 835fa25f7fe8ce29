//! Symbolic execution and SMT-based bounded model checking for a textual
//! Stateflow-style language.

pub mod ast;
pub mod bmc;
pub mod concrete;
pub mod expr;
pub mod parse;
pub mod print;
pub mod smt;
pub mod sts;
pub mod symbolic;
pub mod validate;

pub use ast::{Program, StatePath};
pub use bmc::{bmc_check, replay_validate, BmcOptions, RunReport, Verdict};
pub use concrete::{run_trace, sos_step, Configuration, Env};
pub use expr::{BinOp, Expr, Sort, Value};
pub use parse::{parse_expr, parse_model, ParseError};
pub use smt::{encode_bmc_query, Counterexample, SmtScript, SolverConfig, SolverSession, SolverVerdict};
pub use sts::{build_sts, ControlPoint, ProgramTransition, Sts};
pub use symbolic::{check_simulation, ssos_step, SymConfig};
pub use validate::{validate_model, validate_property, Diagnostic};
