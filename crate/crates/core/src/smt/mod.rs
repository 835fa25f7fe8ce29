//! SMT-LIB encoding of bounded invariant checks and a solver driver that
//! talks to any SMT-LIB v2 solver over a pipe.

mod cex;
mod encode;
mod partition;
pub mod sexp;
mod solver;

pub use cex::{extract_counterexample, CeStep, Counterexample, ExtractError};
pub use encode::{
    ctrl_name, data_name, decode_name, encode_bmc_query, event_name, guard_term, smt_sort, ssa_name, to_smt,
    EncodeError, Encoder, NameKind, SmtScript,
};
pub use partition::{check_partition, prune_infeasible, Obligation, ObligationKind, Outcome, PartitionReport};
pub use solver::{
    solve, solve_fresh, Model, SatResult, SolverConfig, SolverError, SolverSession, SolverVerdict, DEFAULT_TIMEOUT,
    SOLVER_ARGS_ENV, SOLVER_ENV,
};
