// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::muasm::config::Input;
use crate::muasm::expr::Reg;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Well-formedness rules a program must satisfy.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("duplicate label {0}")]
    DuplicateLabel(u64),
    #[error("no instruction labelled 0")]
    MissingEntry,
    #[error("beqz at label {0} targets its own successor")]
    BranchToNext(u64),
    #[error("instruction at label {0} assigns to pc")]
    PcTarget(u64),
}

/// Faults raised while executing a program.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(usize),
    #[error("read of undefined initial input {0}")]
    Undefined(Input),
    #[error("`end` used as an operand")]
    BotOperand,
    #[error("`end` assigned to register {0}")]
    BotAssigned(Reg),
    #[error("prediction oracle violated its contract: {0}")]
    OracleContract(String),
    #[error("no rule applies: {0}")]
    Stuck(String),
    #[error("concrete and symbolic execution diverged: {0}")]
    Divergence(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid word width {0} (expected 1..=64)")]
    InvalidWidth(u32),
    #[error("invalid memory size {0}")]
    InvalidMemorySize(u64),
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("line {line}: ill-formed program: {source}")]
    WellFormedAt { line: usize, source: WellFormedError },
    #[error("ill-formed program: {0}")]
    WellFormed(#[from] WellFormedError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("malformed transaction bracketing: {0}")]
    Bracketing(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("unbound symbolic variable {0}")]
    Unbound(String),
    #[error("search space too large: {0}")]
    SpaceTooLarge(String),
    #[error("domain too large for exhaustive enumeration: {0}")]
    DomainTooLarge(String),
    #[error("line {line}: {msg}")]
    Translate { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }
}
