// SPDX-License-Identifier: Apache-2.0

//! Detection of speculative information flows in a small assembly language.
//!
//! Programs are executed under a non-speculative, an oracle-driven speculative,
//! and an always-mispredict semantics. Symbolic exploration of the
//! always-mispredict semantics plus self-composed satisfiability queries decide
//! speculative non-interference with respect to a policy of public inputs.

pub mod concrete;
pub mod error;
pub mod muasm;
pub mod smt;
pub mod sni;
pub mod speculative;
pub mod symbolic;
pub mod x86;

pub use error::{Error, ExecError, Result, WellFormedError};
pub use muasm::{
    parse_program, print_program, BinOp, Configuration, Domain, Expr, Input, Instr, Memory,
    Observation, Policy, Program, Reg, Registers, Trace, UnOp, Value, Width,
};
pub use sni::{spectector, Limits, Verdict};
