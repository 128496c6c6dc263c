// SPDX-License-Identifier: Apache-2.0

//! Symbolic execution of the always-mispredict semantics.

pub mod explore;
pub mod semantics;
pub mod term;
pub mod valuation;

pub use explore::{explore, Exploration, ExploreLimits, SymbolicRun};
pub use semantics::{
    dump_sym_trace, path_condition, SymAmConfig, SymConfig, SymMachine, SymObs, SymStep, SymTrace,
};
pub use term::{SymExpr, SymMem};
pub use valuation::{apply_config, apply_expr, apply_trace, satisfies, Evaluator};
