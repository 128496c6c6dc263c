// SPDX-License-Identifier: Apache-2.0

//! Oracle-driven speculative semantics and the always-mispredict semantics.

pub mod am;
pub mod oracle;
pub mod spec;
pub mod state;

pub use am::{run_am, step_am, AmConfig};
pub use oracle::{AlwaysNotTaken, AlwaysTaken, Btfnt, HistoryEntry, PredictionOracle};
pub use spec::{run_spec, step_spec, ExtConfig};
pub use state::{SpecEntry, SpecStack};
