// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::muasm::{Instr, Program, Value};

/// Branching-history entry: branch label, transaction id, and the label
/// predicted (when the transaction starts) or taken (when it resolves).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HistoryEntry {
    pub branch: Value,
    pub id: u64,
    pub target: Value,
}

/// Predicts the successor of the branch at `label` and a speculation window.
///
/// The predicted label must be `label + 1` or the branch target, and the
/// window must not exceed [`PredictionOracle::max_window`].
pub trait PredictionOracle: Send + Sync + fmt::Debug {
    fn predict(&self, p: &Program, history: &[HistoryEntry], label: u64) -> (Value, u64);
    fn max_window(&self) -> u64;
}

fn branch_target(p: &Program, label: u64) -> Value {
    match p.get(Value::Word(label)) {
        Some(Instr::Beqz(_, t)) => *t,
        _ => Value::Word(label + 1),
    }
}

/// Backward-taken, forward-not-taken: predicts `min(label + 1, target)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Btfnt {
    pub window: u64,
}

impl PredictionOracle for Btfnt {
    fn predict(&self, p: &Program, _: &[HistoryEntry], label: u64) -> (Value, u64) {
        (Value::Word(label + 1).min(branch_target(p, label)), self.window)
    }

    fn max_window(&self) -> u64 {
        self.window
    }
}

/// Always predicts the branch target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlwaysTaken {
    pub window: u64,
}

impl PredictionOracle for AlwaysTaken {
    fn predict(&self, p: &Program, _: &[HistoryEntry], label: u64) -> (Value, u64) {
        (branch_target(p, label), self.window)
    }

    fn max_window(&self) -> u64 {
        self.window
    }
}

/// Always predicts the fall-through successor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlwaysNotTaken {
    pub window: u64,
}

impl PredictionOracle for AlwaysNotTaken {
    fn predict(&self, _: &Program, _: &[HistoryEntry], label: u64) -> (Value, u64) {
        (Value::Word(label + 1), self.window)
    }

    fn max_window(&self) -> u64 {
        self.window
    }
}
