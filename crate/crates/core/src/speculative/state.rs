// SPDX-License-Identifier: Apache-2.0

use crate::muasm::Value;

/// A pending speculative transaction: the configuration to restore, its
/// identifier, remaining window and the predicted label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecEntry<C> {
    pub snapshot: C,
    pub id: u64,
    pub remaining: u64,
    pub predicted: Value,
}

/// Stack of nested transactions, oldest first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecStack<C>(pub Vec<SpecEntry<C>>);

impl<C> Default for SpecStack<C> {
    fn default() -> Self {
        SpecStack(Vec::new())
    }
}

impl<C> SpecStack<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn push(&mut self, e: SpecEntry<C>) {
        self.0.push(e);
    }

    pub fn last(&self) -> Option<&SpecEntry<C>> {
        self.0.last()
    }

    /// Decrements every window, saturating at 0.
    pub fn decr(&mut self) {
        for e in &mut self.0 {
            e.remaining = e.remaining.saturating_sub(1);
        }
    }

    pub fn zeroes(&mut self) {
        for e in &mut self.0 {
            e.remaining = 0;
        }
    }

    /// No transaction has an exhausted window.
    pub fn enabled(&self) -> bool {
        self.0.iter().all(|e| e.remaining > 0)
    }

    pub fn decr_last(&mut self) {
        if let Some(e) = self.0.last_mut() {
            e.remaining = e.remaining.saturating_sub(1);
        }
    }

    pub fn zeroes_last(&mut self) {
        if let Some(e) = self.0.last_mut() {
            e.remaining = 0;
        }
    }

    pub fn enabled_last(&self) -> bool {
        self.0.last().is_none_or(|e| e.remaining > 0)
    }

    /// Remaining window of the innermost transaction; `None` stands for an
    /// unbounded window on the empty stack.
    pub fn wndw(&self) -> Option<u64> {
        self.0.last().map(|e| e.remaining)
    }

    /// Index of the youngest transaction whose window is exhausted.
    pub fn youngest_exhausted(&self) -> Option<usize> {
        self.0.iter().rposition(|e| e.remaining == 0)
    }

    pub fn remaining(&self) -> Vec<u64> {
        self.0.iter().map(|e| e.remaining).collect()
    }
}
