// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Bit width of machine words. All arithmetic wraps modulo `2^bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Width(u32);

impl Width {
    pub const W64: Width = Width(64);

    pub fn new(bits: u32) -> Result<Self, Error> {
        if bits == 0 || bits > 64 {
            return Err(Error::InvalidWidth(bits));
        }
        Ok(Width(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn mask(self) -> u64 {
        if self.0 == 64 {
            u64::MAX
        } else {
            (1u64 << self.0) - 1
        }
    }

    pub fn wrap(self, v: u64) -> u64 {
        v & self.mask()
    }

    pub fn all_ones(self) -> u64 {
        self.mask()
    }

    /// Number of distinct words, if it fits in a `u64`.
    pub fn cardinality(self) -> Option<u64> {
        if self.0 == 64 {
            None
        } else {
            Some(1u64 << self.0)
        }
    }
}

impl Default for Width {
    fn default() -> Self {
        Width::W64
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A word or the terminal marker `end`, which only the program counter may hold.
///
/// The derived ordering places `Bot` above every word, so `min(l, end) == l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Word(u64),
    Bot,
}

impl Value {
    pub fn word(self) -> Option<u64> {
        match self {
            Value::Word(n) => Some(n),
            Value::Bot => None,
        }
    }

    pub fn is_bot(self) -> bool {
        matches!(self, Value::Bot)
    }

    /// Label arithmetic for `pc + 1`; `end + 1` stays `end`.
    pub fn succ(self) -> Value {
        match self {
            Value::Word(n) => Value::Word(n.wrapping_add(1)),
            Value::Bot => Value::Bot,
        }
    }
}

impl From<u64> for Value {
    fn from(n: u64) -> Self {
        Value::Word(n)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Word(n) => write!(f, "{n}"),
            Value::Bot => f.write_str("end"),
        }
    }
}

/// Word width plus the memory addressing model shared by every executor.
///
/// With `mem_cells = Some(m)` addresses are reduced modulo `m` before any
/// memory access; with `None` every word is a distinct address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    pub width: Width,
    pub mem_cells: Option<u64>,
}

impl Domain {
    pub fn new(width: Width) -> Self {
        Domain { width, mem_cells: None }
    }

    pub fn with_mem_cells(mut self, cells: u64) -> Result<Self, Error> {
        if cells == 0 {
            return Err(Error::InvalidMemorySize(cells));
        }
        // A bounded memory at least as large as the address space is the full space.
        self.mem_cells = match self.width.cardinality() {
            Some(card) if cells >= card => None,
            _ => Some(cells),
        };
        Ok(self)
    }

    /// Tiny domain helper used throughout the tests: `bits`-bit words, `cells` memory cells.
    pub fn tiny(bits: u32, cells: u64) -> Result<Self, Error> {
        Domain::new(Width::new(bits)?).with_mem_cells(cells)
    }

    pub fn addr(&self, a: u64) -> u64 {
        match self.mem_cells {
            Some(m) => a % m,
            None => a,
        }
    }

    /// Number of distinct memory cells, if finite and representable.
    pub fn cell_count(&self) -> Option<u64> {
        self.mem_cells.or_else(|| self.width.cardinality())
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::new(Width::W64)
    }
}
