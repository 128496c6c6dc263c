// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::Reg;
use super::policy::Policy;
use super::value::Value;
use crate::error::ExecError;

/// An initial input item: a register or a memory cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Input {
    Reg(Reg),
    Mem(u64),
}

impl fmt::Display for Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Input::Reg(r) => write!(f, "{r}"),
            Input::Mem(a) => write!(f, "@{a}"),
        }
    }
}

/// Total memory map. Cells not stored explicitly hold `default`; a memory
/// without default faults on reads of unset cells, which lets exhaustive
/// enumerators discover the inputs a run actually depends on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Memory {
    cells: BTreeMap<u64, u64>,
    default: Option<u64>,
}

impl Default for Memory {
    fn default() -> Self {
        Memory::filled(0)
    }
}

impl Memory {
    pub fn filled(default: u64) -> Self {
        Memory { cells: BTreeMap::new(), default: Some(default) }
    }

    /// A memory where every cell is undefined until written.
    pub fn partial() -> Self {
        Memory { cells: BTreeMap::new(), default: None }
    }

    pub fn default_value(&self) -> Option<u64> {
        self.default
    }

    pub fn read(&self, addr: u64) -> Result<u64, ExecError> {
        match self.cells.get(&addr) {
            Some(v) => Ok(*v),
            None => self.default.ok_or(ExecError::Undefined(Input::Mem(addr))),
        }
    }

    pub fn get(&self, addr: u64) -> Option<u64> {
        self.cells.get(&addr).copied().or(self.default)
    }

    pub fn is_set(&self, addr: u64) -> bool {
        self.cells.contains_key(&addr)
    }

    pub fn write(&mut self, addr: u64, v: u64) {
        // Keep the representation canonical so that equality is semantic.
        if Some(v) == self.default {
            self.cells.remove(&addr);
        } else {
            self.cells.insert(addr, v);
        }
    }

    /// Explicitly stored cells, in address order.
    pub fn cells(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.cells.iter().map(|(a, v)| (*a, *v))
    }

    /// Replaces the default of a partial memory, keeping explicit cells.
    pub fn with_default(mut self, default: u64) -> Self {
        self.default = Some(default);
        self.cells.retain(|_, v| *v != default);
        self
    }
}

/// Register file without the program counter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Registers {
    values: BTreeMap<Reg, u64>,
    default: Option<u64>,
}

impl Default for Registers {
    fn default() -> Self {
        Registers::filled(0)
    }
}

impl Registers {
    pub fn filled(default: u64) -> Self {
        Registers { values: BTreeMap::new(), default: Some(default) }
    }

    pub fn partial() -> Self {
        Registers { values: BTreeMap::new(), default: None }
    }

    pub fn read(&self, r: &Reg) -> Result<u64, ExecError> {
        match self.values.get(r) {
            Some(v) => Ok(*v),
            None => self.default.ok_or_else(|| ExecError::Undefined(Input::Reg(r.clone()))),
        }
    }

    pub fn get(&self, r: &Reg) -> Option<u64> {
        self.values.get(r).copied().or(self.default)
    }

    pub fn is_set(&self, r: &Reg) -> bool {
        self.values.contains_key(r)
    }

    pub fn write(&mut self, r: Reg, v: u64) {
        if Some(v) == self.default {
            self.values.remove(&r);
        } else {
            self.values.insert(r, v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Reg, u64)> + '_ {
        self.values.iter().map(|(r, v)| (r, *v))
    }

    pub fn with_default(mut self, default: u64) -> Self {
        self.default = Some(default);
        self.values.retain(|_, v| *v != default);
        self
    }
}

/// Machine configuration: memory, registers, and the program counter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub mem: Memory,
    pub regs: Registers,
    pub pc: Value,
}

impl Default for Configuration {
    fn default() -> Self {
        Configuration::initial(Memory::default(), Registers::default())
    }
}

impl Configuration {
    pub fn initial(mem: Memory, regs: Registers) -> Self {
        Configuration { mem, regs, pc: Value::Word(0) }
    }

    /// Everything undefined; reads fault with [`ExecError::Undefined`].
    pub fn partial() -> Self {
        Configuration::initial(Memory::partial(), Registers::partial())
    }

    pub fn is_initial(&self) -> bool {
        self.pc == Value::Word(0)
    }

    pub fn is_final(&self) -> bool {
        self.pc.is_bot()
    }

    pub fn set(&mut self, input: &Input, v: u64) {
        match input {
            Input::Reg(r) => self.regs.write(r.clone(), v),
            Input::Mem(a) => self.mem.write(*a, v),
        }
    }

    pub fn get(&self, input: &Input) -> Option<u64> {
        match input {
            Input::Reg(r) => self.regs.get(r),
            Input::Mem(a) => self.mem.get(*a),
        }
    }

    /// Fills every undefined register and cell with `v`.
    pub fn completed(self, v: u64) -> Self {
        Configuration { mem: self.mem.with_default(v), regs: self.regs.with_default(v), pc: self.pc }
    }
}

/// Whether two configurations agree on every public register and memory cell.
pub fn indistinguishable(a: &Configuration, b: &Configuration, policy: &Policy) -> bool {
    policy.regs().all(|r| a.regs.get(r) == b.regs.get(r))
        && policy.addrs().all(|m| a.mem.get(m) == b.mem.get(m))
}
