// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::expr::{Expr, Reg};
use super::value::Value;
use crate::error::WellFormedError;

/// A single instruction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    Skip,
    /// `x <- e`
    Assign(Reg, Expr),
    /// `x <- c ? e`: assigns `e` to `x` when `c` evaluates to 0.
    CondAssign(Reg, Expr, Expr),
    /// `load x, e`
    Load(Reg, Expr),
    /// `store x, e`: writes register `x` to address `e`.
    Store(Reg, Expr),
    Jmp(Expr),
    /// `beqz x, l`: jumps to `l` when `x` is 0.
    Beqz(Reg, Value),
    Spbarr,
}

impl Instr {
    /// Register written by the instruction, if any.
    pub fn target(&self) -> Option<&Reg> {
        match self {
            Instr::Assign(x, _) | Instr::CondAssign(x, _, _) | Instr::Load(x, _) => Some(x),
            _ => None,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, Instr::Beqz(..))
    }

    pub(crate) fn collect_registers(&self, out: &mut BTreeSet<Reg>) {
        match self {
            Instr::Skip | Instr::Spbarr => {}
            Instr::Assign(x, e) | Instr::Load(x, e) | Instr::Store(x, e) => {
                out.insert(x.clone());
                e.collect_registers(out);
            }
            Instr::CondAssign(x, e, c) => {
                out.insert(x.clone());
                e.collect_registers(out);
                c.collect_registers(out);
            }
            Instr::Jmp(e) => e.collect_registers(out),
            Instr::Beqz(x, _) => {
                out.insert(x.clone());
            }
        }
    }
}

/// A well-formed program: a partial map from labels to instructions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    code: BTreeMap<u64, Instr>,
}

impl Program {
    /// Builds a program, rejecting duplicate labels, a missing label 0, a
    /// `beqz` to its own successor, and writes to `pc`.
    pub fn new<I>(instrs: I) -> Result<Program, WellFormedError>
    where
        I: IntoIterator<Item = (u64, Instr)>,
    {
        let mut code = BTreeMap::new();
        for (label, ins) in instrs {
            check_instr(label, &ins)?;
            if code.insert(label, ins).is_some() {
                return Err(WellFormedError::DuplicateLabel(label));
            }
        }
        if !code.contains_key(&0) {
            return Err(WellFormedError::MissingEntry);
        }
        Ok(Program { code })
    }

    /// Program with instructions at consecutive labels starting from 0.
    pub fn sequential<I>(instrs: I) -> Result<Program, WellFormedError>
    where
        I: IntoIterator<Item = Instr>,
    {
        Program::new(instrs.into_iter().enumerate().map(|(i, ins)| (i as u64, ins)))
    }

    /// `p(l)`; `None` plays the role of the undefined instruction.
    pub fn get(&self, pc: Value) -> Option<&Instr> {
        match pc {
            Value::Word(n) => self.code.get(&n),
            Value::Bot => None,
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = u64> + '_ {
        self.code.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Instr)> + '_ {
        self.code.iter().map(|(l, i)| (*l, i))
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// Every register mentioned, excluding `pc`.
    pub fn registers(&self) -> BTreeSet<Reg> {
        let mut out = BTreeSet::new();
        for ins in self.code.values() {
            ins.collect_registers(&mut out);
        }
        out.retain(|r| !r.is_pc());
        out
    }

    pub fn branch_count(&self) -> usize {
        self.code.values().filter(|i| i.is_branch()).count()
    }
}

fn check_instr(label: u64, ins: &Instr) -> Result<(), WellFormedError> {
    if ins.target().is_some_and(Reg::is_pc) {
        return Err(WellFormedError::PcTarget(label));
    }
    if let Instr::Beqz(_, Value::Word(t)) = ins {
        if Some(*t) == label.checked_add(1) {
            return Err(WellFormedError::BranchToNext(label));
        }
    }
    Ok(())
}
