// SPDX-License-Identifier: Apache-2.0

//! Symbolic non-speculative and always-mispredict semantics.

use std::collections::BTreeMap;
use std::fmt;

use super::term::{SymExpr, SymMem};
use crate::error::ExecError;
use crate::muasm::{Domain, Expr, Instr, Marker, Program, Reg, TraceEvent, Value};
use crate::speculative::am::nested_window;
use crate::speculative::{SpecEntry, SpecStack};

/// Symbolic configuration. The program counter is always concrete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymConfig {
    pub mem: SymMem,
    /// Registers assigned so far; the others still hold their initial value.
    pub regs: BTreeMap<Reg, SymExpr>,
    pub pc: Value,
}

impl Default for SymConfig {
    fn default() -> Self {
        SymConfig::initial()
    }
}

impl SymConfig {
    /// Canonical initial configuration: every input is its own symbol.
    pub fn initial() -> Self {
        SymConfig { mem: SymMem::base(), regs: BTreeMap::new(), pc: Value::Word(0) }
    }

    pub fn reg(&self, r: &Reg) -> SymExpr {
        self.regs.get(r).cloned().unwrap_or_else(|| SymExpr::var(r.clone()))
    }

    pub fn is_final(&self) -> bool {
        self.pc.is_bot()
    }
}

/// Event of a symbolic trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymObs {
    Load(SymExpr),
    Store(SymExpr),
    Pc(Value),
    /// Branch condition that holds along the path (non-zero means true).
    SymPc(SymExpr),
    Start(u64),
    Commit(u64),
    Rollback(u64),
}

pub type SymTrace = Vec<SymObs>;

impl TraceEvent for SymObs {
    fn marker(&self) -> Option<Marker> {
        match *self {
            SymObs::Start(i) => Some(Marker::Start(i)),
            SymObs::Commit(i) => Some(Marker::Commit(i)),
            SymObs::Rollback(i) => Some(Marker::Rollback(i)),
            _ => None,
        }
    }
}

impl fmt::Display for SymObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymObs::Load(e) => write!(f, "load {e}"),
            SymObs::Store(e) => write!(f, "store {e}"),
            SymObs::Pc(l) => write!(f, "pc {l}"),
            SymObs::SymPc(c) => write!(f, "sympc {c}"),
            SymObs::Start(i) => write!(f, "start {i}"),
            SymObs::Commit(i) => write!(f, "commit {i}"),
            SymObs::Rollback(i) => write!(f, "rollback {i}"),
        }
    }
}

/// One observation per line, mirroring the concrete trace dump.
pub fn dump_sym_trace(trace: &[SymObs]) -> String {
    trace.iter().map(|o| format!("{o}\n")).collect()
}

/// Distinct non-trivial path conditions of a trace, in order of first occurrence.
pub fn path_condition(trace: &[SymObs]) -> Vec<SymExpr> {
    let mut seen = std::collections::HashSet::new();
    trace
        .iter()
        .filter_map(|o| match o {
            SymObs::SymPc(c) if !c.is_const() && seen.insert(c.clone()) => Some(c.clone()),
            _ => None,
        })
        .collect()
}

/// Configuration of the symbolic always-mispredict semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymAmConfig {
    pub ctr: u64,
    pub sigma: SymConfig,
    pub stack: SpecStack<SymConfig>,
}

impl SymAmConfig {
    pub fn initial() -> Self {
        SymAmConfig { ctr: 0, sigma: SymConfig::initial(), stack: SpecStack::new() }
    }

    pub fn is_final(&self) -> bool {
        self.stack.is_empty() && self.sigma.is_final()
    }
}

/// A successor produced by a symbolic rule.
#[derive(Clone, Debug)]
pub struct SymStep<C> {
    pub next: C,
    pub obs: Vec<SymObs>,
}

/// Symbolic interpreter for a program over a domain.
#[derive(Clone, Copy, Debug)]
pub struct SymMachine<'p> {
    pub program: &'p Program,
    pub domain: Domain,
}

impl<'p> SymMachine<'p> {
    pub fn new(program: &'p Program, domain: Domain) -> Self {
        SymMachine { program, domain }
    }

    /// Symbolic expression evaluation with constant folding.
    pub fn eval(&self, e: &Expr, sc: &SymConfig) -> Result<SymExpr, ExecError> {
        let w = self.domain.width;
        Ok(match e {
            Expr::Lit(Value::Word(n)) => SymExpr::constant(*n, w),
            Expr::Lit(Value::Bot) => return Err(ExecError::BotOperand),
            Expr::Reg(r) if r.is_pc() => match sc.pc {
                Value::Word(n) => SymExpr::constant(n, w),
                Value::Bot => return Err(ExecError::BotOperand),
            },
            Expr::Reg(r) => sc.reg(r),
            Expr::Unary(op, a) => SymExpr::unary(*op, self.eval(a, sc)?, w),
            Expr::Binary(op, a, b) => SymExpr::binary(*op, self.eval(a, sc)?, self.eval(b, sc)?, w),
        })
    }

    /// Concrete labels a symbolic jump may reach: every program label, every
    /// word when the width is small, and `hint`.
    pub fn jump_candidates(&self, hint: Option<u64>) -> Vec<u64> {
        let mask = self.domain.width.mask();
        let mut out: Vec<u64> = if self.domain.width.bits() <= 8 {
            (0..=mask).collect()
        } else {
            self.program.labels().filter(|l| *l <= mask).collect()
        };
        if let Some(h) = hint {
            out.push(h);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All successors of a non-speculative symbolic step.
    pub fn step_nonspec(
        &self,
        sc: &SymConfig,
        hint: Option<u64>,
    ) -> Result<Vec<SymStep<SymConfig>>, ExecError> {
        let w = self.domain.width;
        let single = |next: SymConfig, obs: Vec<SymObs>| Ok(vec![SymStep { next, obs }]);
        let Some(ins) = self.program.get(sc.pc) else {
            let mut next = sc.clone();
            next.pc = Value::Bot;
            return single(next, vec![]);
        };
        let mut next = sc.clone();
        next.pc = sc.pc.succ();
        match ins {
            Instr::Skip | Instr::Spbarr => single(next, vec![]),
            Instr::Assign(x, e) => {
                next.regs.insert(x.clone(), self.eval(e, sc)?);
                single(next, vec![])
            }
            Instr::CondAssign(x, e, c) => {
                let cond = self.eval(c, sc)?;
                match cond.as_const() {
                    Some(0) => {
                        next.regs.insert(x.clone(), self.eval(e, sc)?);
                    }
                    Some(_) => {}
                    None => {
                        let v = SymExpr::ite(cond.eq_zero(w), self.eval(e, sc)?, sc.reg(x));
                        next.regs.insert(x.clone(), v);
                    }
                }
                single(next, vec![])
            }
            Instr::Load(x, e) => {
                let a = self.eval(e, sc)?;
                next.regs.insert(x.clone(), sc.mem.read_at(a.clone(), &self.domain));
                single(next, vec![SymObs::Load(a)])
            }
            Instr::Store(x, e) => {
                let a = self.eval(e, sc)?;
                let v = self.eval(&Expr::Reg(x.clone()), sc)?;
                next.mem = sc.mem.write(a.clone(), v);
                single(next, vec![SymObs::Store(a)])
            }
            Instr::Beqz(x, target) => {
                let v = sc.reg(x);
                let fall = sc.pc.succ();
                match v.as_const() {
                    Some(n) => {
                        next.pc = if n == 0 { *target } else { fall };
                        let pc = next.pc;
                        single(next, vec![SymObs::SymPc(SymExpr::truth()), SymObs::Pc(pc)])
                    }
                    None => {
                        let mut taken = sc.clone();
                        taken.pc = *target;
                        let mut not_taken = sc.clone();
                        not_taken.pc = fall;
                        Ok(vec![
                            SymStep {
                                next: taken,
                                obs: vec![SymObs::SymPc(v.eq_zero(w)), SymObs::Pc(*target)],
                            },
                            SymStep {
                                next: not_taken,
                                obs: vec![SymObs::SymPc(v.ne_zero(w)), SymObs::Pc(fall)],
                            },
                        ])
                    }
                }
            }
            Instr::Jmp(e) => {
                if matches!(e, Expr::Lit(Value::Bot)) {
                    next.pc = Value::Bot;
                    return single(next, vec![SymObs::SymPc(SymExpr::truth()), SymObs::Pc(Value::Bot)]);
                }
                let t = self.eval(e, sc)?;
                if let Some(l) = t.as_const() {
                    next.pc = Value::Word(l);
                    return single(next, vec![SymObs::SymPc(SymExpr::truth()), SymObs::Pc(Value::Word(l))]);
                }
                Ok(self
                    .jump_candidates(hint)
                    .into_iter()
                    .map(|l| {
                        let mut n = sc.clone();
                        n.pc = Value::Word(l);
                        let cond = SymExpr::binary(
                            crate::muasm::BinOp::Eq,
                            t.clone(),
                            SymExpr::constant(l, w),
                            w,
                        );
                        SymStep { next: n, obs: vec![SymObs::SymPc(cond), SymObs::Pc(Value::Word(l))] }
                    })
                    .collect())
            }
        }
    }

    /// All successors of a symbolic always-mispredict step with window `w`.
    pub fn step_am(
        &self,
        window: u64,
        c: &SymAmConfig,
        hint: Option<u64>,
    ) -> Result<Vec<SymStep<SymAmConfig>>, ExecError> {
        if !c.stack.enabled_last() {
            let mut stack = c.stack.clone();
            let entry = stack.0.pop().expect("a disabled stack is non-empty");
            let resolved = self
                .step_nonspec(&entry.snapshot, None)?
                .into_iter()
                .find(|s| s.next.pc != entry.predicted)
                .ok_or_else(|| {
                    ExecError::Stuck(format!("no correct successor for transaction {}", entry.id))
                })?;
            let pc = resolved.next.pc;
            return Ok(vec![SymStep {
                next: SymAmConfig { ctr: c.ctr, sigma: resolved.next, stack },
                obs: vec![SymObs::Rollback(entry.id), SymObs::Pc(pc)],
            }]);
        }
        if let (Value::Word(label), Some(Instr::Beqz(_, target))) = (c.sigma.pc, self.program.get(c.sigma.pc)) {
            let fall = Value::Word(label + 1);
            let remaining = nested_window(c.stack.wndw(), window);
            let mut base_stack = c.stack.clone();
            base_stack.decr_last();
            return Ok(self
                .step_nonspec(&c.sigma, None)?
                .into_iter()
                .map(|s| {
                    let cond = s.obs[0].clone();
                    let actual = s.next.pc;
                    let mispredicted = if actual != fall { fall } else { *target };
                    let mut stack = base_stack.clone();
                    stack.push(SpecEntry {
                        snapshot: c.sigma.clone(),
                        id: c.ctr,
                        remaining,
                        predicted: mispredicted,
                    });
                    let mut sigma = c.sigma.clone();
                    sigma.pc = mispredicted;
                    SymStep {
                        next: SymAmConfig { ctr: c.ctr + 1, sigma, stack },
                        obs: vec![cond, SymObs::Start(c.ctr), SymObs::Pc(mispredicted)],
                    }
                })
                .collect());
        }
        let barrier = matches!(self.program.get(c.sigma.pc), Some(Instr::Spbarr));
        let mut stack = c.stack.clone();
        if barrier {
            stack.zeroes_last();
        } else {
            stack.decr_last();
        }
        Ok(self
            .step_nonspec(&c.sigma, hint)?
            .into_iter()
            .map(|s| SymStep {
                next: SymAmConfig { ctr: c.ctr, sigma: s.next, stack: stack.clone() },
                obs: s.obs,
            })
            .collect())
    }
}
