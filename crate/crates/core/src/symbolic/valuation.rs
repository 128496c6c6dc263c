// SPDX-License-Identifier: Apache-2.0

//! Concretization of symbolic terms under a valuation.
//!
//! A valuation is represented by a [`Configuration`]: it assigns a value to
//! the initial content of every register and memory cell.

use std::collections::HashMap;

use super::semantics::{SymConfig, SymObs};
use super::term::{MemKind, SymExpr, SymKind, SymMem};
use crate::error::{Error, ExecError, Result};
use crate::muasm::{BinOp, Configuration, Domain, Memory, Observation, Trace};

/// Memoizing evaluator for terms that stay alive for the evaluator's lifetime.
pub struct Evaluator<'a> {
    mu: &'a Configuration,
    dom: &'a Domain,
    exprs: HashMap<*const (), u64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(mu: &'a Configuration, dom: &'a Domain) -> Self {
        Evaluator { mu, dom, exprs: HashMap::new() }
    }

    /// Value of `e`. Reading an undefined input of a partial valuation fails
    /// with [`ExecError::Undefined`].
    pub fn eval(&mut self, e: &SymExpr) -> Result<u64, ExecError> {
        let k = e.node_id();
        if let Some(v) = self.exprs.get(&k) {
            return Ok(*v);
        }
        let w = self.dom.width;
        let v = match e.kind() {
            SymKind::Const(n) => *n,
            SymKind::Var(r) => w.wrap(self.mu.regs.read(r)?),
            SymKind::Ite(c, t, f) => {
                if self.eval(c)? != 0 {
                    self.eval(t)?
                } else {
                    self.eval(f)?
                }
            }
            SymKind::Unary(op, a) => op.apply(w, self.eval(a)?),
            SymKind::Binary(op, a, b) => {
                let x = self.eval(a)?;
                if x == 0 && matches!(op, BinOp::And | BinOp::Mul) {
                    0
                } else {
                    op.apply(w, x, self.eval(b)?)
                }
            }
            SymKind::Read(m, a) => {
                let addr = self.eval(a)?;
                self.read(m, addr)?
            }
        };
        self.exprs.insert(k, v);
        Ok(v)
    }

    /// Content of address `addr` in memory `m`.
    pub fn read(&mut self, m: &SymMem, addr: u64) -> Result<u64, ExecError> {
        let cell = self.dom.addr(addr);
        let mut cur = m;
        loop {
            match cur.kind() {
                MemKind::Base => return Ok(self.dom.width.wrap(self.mu.mem.read(cell)?)),
                MemKind::Write(prev, a, v) => {
                    if self.dom.addr(self.eval(a)?) == cell {
                        return self.eval(v);
                    }
                    cur = prev;
                }
            }
        }
    }

    /// Concrete memory denoted by `m`.
    pub fn memory(&mut self, m: &SymMem) -> Result<Memory, ExecError> {
        let mut writes = Vec::new();
        let mut cur = m;
        while let MemKind::Write(prev, a, v) = cur.kind() {
            writes.push((a, v));
            cur = prev;
        }
        let mut mem = self.mu.mem.clone();
        for (a, v) in writes.into_iter().rev() {
            let a = self.eval(a)?;
            let v = self.eval(v)?;
            mem.write(self.dom.addr(a), v);
        }
        Ok(mem)
    }
}

fn unbound(e: ExecError) -> Error {
    match e {
        ExecError::Undefined(i) => Error::Unbound(i.to_string()),
        other => Error::Exec(other),
    }
}

/// `μ(se)`.
pub fn apply_expr(mu: &Configuration, dom: &Domain, e: &SymExpr) -> Result<u64> {
    Evaluator::new(mu, dom).eval(e).map_err(unbound)
}

/// `μ(sc)`: the concrete configuration denoted by a symbolic configuration.
pub fn apply_config(mu: &Configuration, dom: &Domain, sc: &SymConfig) -> Result<Configuration> {
    let mut ev = Evaluator::new(mu, dom);
    let mem = ev.memory(&sc.mem).map_err(unbound)?;
    let mut regs = mu.regs.clone();
    for (r, e) in sc.regs.iter() {
        regs.write(r.clone(), ev.eval(e).map_err(unbound)?);
    }
    Ok(Configuration { mem, regs, pc: sc.pc })
}

/// `μ(τ)`: drops path-condition events and concretizes the rest.
pub fn apply_trace(mu: &Configuration, dom: &Domain, trace: &[SymObs]) -> Result<Trace> {
    let mut ev = Evaluator::new(mu, dom);
    let mut out = Vec::with_capacity(trace.len());
    for o in trace {
        out.push(match o {
            SymObs::Load(e) => Observation::Load(ev.eval(e).map_err(unbound)?),
            SymObs::Store(e) => Observation::Store(ev.eval(e).map_err(unbound)?),
            SymObs::Pc(l) => Observation::Pc(*l),
            SymObs::SymPc(_) => continue,
            SymObs::Start(i) => Observation::Start(*i),
            SymObs::Commit(i) => Observation::Commit(*i),
            SymObs::Rollback(i) => Observation::Rollback(*i),
        });
    }
    Ok(out)
}

/// Whether `μ` satisfies every condition in `conds`.
pub fn satisfies(mu: &Configuration, dom: &Domain, conds: &[SymExpr]) -> Result<bool> {
    let mut ev = Evaluator::new(mu, dom);
    for c in conds {
        if ev.eval(c).map_err(unbound)? == 0 {
            return Ok(false);
        }
    }
    Ok(true)
}
