// SPDX-License-Identifier: Apache-2.0

//! Satisfiability of constraints over symbolic terms.
//!
//! Formulas relate symbolic expressions that live on one of up to two copies
//! of the initial state, which is how self-composed queries are expressed.
//! Two back ends are provided: an external SMT-LIB solver process and an
//! exhaustive enumerator for tiny domains.

use std::fmt;

use crate::error::{ExecError, Result};
use crate::muasm::{Configuration, Domain, Input};
use crate::symbolic::term::SymExpr;
use crate::symbolic::valuation::Evaluator;

pub mod enumerate;
pub mod external;
pub mod sexp;
pub mod smtlib;

pub use enumerate::Enumerator;
pub use external::ExternalSolver;

/// Copy of the initial state a term refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Single,
    First,
    Second,
}

impl Side {
    pub fn suffix(self) -> &'static str {
        match self {
            Side::Single => "",
            Side::First => ".1",
            Side::Second => ".2",
        }
    }

    fn index(self) -> usize {
        match self {
            Side::Single | Side::First => 0,
            Side::Second => 1,
        }
    }
}

/// A bitvector term evaluated on one side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bv {
    pub side: Side,
    pub expr: SymExpr,
}

impl Bv {
    pub fn new(side: Side, expr: SymExpr) -> Self {
        Bv { side, expr }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    NonZero(Bv),
    Eq(Bv, Bv),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::Const(true)
    }

    pub fn nonzero(side: Side, e: SymExpr) -> Formula {
        match e.as_const() {
            Some(n) => Formula::Const(n != 0),
            None => Formula::NonZero(Bv::new(side, e)),
        }
    }

    pub fn eq(a: Bv, b: Bv) -> Formula {
        match (a.expr.as_const(), b.expr.as_const()) {
            (Some(x), Some(y)) => Formula::Const(x == y),
            _ if a == b => Formula::Const(true),
            _ => Formula::Eq(a, b),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Const(b) => Formula::Const(!b),
            Formula::Not(g) => *g,
            g => Formula::Not(Box::new(g)),
        }
    }

    pub fn and(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::Const(true) => {}
                Formula::Const(false) => return Formula::Const(false),
                Formula::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::Const(true),
            1 => out.pop().expect("one conjunct"),
            _ => Formula::And(out),
        }
    }

    pub fn or(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::Const(false) => {}
                Formula::Const(true) => return Formula::Const(true),
                Formula::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::Const(false),
            1 => out.pop().expect("one disjunct"),
            _ => Formula::Or(out),
        }
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::Const(true), g) | (g, Formula::Const(true)) => g,
            (Formula::Const(false), g) | (g, Formula::Const(false)) => Formula::not(g),
            (a, b) if a == b => Formula::Const(true),
            (a, b) => Formula::Iff(Box::new(a), Box::new(b)),
        }
    }

    /// Truth value under `model`.
    pub fn eval(&self, model: &Model, dom: &Domain) -> Result<bool> {
        let mut ev = SideEvaluator::new(&model.sides, dom);
        ev.formula(self).map_err(|(_, e)| crate::error::Error::Exec(e))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, op: &str, gs: &[Formula]| {
            f.write_str("(")?;
            f.write_str(op)?;
            for g in gs {
                write!(f, " {g}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::NonZero(b) => write!(f, "[{}]{}", b.expr, b.side.suffix()),
            Formula::Eq(a, b) => write!(f, "([{}]{} = [{}]{})", a.expr, a.side.suffix(), b.expr, b.side.suffix()),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) => join(f, "and", gs),
            Formula::Or(gs) => join(f, "or", gs),
            Formula::Iff(a, b) => write!(f, "(iff {a} {b})"),
        }
    }
}

/// Evaluates formulas over per-side valuations, reporting which input of
/// which side is missing when a valuation is partial.
pub(crate) struct SideEvaluator<'a> {
    evs: [Evaluator<'a>; 2],
}

pub(crate) type Need = (Side, ExecError);

impl<'a> SideEvaluator<'a> {
    pub(crate) fn new(sides: &'a [Configuration; 2], dom: &'a Domain) -> Self {
        SideEvaluator { evs: [Evaluator::new(&sides[0], dom), Evaluator::new(&sides[1], dom)] }
    }

    fn bv(&mut self, b: &Bv) -> std::result::Result<u64, Need> {
        self.evs[b.side.index()].eval(&b.expr).map_err(|e| (b.side, e))
    }

    /// Kleene-style evaluation: a conjunction is false as soon as one
    /// conjunct is false, even if others depend on missing inputs.
    pub(crate) fn formula(&mut self, f: &Formula) -> std::result::Result<bool, Need> {
        match f {
            Formula::Const(b) => Ok(*b),
            Formula::NonZero(b) => Ok(self.bv(b)? != 0),
            Formula::Eq(a, b) => Ok(self.bv(a)? == self.bv(b)?),
            Formula::Not(g) => Ok(!self.formula(g)?),
            Formula::And(gs) => self.junction(gs, false),
            Formula::Or(gs) => self.junction(gs, true),
            Formula::Iff(a, b) => Ok(self.formula(a)? == self.formula(b)?),
        }
    }

    fn junction(&mut self, gs: &[Formula], absorbing: bool) -> std::result::Result<bool, Need> {
        let mut need = None;
        for g in gs {
            match self.formula(g) {
                Ok(v) if v == absorbing => return Ok(absorbing),
                Ok(_) => {}
                Err(n) => {
                    if need.is_none() {
                        need = Some(n);
                    }
                }
            }
        }
        match need {
            Some(n) => Err(n),
            None => Ok(!absorbing),
        }
    }
}

/// Satisfying assignment: one initial configuration per side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    sides: [Configuration; 2],
}

impl Model {
    pub fn new(first: Configuration, second: Configuration) -> Self {
        Model { sides: [first, second] }
    }

    pub fn single(c: Configuration) -> Self {
        Model { sides: [c, Configuration::default()] }
    }

    pub fn valuation(&self, side: Side) -> &Configuration {
        &self.sides[side.index()]
    }

    pub(crate) fn set(&mut self, side: Side, input: &Input, v: u64) {
        self.sides[side.index()].set(input, v);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverResult {
    Sat(Model),
    Unsat,
    Unknown(String),
}

pub trait Solver: Send + Sync {
    fn check(&self, f: &Formula, dom: &Domain) -> Result<SolverResult>;

    fn name(&self) -> String;
}
