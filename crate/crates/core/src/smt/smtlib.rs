// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB 2 encoding of formulas over the theory of bitvectors and arrays.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use super::sexp::{parse_all, Sexp};
use super::{Formula, Model, Side, SolverResult};
use crate::error::{Error, Result};
use crate::muasm::{BinOp, Configuration, Domain, Input, Reg, UnOp};
use crate::symbolic::term::{MemKind, SymExpr, SymKind, SymMem};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    E(Side, SymExpr),
    M(Side, SymMem),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Request {
    Reg(Side, Reg),
    /// Reduced address and the initial content at that address.
    Cell(Side),
}

/// A complete solver script plus what is needed to read the model back.
#[derive(Clone, Debug)]
pub struct Script {
    pub text: String,
    requests: Vec<Request>,
}

fn reg_name(r: &Reg, side: Side) -> String {
    format!("|r.{}{}|", r.name(), side.suffix())
}

fn mem_name(side: Side) -> String {
    format!("|m{}|", side.suffix())
}

struct Emitter<'d> {
    dom: &'d Domain,
    counts: HashMap<Key, u32>,
    names: HashMap<Key, String>,
    defs: Vec<String>,
    regs: BTreeSet<(Side, Reg)>,
    mems: BTreeSet<Side>,
    cells: Vec<(Side, String)>,
    seen_cells: HashSet<(Side, String)>,
}

impl<'d> Emitter<'d> {
    fn bits(&self) -> u32 {
        self.dom.width.bits()
    }

    fn lit(&self, n: u64) -> String {
        format!("(_ bv{} {})", self.dom.width.wrap(n), self.bits())
    }

    fn count_expr(&mut self, side: Side, e: &SymExpr) {
        let c = self.counts.entry(Key::E(side, e.clone())).or_insert(0);
        *c += 1;
        if *c > 1 {
            return;
        }
        match e.kind() {
            SymKind::Const(_) => {}
            SymKind::Var(r) => {
                self.regs.insert((side, r.clone()));
            }
            SymKind::Ite(c, t, f) => {
                self.count_expr(side, c);
                self.count_expr(side, t);
                self.count_expr(side, f);
            }
            SymKind::Unary(_, a) => self.count_expr(side, a),
            SymKind::Binary(_, a, b) => {
                self.count_expr(side, a);
                self.count_expr(side, b);
            }
            SymKind::Read(m, a) => {
                self.count_mem(side, m);
                self.count_expr(side, a);
            }
        }
    }

    fn count_mem(&mut self, side: Side, m: &SymMem) {
        let c = self.counts.entry(Key::M(side, m.clone())).or_insert(0);
        *c += 1;
        if *c > 1 {
            return;
        }
        match m.kind() {
            MemKind::Base => {
                self.mems.insert(side);
            }
            MemKind::Write(p, a, v) => {
                self.count_mem(side, p);
                self.count_expr(side, a);
                self.count_expr(side, v);
            }
        }
    }

    fn count_formula(&mut self, f: &Formula) {
        match f {
            Formula::Const(_) => {}
            Formula::NonZero(b) => self.count_expr(b.side, &b.expr),
            Formula::Eq(a, b) => {
                self.count_expr(a.side, &a.expr);
                self.count_expr(b.side, &b.expr);
            }
            Formula::Not(g) => self.count_formula(g),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| self.count_formula(g)),
            Formula::Iff(a, b) => {
                self.count_formula(a);
                self.count_formula(b);
            }
        }
    }

    fn share(&mut self, key: Key, body: String, sort: String) -> String {
        if self.counts.get(&key).copied().unwrap_or(0) < 2 {
            return body;
        }
        let name = format!("|t.{}|", self.defs.len());
        self.defs.push(format!("(define-fun {name} () {sort} {body})"));
        self.names.insert(key, name.clone());
        name
    }

    fn addr(&mut self, side: Side, a: &SymExpr) -> String {
        let a = self.expr(side, a);
        match self.dom.mem_cells {
            Some(m) => format!("(bvurem {a} {})", self.lit(m)),
            None => a,
        }
    }

    fn expr(&mut self, side: Side, e: &SymExpr) -> String {
        let key = Key::E(side, e.clone());
        if let Some(n) = self.names.get(&key) {
            return n.clone();
        }
        let body = match e.kind() {
            SymKind::Const(n) => return self.lit(*n),
            SymKind::Var(r) => return reg_name(r, side),
            SymKind::Ite(c, t, f) => {
                let c = self.pred(side, c);
                let t = self.expr(side, t);
                let f = self.expr(side, f);
                format!("(ite {c} {t} {f})")
            }
            SymKind::Unary(op, a) => {
                let a = self.expr(side, a);
                match op {
                    UnOp::Neg => format!("(bvneg {a})"),
                    UnOp::Not => format!("(bvnot {a})"),
                }
            }
            SymKind::Binary(op, a, b) if op.is_comparison() => {
                let p = self.comparison(side, *op, a, b);
                format!("(ite {p} {} {})", self.lit(1), self.lit(0))
            }
            SymKind::Binary(op, a, b) => {
                let a = self.expr(side, a);
                let b = self.expr(side, b);
                let f = match op {
                    BinOp::Add => "bvadd",
                    BinOp::Sub => "bvsub",
                    BinOp::Mul => "bvmul",
                    BinOp::And => "bvand",
                    BinOp::Or => "bvor",
                    BinOp::Xor => "bvxor",
                    BinOp::Shl => "bvshl",
                    BinOp::Shr => "bvlshr",
                    _ => unreachable!("comparisons handled above"),
                };
                format!("({f} {a} {b})")
            }
            SymKind::Read(m, a) => {
                let m = self.mem(side, m);
                let a = self.addr(side, a);
                if self.seen_cells.insert((side, a.clone())) {
                    self.cells.push((side, a.clone()));
                }
                format!("(select {m} {a})")
            }
        };
        let sort = format!("(_ BitVec {})", self.bits());
        self.share(key, body, sort)
    }

    fn mem(&mut self, side: Side, m: &SymMem) -> String {
        let key = Key::M(side, m.clone());
        if let Some(n) = self.names.get(&key) {
            return n.clone();
        }
        let body = match m.kind() {
            MemKind::Base => return mem_name(side),
            MemKind::Write(p, a, v) => {
                let p = self.mem(side, p);
                let a = self.addr(side, a);
                let v = self.expr(side, v);
                format!("(store {p} {a} {v})")
            }
        };
        let sort = format!("(Array (_ BitVec {b}) (_ BitVec {b}))", b = self.bits());
        self.share(key, body, sort)
    }

    fn comparison(&mut self, side: Side, op: BinOp, a: &SymExpr, b: &SymExpr) -> String {
        let a = self.expr(side, a);
        let b = self.expr(side, b);
        match op {
            BinOp::Lt => format!("(bvult {a} {b})"),
            BinOp::Le => format!("(bvule {a} {b})"),
            BinOp::Eq => format!("(= {a} {b})"),
            BinOp::Ne => format!("(distinct {a} {b})"),
            _ => unreachable!("not a comparison"),
        }
    }

    /// Boolean term for `e ≠ 0`.
    fn pred(&mut self, side: Side, e: &SymExpr) -> String {
        match e.kind() {
            SymKind::Const(n) => (*n != 0).to_string(),
            SymKind::Binary(op, a, b) if op.is_comparison() => self.comparison(side, *op, a, b),
            _ => {
                let e = self.expr(side, e);
                format!("(not (= {e} {}))", self.lit(0))
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> String {
        let join = |this: &mut Self, op: &str, gs: &[Formula]| {
            let parts: Vec<String> = gs.iter().map(|g| this.formula(g)).collect();
            format!("({op} {})", parts.join(" "))
        };
        match f {
            Formula::Const(b) => b.to_string(),
            Formula::NonZero(b) => self.pred(b.side, &b.expr),
            Formula::Eq(a, b) => {
                let a = self.expr(a.side, &a.expr);
                let b = self.expr(b.side, &b.expr);
                format!("(= {a} {b})")
            }
            Formula::Not(g) => format!("(not {})", self.formula(g)),
            Formula::And(gs) => join(self, "and", gs),
            Formula::Or(gs) => join(self, "or", gs),
            Formula::Iff(a, b) => {
                let a = self.formula(a);
                let b = self.formula(b);
                format!("(= {a} {b})")
            }
        }
    }
}

/// Encodes a satisfiability query for `f` together with the value requests
/// needed to rebuild a model.
pub fn emit(f: &Formula, dom: &Domain) -> Script {
    let mut em = Emitter {
        dom,
        counts: HashMap::new(),
        names: HashMap::new(),
        defs: Vec::new(),
        regs: BTreeSet::new(),
        mems: BTreeSet::new(),
        cells: Vec::new(),
        seen_cells: HashSet::new(),
    };
    em.count_formula(f);
    let body = em.formula(f);
    let b = dom.width.bits();
    let mut text = String::from("(set-option :produce-models true)\n(set-logic QF_ABV)\n");
    for (side, r) in &em.regs {
        let _ = writeln!(text, "(declare-fun {} () (_ BitVec {b}))", reg_name(r, *side));
    }
    for side in &em.mems {
        let _ = writeln!(text, "(declare-fun {} () (Array (_ BitVec {b}) (_ BitVec {b})))", mem_name(*side));
    }
    for d in &em.defs {
        text.push_str(d);
        text.push('\n');
    }
    let _ = writeln!(text, "(assert {body})\n(check-sat)");
    let mut requests = Vec::new();
    let mut terms = Vec::new();
    for (side, r) in &em.regs {
        requests.push(Request::Reg(*side, r.clone()));
        terms.push(reg_name(r, *side));
    }
    for (side, a) in &em.cells {
        requests.push(Request::Cell(*side));
        terms.push(a.clone());
        terms.push(format!("(select {} {a})", mem_name(*side)));
    }
    if !terms.is_empty() {
        let _ = writeln!(text, "(get-value ({}))", terms.join(" "));
    }
    text.push_str("(exit)\n");
    Script { text, requests }
}

fn bv(s: &Sexp) -> Result<u64> {
    s.bitvector().ok_or_else(|| Error::Solver(format!("expected a bitvector value, got {s:?}")))
}

/// Interprets the solver's answer to `script`.
pub fn parse_response(script: &Script, output: &str) -> Result<SolverResult> {
    let items = parse_all(output)?;
    let status = items.first().and_then(Sexp::atom).unwrap_or("");
    match status {
        "unsat" => return Ok(SolverResult::Unsat),
        "unknown" => return Ok(SolverResult::Unknown("solver returned unknown".into())),
        "sat" => {}
        _ => {
            return Err(Error::Solver(format!(
                "unexpected solver output: {}",
                output.lines().next().unwrap_or("<empty>")
            )))
        }
    }
    let mut model = Model::new(Configuration::default(), Configuration::default());
    if script.requests.is_empty() {
        return Ok(SolverResult::Sat(model));
    }
    let values = items
        .get(1)
        .and_then(Sexp::list)
        .ok_or_else(|| Error::Solver("missing model values".into()))?;
    let mut vals = values.iter().map(|pair| match pair.list() {
        Some([_, v]) => bv(v),
        _ => Err(Error::Solver(format!("malformed value entry {pair:?}"))),
    });
    let mut next = || vals.next().unwrap_or_else(|| Err(Error::Solver("too few model values".into())));
    for req in &script.requests {
        match req {
            Request::Reg(side, r) => {
                let v = next()?;
                model.set(*side, &Input::Reg(r.clone()), v);
            }
            Request::Cell(side) => {
                let a = next()?;
                let v = next()?;
                model.set(*side, &Input::Mem(a), v);
            }
        }
    }
    Ok(SolverResult::Sat(model))
}
