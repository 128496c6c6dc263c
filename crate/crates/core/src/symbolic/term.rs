// SPDX-License-Identifier: Apache-2.0

//! Symbolic bitvector expressions and array-valued symbolic memories.
//!
//! Nodes are reference counted and carry a precomputed structural hash, so
//! shared subterms are cheap to clone, compare and use as map keys.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::muasm::{BinOp, Domain, Reg, UnOp, Width};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymKind {
    Const(u64),
    /// Initial value of a register.
    Var(Reg),
    /// `ite(c, t, e)` selects `t` when `c` is non-zero.
    Ite(SymExpr, SymExpr, SymExpr),
    Unary(UnOp, SymExpr),
    Binary(BinOp, SymExpr, SymExpr),
    Read(SymMem, SymExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemKind {
    /// The initial memory.
    Base,
    Write(SymMem, SymExpr, SymExpr),
}

#[derive(Debug)]
struct ExprNode {
    kind: SymKind,
    hash: u64,
}

#[derive(Debug)]
struct MemNode {
    kind: MemKind,
    hash: u64,
}

#[derive(Clone, Debug)]
pub struct SymExpr(Arc<ExprNode>);

#[derive(Clone, Debug)]
pub struct SymMem(Arc<MemNode>);

fn hash_of(f: impl FnOnce(&mut DefaultHasher)) -> u64 {
    let mut h = DefaultHasher::new();
    f(&mut h);
    h.finish()
}

impl PartialEq for SymExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}
impl Eq for SymExpr {}

impl Hash for SymExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialEq for SymMem {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}
impl Eq for SymMem {}

impl Hash for SymMem {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl SymExpr {
    fn mk(kind: SymKind) -> SymExpr {
        let hash = hash_of(|h| match &kind {
            SymKind::Const(n) => (0u8, n).hash(h),
            SymKind::Var(r) => (1u8, r).hash(h),
            SymKind::Ite(c, t, e) => (2u8, c.0.hash, t.0.hash, e.0.hash).hash(h),
            SymKind::Unary(op, a) => (3u8, op, a.0.hash).hash(h),
            SymKind::Binary(op, a, b) => (4u8, op, a.0.hash, b.0.hash).hash(h),
            SymKind::Read(m, a) => (5u8, m.0.hash, a.0.hash).hash(h),
        });
        SymExpr(Arc::new(ExprNode { kind, hash }))
    }

    pub fn kind(&self) -> &SymKind {
        &self.0.kind
    }

    /// Structural hash, stable within a process.
    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    /// Identity of the shared node, for memo tables.
    pub(crate) fn node_id(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    pub fn constant(n: u64, w: Width) -> SymExpr {
        SymExpr::mk(SymKind::Const(w.wrap(n)))
    }

    pub fn truth() -> SymExpr {
        SymExpr::mk(SymKind::Const(1))
    }

    pub fn var(r: Reg) -> SymExpr {
        SymExpr::mk(SymKind::Var(r))
    }

    pub fn as_const(&self) -> Option<u64> {
        match self.kind() {
            SymKind::Const(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        self.as_const().is_some()
    }

    /// Unary operator with constant folding.
    pub fn unary(op: UnOp, a: SymExpr, w: Width) -> SymExpr {
        match a.as_const() {
            Some(n) => SymExpr::constant(op.apply(w, n), w),
            None => SymExpr::mk(SymKind::Unary(op, a)),
        }
    }

    /// Binary operator with constant folding.
    pub fn binary(op: BinOp, a: SymExpr, b: SymExpr, w: Width) -> SymExpr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => SymExpr::constant(op.apply(w, x, y), w),
            _ => SymExpr::mk(SymKind::Binary(op, a, b)),
        }
    }

    pub fn ite(c: SymExpr, t: SymExpr, e: SymExpr) -> SymExpr {
        match c.as_const() {
            Some(0) => e,
            Some(_) => t,
            None if t == e => t,
            None => SymExpr::mk(SymKind::Ite(c, t, e)),
        }
    }

    pub fn read(m: SymMem, a: SymExpr) -> SymExpr {
        SymExpr::mk(SymKind::Read(m, a))
    }

    /// Truth value of `self = 0`, as a 0/1 expression. Comparisons are negated
    /// directly instead of being wrapped.
    pub fn eq_zero(&self, w: Width) -> SymExpr {
        match self.kind() {
            SymKind::Const(n) => SymExpr::constant(u64::from(*n == 0), w),
            SymKind::Binary(op, a, b) if op.is_comparison() => {
                let (op, a, b) = match op {
                    BinOp::Lt => (BinOp::Le, b, a),
                    BinOp::Le => (BinOp::Lt, b, a),
                    BinOp::Eq => (BinOp::Ne, a, b),
                    _ => (BinOp::Eq, a, b),
                };
                SymExpr::mk(SymKind::Binary(op, a.clone(), b.clone()))
            }
            _ => SymExpr::binary(BinOp::Eq, self.clone(), SymExpr::constant(0, w), w),
        }
    }

    /// Truth value of `self ≠ 0`, as a 0/1 expression.
    pub fn ne_zero(&self, w: Width) -> SymExpr {
        match self.kind() {
            SymKind::Const(n) => SymExpr::constant(u64::from(*n != 0), w),
            SymKind::Binary(op, ..) if op.is_comparison() => self.clone(),
            _ => SymExpr::binary(BinOp::Ne, self.clone(), SymExpr::constant(0, w), w),
        }
    }

    fn precedence(&self) -> u8 {
        match self.kind() {
            SymKind::Binary(op, ..) => op.precedence(),
            SymKind::Unary(..) => 9,
            _ => 10,
        }
    }
}

impl SymMem {
    fn mk(kind: MemKind) -> SymMem {
        let hash = hash_of(|h| match &kind {
            MemKind::Base => 10u8.hash(h),
            MemKind::Write(m, a, v) => (11u8, m.0.hash, a.0.hash, v.0.hash).hash(h),
        });
        SymMem(Arc::new(MemNode { kind, hash }))
    }

    pub fn base() -> SymMem {
        SymMem::mk(MemKind::Base)
    }

    pub fn kind(&self) -> &MemKind {
        &self.0.kind
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn write(&self, a: SymExpr, v: SymExpr) -> SymMem {
        SymMem::mk(MemKind::Write(self.clone(), a, v))
    }

    /// Reads `a`, resolving writes to constant addresses when the address is
    /// constant as well.
    pub fn read_at(&self, a: SymExpr, dom: &Domain) -> SymExpr {
        if let Some(target) = a.as_const() {
            let target = dom.addr(target);
            let mut m = self;
            loop {
                match m.kind() {
                    MemKind::Base => break,
                    MemKind::Write(prev, wa, v) => match wa.as_const() {
                        Some(x) if dom.addr(x) == target => return v.clone(),
                        Some(_) => m = prev,
                        None => break,
                    },
                }
            }
            return SymExpr::read(m.clone(), a);
        }
        SymExpr::read(self.clone(), a)
    }

    /// Number of writes on top of the base memory.
    pub fn depth(&self) -> usize {
        let mut n = 0;
        let mut m = self;
        while let MemKind::Write(prev, ..) = m.kind() {
            n += 1;
            m = prev;
        }
        n
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            SymKind::Const(n) => write!(f, "{n}"),
            SymKind::Var(r) => write!(f, "{r}"),
            SymKind::Ite(c, t, e) => write!(f, "ite({c}, {t}, {e})"),
            SymKind::Read(m, a) => write!(f, "read({m}, {a})"),
            SymKind::Unary(op, a) => {
                if a.precedence() < 9 {
                    write!(f, "{}({a})", op.symbol())
                } else {
                    write!(f, "{}{a}", op.symbol())
                }
            }
            SymKind::Binary(op, a, b) => {
                let p = op.precedence();
                if a.precedence() < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if b.precedence() <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl fmt::Display for SymMem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            MemKind::Base => f.write_str("mem"),
            MemKind::Write(m, a, v) => write!(f, "write({m}, {a}, {v})"),
        }
    }
}
