// SPDX-License-Identifier: Apache-2.0

//! Self-composed constraints over two copies of the initial state.

use crate::muasm::{Domain, Policy};
use crate::smt::{Bv, Formula, Side};
use crate::symbolic::{SymExpr, SymMem, SymObs};

/// Every condition holds on both copies.
pub fn path_both(conds: &[SymExpr]) -> Formula {
    Formula::and(
        conds
            .iter()
            .flat_map(|c| [Formula::nonzero(Side::First, c.clone()), Formula::nonzero(Side::Second, c.clone())]),
    )
}

fn same(e: &SymExpr) -> Formula {
    Formula::eq(Bv::new(Side::First, e.clone()), Bv::new(Side::Second, e.clone()))
}

/// Both copies agree on the public registers and memory cells.
pub fn policy_equivalence(policy: &Policy, dom: &Domain) -> Formula {
    let reduced = policy.reduced(dom);
    let regs = reduced.regs().filter(|r| !r.is_pc()).map(|r| same(&SymExpr::var(r.clone())));
    let cells = reduced
        .addrs()
        .map(|a| same(&SymExpr::read(SymMem::base(), SymExpr::constant(a, dom.width))));
    Formula::and(regs.chain(cells).collect::<Vec<_>>())
}

/// Addresses of the memory observations of a symbolic trace.
pub fn access_addresses(trace: &[SymObs]) -> impl Iterator<Item = (usize, &SymExpr)> {
    trace.iter().enumerate().filter_map(|(i, o)| match o {
        SymObs::Load(e) | SymObs::Store(e) => Some((i, e)),
        _ => None,
    })
}

/// Both copies produce the same memory observations.
pub fn same_accesses(trace: &[SymObs]) -> Formula {
    Formula::and(access_addresses(trace).map(|(_, e)| same(e)).collect::<Vec<_>>())
}

/// The copies differ on at least one memory observation.
pub fn some_access_differs(trace: &[SymObs]) -> Formula {
    Formula::or(access_addresses(trace).map(|(_, e)| Formula::not(same(e))).collect::<Vec<_>>())
}

/// The condition holds on exactly one copy.
pub fn condition_differs(c: &SymExpr) -> Formula {
    Formula::not(Formula::iff(
        Formula::nonzero(Side::First, c.clone()),
        Formula::nonzero(Side::Second, c.clone()),
    ))
}
