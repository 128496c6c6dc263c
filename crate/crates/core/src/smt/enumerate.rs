// SPDX-License-Identifier: Apache-2.0

//! Exhaustive model search over tiny domains.
//!
//! Inputs are assigned lazily: a formula is evaluated over partial
//! valuations and only the inputs it actually reads are branched on, so the
//! search space is the product of the relevant inputs only.

use super::{Formula, Model, SideEvaluator, Solver, SolverResult};
use crate::error::{Error, ExecError, Result};
use crate::muasm::{Configuration, Domain};

/// Largest word width accepted by the enumerator.
pub const MAX_BITS: u32 = 4;

#[derive(Clone, Copy, Debug)]
pub struct Enumerator {
    /// Maximum number of evaluated assignments per query.
    pub budget: u64,
}

impl Default for Enumerator {
    fn default() -> Self {
        Enumerator { budget: 1 << 24 }
    }
}

impl Enumerator {
    /// Up to `limit` satisfying models over pairwise disjoint parts of the
    /// input space. Unconstrained inputs are zero.
    pub fn models(&self, f: &Formula, dom: &Domain, limit: usize) -> Result<Vec<Model>> {
        if dom.width.bits() > MAX_BITS {
            return Err(Error::DomainTooLarge(format!(
                "enumeration supports at most {MAX_BITS}-bit words, got {}",
                dom.width.bits()
            )));
        }
        let mut search = Search { dom, budget: self.budget, leaves: 0, limit, found: Vec::new() };
        search.run(f, [Configuration::partial(), Configuration::partial()])?;
        Ok(search.found)
    }
}

struct Search<'d> {
    dom: &'d Domain,
    budget: u64,
    leaves: u64,
    limit: usize,
    found: Vec<Model>,
}

impl Search<'_> {
    fn run(&mut self, f: &Formula, sides: [Configuration; 2]) -> Result<()> {
        let mut stack = vec![sides];
        while let Some(sides) = stack.pop() {
            if self.found.len() >= self.limit {
                break;
            }
            self.leaves += 1;
            if self.leaves > self.budget {
                return Err(Error::SpaceTooLarge(format!(
                    "more than {} assignments explored",
                    self.budget
                )));
            }
            let outcome = SideEvaluator::new(&sides, self.dom).formula(f);
            match outcome {
                Ok(true) => {
                    let [a, b] = sides;
                    self.found.push(Model::new(a.completed(0), b.completed(0)));
                }
                Ok(false) => {}
                Err((side, ExecError::Undefined(input))) => {
                    // Push in reverse so that smaller values are tried first.
                    for v in (0..=self.dom.width.mask()).rev() {
                        let mut m = Model { sides: sides.clone() };
                        m.set(side, &input, v);
                        stack.push(m.sides);
                    }
                }
                Err((_, e)) => return Err(Error::Exec(e)),
            }
        }
        Ok(())
    }
}

impl Solver for Enumerator {
    fn check(&self, f: &Formula, dom: &Domain) -> Result<SolverResult> {
        Ok(match self.models(f, dom, 1)?.pop() {
            Some(m) => SolverResult::Sat(m),
            None => SolverResult::Unsat,
        })
    }

    fn name(&self) -> String {
        "enumeration".into()
    }
}
