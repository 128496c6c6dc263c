// SPDX-License-Identifier: Apache-2.0

//! Exhaustive speculative non-interference check for tiny domains.
//!
//! Independent of the symbolic machinery: it enumerates initial
//! configurations, runs the concrete non-speculative and always-mispredict
//! semantics, and compares traces of indistinguishable pairs directly.

use std::collections::HashMap;

use crate::error::{Error, ExecError, Result};
use crate::muasm::{Configuration, Domain, Input, Policy, Program, Trace};
use crate::speculative::run_am;
use crate::concrete::run_nonspec;

pub const MAX_BITS: u32 = 4;
pub const MAX_CELLS: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteLimits {
    pub window: u64,
    /// Step limit of every concrete run.
    pub fuel: usize,
    /// Maximum number of partial configurations visited.
    pub budget: u64,
}

impl Default for BruteLimits {
    fn default() -> Self {
        BruteLimits { window: 200, fuel: 10_000, budget: 1 << 22 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum BruteVerdict {
    Secure,
    Insecure { first: Configuration, second: Configuration, traces: [Trace; 2] },
}

impl BruteVerdict {
    pub fn is_secure(&self) -> bool {
        matches!(self, BruteVerdict::Secure)
    }
}

struct Leaf {
    cfg: Configuration,
    am: Trace,
}

/// Decides speculative non-interference by enumeration. Only the inputs a
/// run actually reads are enumerated.
pub fn brute_force_sni(p: &Program, policy: &Policy, dom: &Domain, limits: &BruteLimits) -> Result<BruteVerdict> {
    if dom.width.bits() > MAX_BITS {
        return Err(Error::DomainTooLarge(format!("at most {MAX_BITS}-bit words")));
    }
    if dom.cell_count().is_none_or(|c| c > MAX_CELLS) {
        return Err(Error::DomainTooLarge(format!("at most {MAX_CELLS} memory cells")));
    }
    let mask = dom.width.mask();
    let mut groups: HashMap<Trace, Vec<Leaf>> = HashMap::new();
    let mut stack = vec![Configuration::partial()];
    let mut visited = 0u64;
    while let Some(cfg) = stack.pop() {
        visited += 1;
        if visited > limits.budget {
            return Err(Error::SpaceTooLarge(format!("more than {} partial inputs", limits.budget)));
        }
        let runs = run_nonspec(p, dom, &cfg, limits.fuel)
            .and_then(|(ns, _)| run_am(p, dom, limits.window, &cfg, limits.fuel).map(|(am, _)| (ns, am)));
        match runs {
            Ok((ns, am)) => groups.entry(ns).or_default().push(Leaf { cfg, am }),
            Err(ExecError::Undefined(input)) => {
                for v in 0..=mask {
                    let mut next = cfg.clone();
                    next.set(&input, v);
                    stack.push(next);
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    let reduced = policy.reduced(dom);
    let low: Vec<Input> = reduced
        .regs()
        .filter(|r| !r.is_pc())
        .map(|r| Input::Reg(r.clone()))
        .chain(reduced.addrs().map(Input::Mem))
        .collect();
    // Iterate groups in a fixed order so that witnesses are reproducible.
    let mut keys: Vec<&Trace> = groups.keys().collect();
    keys.sort();
    for ns in keys {
        let leaves = &groups[ns];
        let relevant: Vec<&Input> = low.iter().filter(|i| leaves.iter().any(|l| l.cfg.get(i).is_some())).collect();
        let mut seen: HashMap<Vec<u64>, (usize, Configuration)> = HashMap::new();
        for (li, leaf) in leaves.iter().enumerate() {
            let free: Vec<&Input> = relevant.iter().copied().filter(|i| leaf.cfg.get(i).is_none()).collect();
            let total = (mask + 1).checked_pow(free.len() as u32).ok_or_else(|| {
                Error::SpaceTooLarge("too many public inputs".into())
            })?;
            for n in 0..total {
                let mut cfg = leaf.cfg.clone();
                let mut rest = n;
                for i in &free {
                    cfg.set(i, rest & mask);
                    rest >>= dom.width.bits();
                }
                let key: Vec<u64> = relevant.iter().map(|i| cfg.get(i).expect("assigned")).collect();
                match seen.get(&key) {
                    Some((lj, other)) if leaves[*lj].am != leaf.am => {
                        return Ok(BruteVerdict::Insecure {
                            first: other.clone().completed(0),
                            second: cfg.completed(0),
                            traces: [leaves[*lj].am.clone(), leaf.am.clone()],
                        });
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(key, (li, cfg));
                    }
                }
            }
        }
    }
    Ok(BruteVerdict::Secure)
}
