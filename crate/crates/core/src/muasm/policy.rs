// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::Reg;
use super::value::Domain;
use crate::error::{Error, Result};

/// Registers and memory addresses whose initial values are public.
///
/// The program counter is public implicitly: every run starts at label 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    regs: BTreeSet<Reg>,
    mem: BTreeSet<u64>,
}

impl Policy {
    pub fn new<R, M>(regs: R, mem: M) -> Self
    where
        R: IntoIterator<Item = Reg>,
        M: IntoIterator<Item = u64>,
    {
        Policy { regs: regs.into_iter().collect(), mem: mem.into_iter().collect() }
    }

    /// Policy over registers named in `names`.
    pub fn regs_only(names: &[&str]) -> Self {
        Policy::new(names.iter().map(|n| Reg::new(n)), [])
    }

    pub fn add_reg(&mut self, r: Reg) {
        self.regs.insert(r);
    }

    pub fn add_mem(&mut self, addr: u64) {
        self.mem.insert(addr);
    }

    pub fn regs(&self) -> impl Iterator<Item = &Reg> + '_ {
        self.regs.iter()
    }

    pub fn addrs(&self) -> impl Iterator<Item = u64> + '_ {
        self.mem.iter().copied()
    }

    pub fn has_reg(&self, r: &Reg) -> bool {
        r.is_pc() || self.regs.contains(r)
    }

    pub fn has_mem(&self, addr: u64) -> bool {
        self.mem.contains(&addr)
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty() && self.mem.is_empty()
    }

    /// Maps every address to its cell under the domain's addressing model.
    pub fn reduced(&self, dom: &Domain) -> Policy {
        Policy {
            regs: self.regs.clone(),
            mem: self.mem.iter().map(|a| dom.addr(dom.width.wrap(*a))).collect(),
        }
    }

    /// Parses `low reg NAME` / `low mem ADDR` lines. `ADDR` is a number or a
    /// name resolved through `symbols`.
    pub fn parse(text: &str, symbols: &BTreeMap<String, u64>) -> Result<Policy> {
        let mut policy = Policy::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["low", "reg", name] => {
                    policy.add_reg(Reg::new(name.trim_start_matches('%')));
                }
                ["low", "mem", addr] => {
                    let a = parse_number(addr)
                        .or_else(|| symbols.get(*addr).copied())
                        .ok_or_else(|| {
                            Error::parse(i + 1, 1, format!("unknown address or symbol `{addr}`"))
                        })?;
                    policy.add_mem(a);
                }
                _ => {
                    return Err(Error::parse(
                        i + 1,
                        1,
                        "expected `low reg NAME` or `low mem ADDR`",
                    ))
                }
            }
        }
        Ok(policy)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.regs {
            writeln!(f, "low reg {r}")?;
        }
        for a in &self.mem {
            writeln!(f, "low mem {a}")?;
        }
        Ok(())
    }
}

/// Decimal or `0x` hexadecimal literal.
pub(crate) fn parse_number(s: &str) -> Option<u64> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else {
        s.parse().ok()
    }
}
