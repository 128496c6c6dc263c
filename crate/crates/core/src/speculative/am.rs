// SPDX-License-Identifier: Apache-2.0

use super::state::{SpecEntry, SpecStack};
use crate::concrete::step_in_place;
use crate::error::ExecError;
use crate::muasm::{Configuration, Domain, Instr, Observation, Program, Trace, Value};

/// Configuration of the always-mispredict semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmConfig {
    pub ctr: u64,
    pub sigma: Configuration,
    pub stack: SpecStack<Configuration>,
}

impl AmConfig {
    pub fn initial(sigma: Configuration) -> Self {
        AmConfig { ctr: 0, sigma, stack: SpecStack::new() }
    }

    pub fn is_final(&self) -> bool {
        self.stack.is_empty() && self.sigma.is_final()
    }
}

/// Window of a transaction started under `stack`: `min(w, wndw(stack) - 1)`.
pub fn nested_window(stack_window: Option<u64>, w: u64) -> u64 {
    match stack_window {
        None => w,
        Some(top) => w.min(top.saturating_sub(1)),
    }
}

/// One step of the always-mispredict semantics with window `w`.
pub fn step_am(
    p: &Program,
    dom: &Domain,
    w: u64,
    c: &mut AmConfig,
    out: &mut Trace,
) -> Result<(), ExecError> {
    if !c.stack.enabled_last() {
        let entry = c.stack.0.pop().expect("a disabled stack is non-empty");
        let mut resolved = entry.snapshot;
        step_in_place(p, dom, &mut resolved)?;
        out.push(Observation::Rollback(entry.id));
        out.push(Observation::Pc(resolved.pc));
        c.sigma = resolved;
        return Ok(());
    }
    match (c.sigma.pc, p.get(c.sigma.pc)) {
        (Value::Word(label), Some(Instr::Beqz(x, target))) => {
            let taken = c.sigma.regs.read(x)? & dom.width.mask() == 0;
            let mispredicted = if taken { Value::Word(label + 1) } else { *target };
            let remaining = nested_window(c.stack.wndw(), w);
            let id = c.ctr;
            c.stack.decr_last();
            c.stack.push(SpecEntry {
                snapshot: c.sigma.clone(),
                id,
                remaining,
                predicted: mispredicted,
            });
            c.sigma.pc = mispredicted;
            c.ctr += 1;
            out.push(Observation::Start(id));
            out.push(Observation::Pc(mispredicted));
        }
        (_, ins) => {
            let barrier = matches!(ins, Some(Instr::Spbarr));
            if let Some(o) = step_in_place(p, dom, &mut c.sigma)? {
                out.push(o);
            }
            if barrier {
                c.stack.zeroes_last();
            } else {
                c.stack.decr_last();
            }
        }
    }
    Ok(())
}

/// Runs the always-mispredict semantics to completion.
pub fn run_am(
    p: &Program,
    dom: &Domain,
    w: u64,
    init: &Configuration,
    fuel: usize,
) -> Result<(Trace, Configuration), ExecError> {
    let mut c = AmConfig::initial(init.clone());
    let mut trace = Vec::new();
    let mut steps = 0;
    while !c.is_final() {
        if steps == fuel {
            return Err(ExecError::FuelExhausted(fuel));
        }
        steps += 1;
        step_am(p, dom, w, &mut c, &mut trace)?;
    }
    Ok((trace, c.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::muasm::{parse_program, Reg};

    fn init(regs: &[(&str, u64)]) -> Configuration {
        let mut c = Configuration::default();
        for (r, v) in regs {
            c.regs.write(Reg::new(r), *v);
        }
        c
    }

    #[test]
    fn zero_window_rolls_back_immediately() {
        let p = parse_program("0: beqz x, 3\n1: load a, 7\n2: skip\n3: skip").unwrap();
        let (t, _) = run_am(&p, &Domain::default(), 0, &init(&[]), 100).unwrap();
        assert_eq!(
            t,
            vec![
                Observation::Start(0),
                Observation::Pc(Value::Word(1)),
                Observation::Rollback(0),
                Observation::Pc(Value::Word(3)),
            ]
        );
    }

    #[test]
    fn inner_rollback_keeps_outer_window() {
        // Both branches fall through when taken; the mispredicted paths go forward.
        let p = parse_program("0: beqz x, 5\n1: beqz x, 4\n2: skip\n3: skip\n4: skip\n5: skip").unwrap();
        let dom = Domain::default();
        let mut c = AmConfig::initial(init(&[("x", 1)]));
        let mut t = Vec::new();
        step_am(&p, &dom, 10, &mut c, &mut t).unwrap();
        assert_eq!(c.stack.remaining(), vec![10]);
        assert_eq!(c.sigma.pc, Value::Word(5));
        let p = parse_program("0: beqz x, 2\n1: skip\n2: beqz x, 4\n3: skip\n4: skip").unwrap();
        let mut c = AmConfig::initial(init(&[("x", 1)]));
        step_am(&p, &dom, 10, &mut c, &mut t).unwrap();
        step_am(&p, &dom, 10, &mut c, &mut t).unwrap();
        // Outer window 10, nested window min(10, 10 - 1) = 9; outer decremented once.
        assert_eq!(c.stack.remaining(), vec![9, 9]);
        for _ in 0..9 {
            step_am(&p, &dom, 10, &mut c, &mut t).unwrap();
        }
        assert_eq!(c.stack.remaining(), vec![9, 0]);
        step_am(&p, &dom, 10, &mut c, &mut t).unwrap();
        assert_eq!(c.stack.remaining(), vec![9]);
        assert_eq!(t.last(), Some(&Observation::Pc(Value::Word(3))));
    }
}
