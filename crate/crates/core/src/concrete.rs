// SPDX-License-Identifier: Apache-2.0

//! Non-speculative semantics.

use crate::error::ExecError;
use crate::muasm::{Configuration, Domain, Expr, Instr, Observation, Program, Trace, Value, Width};

pub const DEFAULT_FUEL: usize = 100_000;

/// Result of one non-speculative step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepResult {
    pub next: Configuration,
    pub obs: Trace,
}

/// Evaluates `e` in `cfg`. `end` is only produced by a literal `end`.
pub fn eval_expr(e: &Expr, cfg: &Configuration, w: Width) -> Result<Value, ExecError> {
    Ok(match e {
        Expr::Lit(Value::Word(n)) => Value::Word(w.wrap(*n)),
        Expr::Lit(Value::Bot) => Value::Bot,
        Expr::Reg(r) if r.is_pc() => match cfg.pc {
            Value::Word(n) => Value::Word(w.wrap(n)),
            Value::Bot => Value::Bot,
        },
        Expr::Reg(r) => Value::Word(w.wrap(cfg.regs.read(r)?)),
        Expr::Unary(op, a) => {
            let a = eval_word(a, cfg, w)?;
            Value::Word(op.apply(w, a))
        }
        Expr::Binary(op, a, b) => {
            let a = eval_word(a, cfg, w)?;
            let b = eval_word(b, cfg, w)?;
            Value::Word(op.apply(w, a, b))
        }
    })
}

fn eval_word(e: &Expr, cfg: &Configuration, w: Width) -> Result<u64, ExecError> {
    eval_expr(e, cfg, w)?.word().ok_or(ExecError::BotOperand)
}

fn assign(cfg: &mut Configuration, x: &crate::muasm::Reg, v: Value) -> Result<(), ExecError> {
    match v {
        Value::Word(n) => {
            cfg.regs.write(x.clone(), n);
            Ok(())
        }
        Value::Bot => Err(ExecError::BotAssigned(x.clone())),
    }
}

/// Performs one step in place and returns the emitted observation, if any.
///
/// A final configuration steps to itself without observations.
pub fn step_in_place(
    p: &Program,
    dom: &Domain,
    cfg: &mut Configuration,
) -> Result<Option<Observation>, ExecError> {
    let w = dom.width;
    let Some(ins) = p.get(cfg.pc) else {
        cfg.pc = Value::Bot;
        return Ok(None);
    };
    let next = cfg.pc.succ();
    let obs = match ins {
        Instr::Skip | Instr::Spbarr => None,
        Instr::Assign(x, e) => {
            let v = eval_expr(e, cfg, w)?;
            assign(cfg, x, v)?;
            None
        }
        Instr::CondAssign(x, e, c) => {
            if eval_word(c, cfg, w)? == 0 {
                let v = eval_expr(e, cfg, w)?;
                assign(cfg, x, v)?;
            }
            None
        }
        Instr::Load(x, e) => {
            let a = eval_word(e, cfg, w)?;
            let v = cfg.mem.read(dom.addr(a))?;
            cfg.regs.write(x.clone(), w.wrap(v));
            Some(Observation::Load(a))
        }
        Instr::Store(x, e) => {
            let a = eval_word(e, cfg, w)?;
            let v = eval_word(&Expr::Reg(x.clone()), cfg, w)?;
            cfg.mem.write(dom.addr(a), v);
            Some(Observation::Store(a))
        }
        Instr::Beqz(x, l) => {
            let target = if eval_word(&Expr::Reg(x.clone()), cfg, w)? == 0 { *l } else { next };
            cfg.pc = target;
            return Ok(Some(Observation::Pc(target)));
        }
        Instr::Jmp(e) => {
            let target = eval_expr(e, cfg, w)?;
            cfg.pc = target;
            return Ok(Some(Observation::Pc(target)));
        }
    };
    cfg.pc = next;
    Ok(obs)
}

pub fn step_nonspec(p: &Program, dom: &Domain, cfg: &Configuration) -> Result<StepResult, ExecError> {
    let mut next = cfg.clone();
    let obs = step_in_place(p, dom, &mut next)?;
    Ok(StepResult { next, obs: obs.into_iter().collect() })
}

/// Runs until the configuration is final.
pub fn run_nonspec(
    p: &Program,
    dom: &Domain,
    init: &Configuration,
    fuel: usize,
) -> Result<(Trace, Configuration), ExecError> {
    let mut cfg = init.clone();
    let mut trace = Vec::new();
    let mut steps = 0;
    while !cfg.is_final() {
        if steps == fuel {
            return Err(ExecError::FuelExhausted(fuel));
        }
        steps += 1;
        if let Some(o) = step_in_place(p, dom, &mut cfg)? {
            trace.push(o);
        }
    }
    Ok((trace, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::muasm::{parse_expr, parse_program, Reg};

    fn cfg_with(regs: &[(&str, u64)]) -> Configuration {
        let mut c = Configuration::default();
        for (r, v) in regs {
            c.regs.write(Reg::new(r), *v);
        }
        c
    }

    #[test]
    fn expression_evaluation() {
        let c = cfg_with(&[("x", 3), ("y", 7), ("size", 4)]);
        let w = Width::W64;
        assert_eq!(eval_expr(&parse_expr("5").unwrap(), &c, w), Ok(Value::Word(5)));
        assert_eq!(eval_expr(&parse_expr("x").unwrap(), &c, w), Ok(Value::Word(3)));
        assert_eq!(eval_expr(&parse_expr("y < size").unwrap(), &c, w), Ok(Value::Word(0)));
        assert_eq!(eval_expr(&parse_expr("0 - 1").unwrap(), &c, Width::new(3).unwrap()), Ok(Value::Word(7)));
    }

    #[test]
    fn single_steps() {
        let dom = Domain::default();
        let p = parse_program("0: skip\n1: load x, 10\n2: beqz z, 0").unwrap();
        let mut c = Configuration::default();
        c.mem.write(10, 42);
        let r = step_nonspec(&p, &dom, &c).unwrap();
        assert_eq!((r.next.pc, r.obs.len()), (Value::Word(1), 0));
        let r = step_nonspec(&p, &dom, &r.next).unwrap();
        assert_eq!(r.obs, vec![Observation::Load(10)]);
        assert_eq!(r.next.regs.get(&Reg::new("x")), Some(42));
        let r = step_nonspec(&p, &dom, &r.next).unwrap();
        assert_eq!((r.next.pc, r.obs.clone()), (Value::Word(0), vec![Observation::Pc(Value::Word(0))]));
    }

    #[test]
    fn skip_then_terminate() {
        let p = parse_program("0: skip").unwrap();
        let (t, fin) = run_nonspec(&p, &Domain::default(), &Configuration::default(), 10).unwrap();
        assert!(t.is_empty());
        assert!(fin.is_final());
    }

    #[test]
    fn fuel_bounds_loops() {
        let p = parse_program("0: jmp 0").unwrap();
        assert_eq!(
            run_nonspec(&p, &Domain::default(), &Configuration::default(), 50),
            Err(ExecError::FuelExhausted(50))
        );
    }

    #[test]
    fn conditional_assignment_fires_on_zero() {
        let p = parse_program("0: m <- c ? 9").unwrap();
        let dom = Domain::default();
        let (_, fin) = run_nonspec(&p, &dom, &cfg_with(&[("c", 0)]), 10).unwrap();
        assert_eq!(fin.regs.get(&Reg::new("m")), Some(9));
        let (_, fin) = run_nonspec(&p, &dom, &cfg_with(&[("c", 1)]), 10).unwrap();
        assert_eq!(fin.regs.get(&Reg::new("m")), Some(0));
    }

    #[test]
    fn bounded_memory_reduces_addresses() {
        let p = parse_program("0: store v, 9\n1: load x, 1").unwrap();
        let dom = Domain::tiny(4, 8).unwrap();
        let (t, fin) = run_nonspec(&p, &dom, &cfg_with(&[("v", 5)]), 10).unwrap();
        assert_eq!(t, vec![Observation::Store(9), Observation::Load(1)]);
        assert_eq!(fin.regs.get(&Reg::new("x")), Some(5));
    }
}
