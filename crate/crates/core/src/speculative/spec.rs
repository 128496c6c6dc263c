// SPDX-License-Identifier: Apache-2.0

use super::oracle::{HistoryEntry, PredictionOracle};
use super::state::{SpecEntry, SpecStack};
use crate::concrete::step_in_place;
use crate::error::ExecError;
use crate::muasm::{Configuration, Domain, Instr, Observation, Program, Trace, Value};

/// Configuration of the oracle-driven speculative semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtConfig {
    pub ctr: u64,
    pub sigma: Configuration,
    pub stack: SpecStack<Configuration>,
    pub history: Vec<HistoryEntry>,
}

impl ExtConfig {
    pub fn initial(sigma: Configuration) -> Self {
        ExtConfig { ctr: 0, sigma, stack: SpecStack::new(), history: Vec::new() }
    }

    pub fn is_final(&self) -> bool {
        self.stack.is_empty() && self.sigma.is_final()
    }
}

/// One step of the speculative semantics; observations are appended to `out`.
pub fn step_spec(
    p: &Program,
    dom: &Domain,
    oracle: &dyn PredictionOracle,
    c: &mut ExtConfig,
    out: &mut Trace,
) -> Result<(), ExecError> {
    // Commit or rollback the youngest transaction whose window is exhausted.
    if let Some(i) = c.stack.youngest_exhausted() {
        let entry = &c.stack.0[i];
        let mut resolved = entry.snapshot.clone();
        step_in_place(p, dom, &mut resolved)?;
        let (id, predicted, branch) = (entry.id, entry.predicted, entry.snapshot.pc);
        c.history.push(HistoryEntry { branch, id, target: resolved.pc });
        if predicted == resolved.pc {
            c.stack.0.remove(i);
            out.push(Observation::Commit(id));
        } else {
            c.stack.0.truncate(i);
            out.push(Observation::Rollback(id));
            out.push(Observation::Pc(resolved.pc));
            c.sigma = resolved;
        }
        return Ok(());
    }
    match (c.sigma.pc, p.get(c.sigma.pc)) {
        (Value::Word(label), Some(Instr::Beqz(_, target))) => {
            let (predicted, window) = oracle.predict(p, &c.history, label);
            if predicted != Value::Word(label + 1) && predicted != *target {
                return Err(ExecError::OracleContract(format!(
                    "predicted {predicted} for the branch at {label}"
                )));
            }
            if window > oracle.max_window() {
                return Err(ExecError::OracleContract(format!(
                    "window {window} exceeds the declared maximum {}",
                    oracle.max_window()
                )));
            }
            let id = c.ctr;
            c.stack.decr();
            c.stack.push(SpecEntry { snapshot: c.sigma.clone(), id, remaining: window, predicted });
            c.sigma.pc = predicted;
            c.ctr += 1;
            c.history.push(HistoryEntry { branch: Value::Word(label), id, target: predicted });
            out.push(Observation::Start(id));
            out.push(Observation::Pc(predicted));
        }
        (_, ins) => {
            let barrier = matches!(ins, Some(Instr::Spbarr));
            if let Some(o) = step_in_place(p, dom, &mut c.sigma)? {
                out.push(o);
            }
            if barrier {
                c.stack.zeroes();
            } else {
                c.stack.decr();
            }
        }
    }
    Ok(())
}

/// Runs the speculative semantics from `init` until no transaction is pending
/// and the configuration is final. Returns the trace and final configuration.
pub fn run_spec(
    p: &Program,
    dom: &Domain,
    oracle: &dyn PredictionOracle,
    init: &Configuration,
    fuel: usize,
) -> Result<(Trace, Configuration), ExecError> {
    let mut c = ExtConfig::initial(init.clone());
    let mut trace = Vec::new();
    let mut steps = 0;
    while !c.is_final() {
        if steps == fuel {
            return Err(ExecError::FuelExhausted(fuel));
        }
        steps += 1;
        step_spec(p, dom, oracle, &mut c, &mut trace)?;
    }
    Ok((trace, c.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concrete::run_nonspec;
    use crate::muasm::{parse_program, Reg};
    use crate::speculative::oracle::{AlwaysNotTaken, AlwaysTaken, Btfnt};

    const EXAMPLE1: &str = "0: x <- y < size
1: beqz x, end
2: load z, A + y
3: z <- z * 512
4: load w, B + z
5: temp <- temp & w";

    fn init(regs: &[(&str, u64)]) -> Configuration {
        let mut c = Configuration::default();
        for (r, v) in regs {
            c.regs.write(Reg::new(r), *v);
        }
        c
    }

    #[test]
    fn btfnt_out_of_bounds_run() {
        let p = parse_program(EXAMPLE1).unwrap();
        let mut sigma = init(&[("y", 5), ("size", 2), ("A", 100), ("B", 1000)]);
        sigma.mem.write(105, 3);
        let (t, fin) = run_spec(&p, &Domain::default(), &Btfnt { window: 3 }, &sigma, 100).unwrap();
        assert_eq!(
            t,
            vec![
                Observation::Start(0),
                Observation::Pc(Value::Word(2)),
                Observation::Load(105),
                Observation::Load(1000 + 3 * 512),
                Observation::Rollback(0),
                Observation::Pc(Value::Bot),
            ]
        );
        assert!(fin.is_final());
    }

    #[test]
    fn branch_free_program_matches_nonspec() {
        let p = parse_program("0: x <- 4\n1: load y, x\n2: store y, x + 1").unwrap();
        let dom = Domain::default();
        let s = Configuration::default();
        let spec = run_spec(&p, &dom, &Btfnt { window: 5 }, &s, 100).unwrap();
        assert_eq!(spec, run_nonspec(&p, &dom, &s, 100).unwrap());
    }

    #[test]
    fn correct_prediction_commits() {
        let p = parse_program("0: beqz x, 3\n1: load a, 7\n2: skip\n3: load b, 9").unwrap();
        let dom = Domain::default();
        let s = init(&[("x", 1)]);
        let (t, _) = run_spec(&p, &dom, &AlwaysNotTaken { window: 2 }, &s, 100).unwrap();
        assert_eq!(
            t,
            vec![
                Observation::Start(0),
                Observation::Pc(Value::Word(1)),
                Observation::Load(7),
                Observation::Commit(0),
                Observation::Load(9),
            ]
        );
    }

    #[test]
    fn barrier_resolves_pending_transactions() {
        let p = parse_program("0: beqz x, 3\n1: spbarr\n2: load a, 7\n3: skip").unwrap();
        let (t, _) = run_spec(&p, &Domain::default(), &AlwaysNotTaken { window: 9 }, &init(&[]), 100).unwrap();
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
    fn oracle_contract_is_checked() {
        #[derive(Debug)]
        struct Liar;
        impl PredictionOracle for Liar {
            fn predict(&self, _: &Program, _: &[HistoryEntry], _: u64) -> (Value, u64) {
                (Value::Word(42), 1)
            }
            fn max_window(&self) -> u64 {
                1
            }
        }
        let p = parse_program("0: beqz x, 3").unwrap();
        let r = run_spec(&p, &Domain::default(), &Liar, &init(&[]), 10);
        assert!(matches!(r, Err(ExecError::OracleContract(_))));
        let r = run_spec(&p, &Domain::default(), &AlwaysTaken { window: 1 }, &init(&[]), 10);
        assert!(r.is_ok());
    }
}
