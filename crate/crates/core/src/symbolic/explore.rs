// SPDX-License-Identifier: Apache-2.0

//! Concolic exploration of the symbolic always-mispredict semantics.
//!
//! Each run executes the concrete and the symbolic machine side by side from
//! a seed valuation; the concrete machine picks the symbolic successor. New
//! seeds come from negating branch decisions, deepest first.

use std::collections::HashSet;

use super::semantics::{SymAmConfig, SymConfig, SymMachine, SymObs, SymTrace};
use super::term::SymExpr;
use super::valuation::apply_trace;
use crate::concrete::eval_expr;
use crate::error::{ExecError, Result};
use crate::muasm::{Configuration, Domain, Expr, Instr, Program, Value};
use crate::smt::{Formula, Side, Solver, SolverResult};
use crate::speculative::am::{step_am, AmConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreLimits {
    /// Maximum number of runs, complete or abandoned.
    pub max_paths: usize,
    /// Maximum number of steps of a single run.
    pub max_steps: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits { max_paths: 25, max_steps: 10_000 }
    }
}

/// A complete symbolic run.
#[derive(Clone, Debug)]
pub struct SymbolicRun {
    pub trace: SymTrace,
    pub final_config: SymConfig,
    /// Distinct non-trivial path conditions, in order of first occurrence.
    pub path: Vec<SymExpr>,
    /// Valuation that drove the run.
    pub seed: Configuration,
}

#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub runs: Vec<SymbolicRun>,
    /// Whether every feasible run was found.
    pub complete: bool,
    /// Solver queries that ended without an answer.
    pub unknown: usize,
    /// Runs abandoned at the step limit.
    pub truncated: usize,
    pub queries: usize,
}

struct Decision {
    /// Number of path conditions before the decision.
    prefix: usize,
    alternatives: Vec<SymExpr>,
}

struct Run {
    trace: SymTrace,
    last: SymConfig,
    path: Vec<SymExpr>,
    decisions: Vec<Decision>,
    finished: bool,
}

fn jump_hint(p: &Program, dom: &Domain, c: &AmConfig) -> Option<u64> {
    if !c.stack.enabled_last() {
        return None;
    }
    match p.get(c.sigma.pc) {
        Some(Instr::Jmp(e)) if !matches!(e, Expr::Lit(Value::Bot)) => {
            eval_expr(e, &c.sigma, dom.width).ok().and_then(Value::word)
        }
        _ => None,
    }
}

fn concolic_run(
    m: &SymMachine<'_>,
    window: u64,
    seed: &Configuration,
    max_steps: usize,
) -> Result<Run> {
    let (p, dom) = (m.program, &m.domain);
    let mut conc = AmConfig::initial(seed.clone());
    let mut sym = SymAmConfig::initial();
    let mut concrete_trace = Vec::new();
    let mut run = Run { trace: Vec::new(), last: SymConfig::initial(), path: Vec::new(), decisions: Vec::new(), finished: false };
    let mut seen = HashSet::new();
    let mut steps = 0;
    while !sym.is_final() {
        if steps == max_steps {
            return Ok(run);
        }
        steps += 1;
        let hint = jump_hint(p, dom, &conc);
        let succs = m.step_am(window, &sym, hint)?;
        step_am(p, dom, window, &mut conc, &mut concrete_trace)?;
        let idx = succs
            .iter()
            .position(|s| s.next.sigma.pc == conc.sigma.pc && s.next.stack.len() == conc.stack.len())
            .ok_or_else(|| {
                ExecError::Divergence(format!("no symbolic successor reaches {}", conc.sigma.pc))
            })?;
        // Successor conditions are pairwise exclusive, so when the chosen one
        // already holds on the path no alternative is feasible.
        let implied = match succs[idx].obs.first() {
            Some(SymObs::SymPc(c)) => c.is_const() || seen.contains(c),
            _ => true,
        };
        if succs.len() > 1 && !implied {
            let alternatives = succs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .filter_map(|(_, s)| match s.obs.first() {
                    Some(SymObs::SymPc(c)) => Some(c.clone()),
                    _ => None,
                })
                .collect();
            run.decisions.push(Decision { prefix: run.path.len(), alternatives });
        }
        let chosen = succs.into_iter().nth(idx).expect("index in range");
        for o in &chosen.obs {
            if let SymObs::SymPc(c) = o {
                if !c.is_const() && seen.insert(c.clone()) {
                    run.path.push(c.clone());
                }
            }
        }
        run.trace.extend(chosen.obs);
        sym = chosen.next;
    }
    if apply_trace(seed, dom, &run.trace)? != concrete_trace {
        return Err(ExecError::Divergence("symbolic trace does not concretize to the concrete one".into()).into());
    }
    run.last = sym.sigma;
    run.finished = true;
    Ok(run)
}

struct Job {
    seed: Configuration,
    /// Decisions before this index are not negated again.
    fixed: usize,
}

/// Explores the symbolic always-mispredict runs of `p` with window `window`.
pub fn explore(
    p: &Program,
    dom: &Domain,
    window: u64,
    limits: ExploreLimits,
    solver: &dyn Solver,
) -> Result<Exploration> {
    let machine = SymMachine::new(p, *dom);
    let mut out = Exploration { complete: true, ..Exploration::default() };
    let mut jobs = vec![Job { seed: Configuration::default(), fixed: 0 }];
    while let Some(job) = jobs.pop() {
        if out.runs.len() + out.truncated >= limits.max_paths {
            out.complete = false;
            break;
        }
        let run = concolic_run(&machine, window, &job.seed, limits.max_steps)?;
        for (j, d) in run.decisions.iter().enumerate().skip(job.fixed) {
            let prefix = run.path[..d.prefix].iter().map(|c| Formula::nonzero(Side::Single, c.clone()));
            for alt in &d.alternatives {
                let q = Formula::and(prefix.clone().chain([Formula::nonzero(Side::Single, alt.clone())]));
                out.queries += 1;
                match solver.check(&q, dom)? {
                    SolverResult::Sat(model) => jobs.push(Job {
                        seed: model.valuation(Side::Single).clone(),
                        fixed: j + 1,
                    }),
                    SolverResult::Unsat => {}
                    SolverResult::Unknown(why) => {
                        log::warn!("path query abandoned: {why}");
                        out.unknown += 1;
                        out.complete = false;
                    }
                }
            }
        }
        if run.finished {
            log::debug!("run {} with {} path conditions", out.runs.len(), run.path.len());
            out.runs.push(SymbolicRun {
                trace: run.trace,
                final_config: run.last,
                path: run.path,
                seed: job.seed,
            });
        } else {
            log::warn!("run abandoned after {} steps", limits.max_steps);
            out.truncated += 1;
            out.complete = false;
        }
    }
    Ok(out)
}
