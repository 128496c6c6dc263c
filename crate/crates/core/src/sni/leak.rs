// SPDX-License-Identifier: Apache-2.0

//! Leak checks on symbolic runs and the overall verification procedure.

use rayon::prelude::*;

use super::formula::{
    access_addresses, condition_differs, path_both, policy_equivalence, same_accesses,
    some_access_differs,
};
use super::projection::project;
use super::witness::{LeakKind, Witness};
use crate::error::{Error, Result};
use crate::muasm::{Domain, Policy, Program};
use crate::smt::{Formula, Model, Side, Solver, SolverResult};
use crate::speculative::run_am;
use crate::symbolic::{apply_expr, explore, path_condition, ExploreLimits, SymObs, SymbolicRun};

/// Outcome of one leak check on one run.
#[derive(Clone, Debug)]
pub enum LeakCheck {
    Leak(LeakKind, Model),
    NoLeak,
    Unknown(String),
}

/// Query for a memory leak: indistinguishable inputs, same path and same
/// non-speculative accesses, but a different speculative access. `None`
/// when the speculative projection has no memory access.
pub fn mem_leak_formula(run: &SymbolicRun, policy: &Policy, dom: &Domain) -> Result<Option<Formula>> {
    let (nse, se) = project(&run.trace)?;
    if access_addresses(&se).next().is_none() {
        return Ok(None);
    }
    Ok(Some(Formula::and([
        path_both(&path_condition(&run.trace)),
        policy_equivalence(policy, dom),
        same_accesses(&nse),
        some_access_differs(&se),
    ])))
}

/// Queries for control leaks, one per non-constant branch condition of the
/// speculative projection, shortest prefix first. Each is paired with the
/// length of the speculative prefix before the condition.
pub fn ctrl_leak_formulas(run: &SymbolicRun, policy: &Policy, dom: &Domain) -> Result<Vec<(usize, Formula)>> {
    let (nse, se) = project(&run.trace)?;
    let base = Formula::and([policy_equivalence(policy, dom), same_accesses(&nse)]);
    let mut out = Vec::new();
    for (k, o) in se.iter().enumerate() {
        let SymObs::SymPc(c) = o else { continue };
        if c.is_const() {
            continue;
        }
        let mut prefix = nse.clone();
        prefix.extend_from_slice(&se[..k]);
        out.push((k, Formula::and([path_both(&path_condition(&prefix)), base.clone(), condition_differs(c)])));
    }
    Ok(out)
}

/// Memory leak check of one run.
pub fn mem_leak(run: &SymbolicRun, policy: &Policy, dom: &Domain, solver: &dyn Solver) -> Result<LeakCheck> {
    let Some(f) = mem_leak_formula(run, policy, dom)? else {
        return Ok(LeakCheck::NoLeak);
    };
    match solver.check(&f, dom)? {
        SolverResult::Sat(m) => {
            let se = project(&run.trace)?.1;
            let (a, b) = (m.valuation(Side::First), m.valuation(Side::Second));
            let mut obs_index = None;
            for (i, e) in access_addresses(&se) {
                if apply_expr(a, dom, e)? != apply_expr(b, dom, e)? {
                    obs_index = Some(i);
                    break;
                }
            }
            let obs_index = obs_index.ok_or_else(|| Error::Solver("model does not separate any access".into()))?;
            Ok(LeakCheck::Leak(LeakKind::Memory { obs_index }, m))
        }
        SolverResult::Unsat => Ok(LeakCheck::NoLeak),
        SolverResult::Unknown(why) => Ok(LeakCheck::Unknown(why)),
    }
}

/// Control leak check of one run: the first speculative branch condition
/// that indistinguishable inputs with equal non-speculative behaviour can
/// resolve differently.
pub fn ctrl_leak(run: &SymbolicRun, policy: &Policy, dom: &Domain, solver: &dyn Solver) -> Result<LeakCheck> {
    let mut unknown = None;
    for (k, f) in ctrl_leak_formulas(run, policy, dom)? {
        match solver.check(&f, dom)? {
            SolverResult::Sat(m) => return Ok(LeakCheck::Leak(LeakKind::Control { prefix_len: k }, m)),
            SolverResult::Unsat => {}
            SolverResult::Unknown(why) => unknown = unknown.or(Some(why)),
        }
    }
    Ok(match unknown {
        Some(why) => LeakCheck::Unknown(why),
        None => LeakCheck::NoLeak,
    })
}

/// Parameters of the verification procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Speculative window of the always-mispredict semantics.
    pub window: u64,
    pub explore: ExploreLimits,
    /// Worker threads for the per-run checks; 1 checks sequentially.
    pub jobs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { window: 200, explore: ExploreLimits::default(), jobs: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Secure,
    Insecure(Box<Witness>),
    Inconclusive(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Secure => "SECURE",
            Verdict::Insecure(_) => "INSECURE",
            Verdict::Inconclusive(_) => "INCONCLUSIVE",
        }
    }

    pub fn is_secure(&self) -> bool {
        matches!(self, Verdict::Secure)
    }

    pub fn is_insecure(&self) -> bool {
        matches!(self, Verdict::Insecure(_))
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub verdict: Verdict,
    pub runs: usize,
    pub complete: bool,
    pub unknown: usize,
    pub truncated: usize,
}

fn check_run(run: &SymbolicRun, policy: &Policy, dom: &Domain, solver: &dyn Solver) -> Result<LeakCheck> {
    match mem_leak(run, policy, dom, solver)? {
        LeakCheck::Leak(k, m) => Ok(LeakCheck::Leak(k, m)),
        mem => match ctrl_leak(run, policy, dom, solver)? {
            LeakCheck::NoLeak => Ok(mem),
            other => Ok(other),
        },
    }
}

/// Decides speculative non-interference of `p` under `policy`.
///
/// A witness is reported whenever one is found. Without a witness the
/// program is secure only if exploration was complete and every query was
/// answered.
pub fn spectector(
    p: &Program,
    policy: &Policy,
    dom: &Domain,
    limits: &Limits,
    solver: &dyn Solver,
) -> Result<Report> {
    let exploration = explore(p, dom, limits.window, limits.explore, solver)?;
    let check = |run: &SymbolicRun| check_run(run, policy, dom, solver);
    let checks: Vec<Result<LeakCheck>> = if limits.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(limits.jobs)
            .build()
            .map_err(|e| Error::Solver(format!("cannot start worker threads: {e}")))?;
        pool.install(|| exploration.runs.par_iter().map(check).collect())
    } else {
        let mut out = Vec::new();
        for run in &exploration.runs {
            let r = check(run);
            let leak = matches!(r, Ok(LeakCheck::Leak(..)));
            out.push(r);
            if leak {
                break;
            }
        }
        out
    };
    let mut unknown = exploration.unknown;
    let mut verdict = None;
    for (i, r) in checks.into_iter().enumerate() {
        match r? {
            LeakCheck::Leak(kind, model) => {
                verdict = Some(Verdict::Insecure(Box::new(witness(p, dom, limits, i, kind, &model)?)));
                break;
            }
            LeakCheck::NoLeak => {}
            LeakCheck::Unknown(why) => {
                log::warn!("leak query on run {i} abandoned: {why}");
                unknown += 1;
            }
        }
    }
    let verdict = verdict.unwrap_or_else(|| {
        if !exploration.complete {
            Verdict::Inconclusive(format!(
                "exploration incomplete: {} runs, {} abandoned, {} unanswered path queries",
                exploration.runs.len(),
                exploration.truncated,
                exploration.unknown
            ))
        } else if unknown > 0 {
            Verdict::Inconclusive(format!("{unknown} leak queries unanswered"))
        } else {
            Verdict::Secure
        }
    });
    Ok(Report {
        verdict,
        runs: exploration.runs.len(),
        complete: exploration.complete,
        unknown,
        truncated: exploration.truncated,
    })
}

fn witness(p: &Program, dom: &Domain, limits: &Limits, run_index: usize, kind: LeakKind, m: &Model) -> Result<Witness> {
    let fuel = limits.explore.max_steps.saturating_add(1);
    let first = m.valuation(Side::First).clone();
    let second = m.valuation(Side::Second).clone();
    let (t1, _) = run_am(p, dom, limits.window, &first, fuel)?;
    let (t2, _) = run_am(p, dom, limits.window, &second, fuel)?;
    Ok(Witness { run_index, kind, first, second, traces: [t1, t2] })
}
