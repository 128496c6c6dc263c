// SPDX-License-Identifier: Apache-2.0

//! The symbolic checker against independent oracles: exhaustive enumeration
//! of concrete runs and a second SMT solver.

mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specleak_core::smt::{Enumerator, Solver, SolverResult};
use specleak_core::sni::{brute_force_sni, BruteLimits, BruteVerdict, Limits, Verdict};
use specleak_core::{spectector, Domain};

fn same_verdict(v: &Verdict, b: &BruteVerdict) -> bool {
    match v {
        Verdict::Secure => b.is_secure(),
        Verdict::Insecure(_) => !b.is_secure(),
        Verdict::Inconclusive(_) => true,
    }
}

#[test]
fn fixture_verdicts_match_exhaustive_check() {
    for f in FIXTURES {
        let (p, pol, dom) = (f.program(), f.policy(), tiny());
        let r = spectector(&p, &pol, &dom, &Limits { window: f.window, ..Limits::default() }, &Enumerator::default()).unwrap();
        let b = brute_force_sni(&p, &pol, &dom, &BruteLimits { window: f.window, ..BruteLimits::default() }).unwrap();
        assert!(!matches!(r.verdict, Verdict::Inconclusive(_)), "{}: {:?}", f.name, r.verdict);
        assert!(same_verdict(&r.verdict, &b), "{}: {} vs {b:?}", f.name, r.verdict.label());
        if let Some(want) = f.expected {
            assert_eq!(r.verdict.label(), want, "{}", f.name);
        }
    }
}

#[test]
fn witnesses_are_genuine() {
    for f in FIXTURES {
        let (p, pol, dom) = (f.program(), f.policy(), tiny());
        let r = spectector(&p, &pol, &dom, &Limits { window: f.window, ..Limits::default() }, &Enumerator::default()).unwrap();
        if let Verdict::Insecure(w) = r.verdict {
            use specleak_core::concrete::run_nonspec;
            use specleak_core::muasm::config::indistinguishable;
            assert!(indistinguishable(&w.first, &w.second, &pol), "{}", f.name);
            let ns1 = run_nonspec(&p, &dom, &w.first, 10_000).unwrap().0;
            let ns2 = run_nonspec(&p, &dom, &w.second, 10_000).unwrap().0;
            assert_eq!(ns1, ns2, "{}", f.name);
            assert_ne!(w.traces[0], w.traces[1], "{}", f.name);
        }
    }
}

#[test]
fn random_programs_match_exhaustive_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let dom = Domain::tiny(3, 4).unwrap();
    let mut decided = 0;
    for _ in 0..150 {
        let p = random_program(&mut rng, 8, 2);
        let pol = random_policy(&mut rng);
        let w = [1, 2, 4][decided % 3];
        let small = Enumerator { budget: 1 << 20 };
        let r = match spectector(&p, &pol, &dom, &Limits { window: w, ..Limits::default() }, &small) {
            Ok(r) => r,
            Err(e) if is_domain_error(&e) => continue,
            Err(e) => panic!("{e}"),
        };
        let b = match brute_force_sni(&p, &pol, &dom, &BruteLimits { window: w, ..BruteLimits::default() }) {
            Ok(b) => b,
            Err(e) if is_domain_error(&e) => continue,
            Err(e) => panic!("{e}"),
        };
        if !matches!(r.verdict, Verdict::Inconclusive(_)) {
            decided += 1;
        }
        assert!(same_verdict(&r.verdict, &b), "{}\n{:?}\n{} vs {b:?}", specleak_core::print_program(&p), pol, r.verdict.label());
    }
    assert!(decided >= 100, "only {decided} programs decided");
}

#[test]
fn symbolic_runs_concretize_to_concrete_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let dom = Domain::tiny(3, 4).unwrap();
    let mut exhaustive = 0;
    for _ in 0..25 {
        let p = random_program(&mut rng, 8, 2);
        let c = check_concretization(&mut rng, &p, &dom, 2, 20, 1 << 12);
        assert!(c.mismatches.is_empty(), "{}\n{:?}", specleak_core::print_program(&p), c.mismatches);
        exhaustive += c.exhaustive as usize;
    }
    assert!(exhaustive > 0);
}

#[test]
fn external_solver_agrees_with_enumeration() {
    let Some(z3) = z3() else {
        eprintln!("no SMT solver found; skipping");
        return;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let enumerator = Enumerator::default();
    let mut checked = 0;
    let mut sat = 0;
    while checked < 60 {
        let bits = if checked % 2 == 0 { 3 } else { 4 };
        let dom = Domain::tiny(bits, 4).unwrap();
        let p = random_program(&mut rng, 6, 2);
        let pol = random_policy(&mut rng);
        for f in leak_queries(&p, &pol, &dom, 3) {
            let b = match enumerator.check(&f, &dom) {
                Ok(b) => b,
                Err(e) if is_domain_error(&e) => continue,
                Err(e) => panic!("{e}"),
            };
            let a = z3.check(&f, &dom).unwrap();
            match (&a, &b) {
                (SolverResult::Sat(m), SolverResult::Sat(_)) => {
                    assert!(f.eval(m, &dom).unwrap(), "model does not satisfy {f}");
                    sat += 1;
                }
                (SolverResult::Unsat, SolverResult::Unsat) => {}
                _ => panic!("solvers disagree on {f}: {a:?} vs {b:?}"),
            }
            checked += 1;
        }
    }
    assert!(sat > 0);
}
