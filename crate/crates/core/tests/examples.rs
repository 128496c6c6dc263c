// SPDX-License-Identifier: Apache-2.0

//! The bounds-check-bypass example end to end: its speculative trace, its
//! symbolic runs and the verdicts on it and on its fenced variant.

mod common;

use common::*;

use specleak_core::sni::LeakKind;
use specleak_core::smt::Solver;
use specleak_core::speculative::{run_spec, Btfnt};
use specleak_core::symbolic::{explore, path_condition, ExploreLimits, SymObs};
use specleak_core::{parse_program, spectector, Configuration, Domain, Limits, Observation, Policy, Reg, Value, Verdict};

/// Same example laid out so that the in-bounds case is the taken branch and
/// the fall-through jumps to an unmapped label.
const EXAMPLE1_INVERTED: &str = "0: x <- size <= y
1: beqz x, 3
2: jmp 10
3: load z, A + y
4: z <- z * 512
5: load w, B + z
6: temp <- temp & w";

fn init(y: u64, size: u64, a: u64, b: u64) -> Configuration {
    let mut c = Configuration::default();
    for (r, v) in [("y", y), ("size", size), ("A", a), ("B", b)] {
        c.regs.write(Reg::new(r), v);
    }
    c
}

#[test]
fn mispredicted_bounds_check_trace() {
    let p = parse_program(EXAMPLE1).unwrap();
    let dom = Domain::default();
    for (y, size, a, b, cell) in [(5, 2, 100, 1000, 3), (7, 7, 0, 64, 9), (u64::MAX, 0, 1 << 20, 1 << 30, 1)] {
        let mut sigma = init(y, size, a, b);
        let v1 = a.wrapping_add(y);
        sigma.mem.write(v1, cell);
        let v2 = b.wrapping_add(cell.wrapping_mul(512));
        for w in [3, 4, 50] {
            let (t, fin) = run_spec(&p, &dom, &Btfnt { window: w }, &sigma, 1000).unwrap();
            assert_eq!(
                t,
                vec![
                    Observation::Start(0),
                    Observation::Pc(Value::Word(2)),
                    Observation::Load(v1),
                    Observation::Load(v2),
                    Observation::Rollback(0),
                    Observation::Pc(Value::Bot),
                ],
                "y={y} size={size} w={w}"
            );
            assert_eq!(fin.regs.get(&Reg::new("temp")), Some(0));
        }
    }
}

fn solver_and_domain() -> (Box<dyn Solver>, Domain) {
    match z3() {
        Some(s) => (Box::new(s), Domain::default()),
        None => (Box::new(specleak_core::smt::Enumerator::default()), Domain::tiny(4, 16).unwrap()),
    }
}

fn strip_trivial(t: &[SymObs]) -> Vec<String> {
    t.iter()
        .filter(|o| !matches!(o, SymObs::SymPc(c) if c.is_const()))
        .map(|o| o.to_string())
        .collect()
}

fn sorted_runs(p: &specleak_core::Program, dom: &Domain, w: u64, solver: &dyn Solver) -> Vec<Vec<String>> {
    let ex = explore(p, dom, w, ExploreLimits::default(), solver).unwrap();
    assert!(ex.complete);
    let mut runs: Vec<Vec<String>> = ex.runs.iter().map(|r| strip_trivial(&r.trace)).collect();
    runs.sort();
    runs
}

fn lines(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn inverted_layout_reproduces_the_symbolic_runs() {
    let (solver, dom) = solver_and_domain();
    let p = parse_program(EXAMPLE1_INVERTED).unwrap();
    let second = format!("load B + read(mem, A + y) * {}", 512 & dom.width.mask());
    let out_of_bounds = |loads: &[&str]| {
        let mut v = lines(&["sympc size <= y", "start 0", "pc 3"]);
        v.extend(lines(loads));
        v.extend(lines(&["rollback 0", "pc 2", "pc 10"]));
        v
    };
    let mut in_bounds = lines(&["sympc y < size", "start 0", "pc 2", "pc 10", "rollback 0", "pc 3", "load A + y"]);
    in_bounds.push(second.clone());

    let three = sorted_runs(&p, &dom, 3, solver.as_ref());
    assert_eq!(three, [out_of_bounds(&["load A + y", &second]), in_bounds.clone()]);

    // With two steps of speculation the multiplication uses up the window.
    let two = sorted_runs(&p, &dom, 2, solver.as_ref());
    assert_eq!(two, [out_of_bounds(&["load A + y"]), in_bounds]);
}

#[test]
fn short_window_stops_before_the_second_load() {
    let (solver, dom) = solver_and_domain();
    let p = parse_program(EXAMPLE1).unwrap();
    let ex = explore(&p, &dom, 2, ExploreLimits::default(), solver.as_ref()).unwrap();
    assert!(ex.complete);
    assert_eq!(ex.runs.len(), 2);
    let mut conds: Vec<String> = ex.runs.iter().map(|r| path_condition(&r.trace).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" && ")).collect();
    conds.sort();
    assert_eq!(conds, ["size <= y", "y < size"]);
    let out = ex.runs.iter().find(|r| path_condition(&r.trace)[0].to_string() == "size <= y").unwrap();
    let spec = specleak_core::sni::se(&out.trace).unwrap();
    let loads: Vec<String> = spec.iter().filter(|o| matches!(o, SymObs::Load(_))).map(|o| o.to_string()).collect();
    assert_eq!(loads, ["load A + y"]);
    // One more step of speculation reaches the dependent load.
    let ex3 = explore(&p, &dom, 3, ExploreLimits::default(), solver.as_ref()).unwrap();
    let out = ex3.runs.iter().find(|r| path_condition(&r.trace)[0].to_string() == "size <= y").unwrap();
    let spec = specleak_core::sni::se(&out.trace).unwrap();
    assert_eq!(spec.iter().filter(|o| matches!(o, SymObs::Load(_))).count(), 2);
}

fn policy() -> Policy {
    Policy::regs_only(&["y", "size", "A", "B"])
}

#[test]
fn example_verdicts() {
    let (solver, dom) = solver_and_domain();
    let limits = Limits::default();
    let r = spectector(&parse_program(EXAMPLE1).unwrap(), &policy(), &dom, &limits, solver.as_ref()).unwrap();
    let Verdict::Insecure(w) = &r.verdict else { panic!("{:?}", r.verdict) };
    assert!(matches!(w.kind, LeakKind::Memory { .. }));
    let y = Reg::new("y");
    let size = Reg::new("size");
    let (a, b) = (&w.first, &w.second);
    assert_eq!(a.regs.get(&y), b.regs.get(&y));
    assert!(a.regs.get(&y) >= a.regs.get(&size), "the leak happens out of bounds");
    let json = w.to_json();
    assert_eq!(json["verdict"], "INSECURE");
    assert_eq!(json["kind"], "memory");

    let r = spectector(&parse_program(EXAMPLE1_FENCED).unwrap(), &policy(), &dom, &limits, solver.as_ref()).unwrap();
    assert_eq!(r.verdict, Verdict::Secure);

    let r = spectector(&parse_program(EXAMPLE1_INVERTED).unwrap(), &policy(), &dom, &limits, solver.as_ref()).unwrap();
    assert!(r.verdict.is_insecure());
}

#[test]
fn window_of_one_is_too_short_to_leak() {
    let (solver, dom) = solver_and_domain();
    let p = parse_program(EXAMPLE1).unwrap();
    let r = spectector(&p, &policy(), &dom, &Limits { window: 1, ..Limits::default() }, solver.as_ref()).unwrap();
    assert_eq!(r.verdict, Verdict::Secure, "a single speculative load at a public address leaks nothing");
}
