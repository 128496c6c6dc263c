// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use specleak_bench::{load_chain, policy, program, BOUNDS_CHECK, BOUNDS_CHECK_FENCED, NESTED};
use specleak_core::smt::smtlib::emit;
use specleak_core::smt::{Enumerator, ExternalSolver};
use specleak_core::sni::{brute_force_sni, mem_leak_formula, BruteLimits};
use specleak_core::speculative::run_am;
use specleak_core::symbolic::{explore, ExploreLimits};
use specleak_core::{spectector, Configuration, Domain, Limits, Reg};

fn concrete(c: &mut Criterion) {
    let dom = Domain::default();
    let mut init = Configuration::default();
    init.regs.write(Reg::new("y"), 9);
    init.regs.write(Reg::new("size"), 4);
    let mut g = c.benchmark_group("always_mispredict");
    for n in [4, 16, 64] {
        let p = load_chain(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| run_am(p, &dom, 200, black_box(&init), 10_000).unwrap())
        });
    }
    g.finish();
}

fn symbolic(c: &mut Criterion) {
    let dom = Domain::tiny(4, 16).unwrap();
    let solver = Enumerator::default();
    let mut g = c.benchmark_group("explore");
    for (name, src) in [("bounds_check", BOUNDS_CHECK), ("nested", NESTED)] {
        let p = program(src);
        g.bench_function(name, |b| b.iter(|| explore(&p, &dom, 200, ExploreLimits::default(), &solver).unwrap()));
    }
    g.finish();
}

fn verdicts(c: &mut Criterion) {
    let small = Domain::tiny(3, 8).unwrap();
    let smaller = Domain::tiny(2, 4).unwrap();
    let mut g = c.benchmark_group("verdict");
    g.sample_size(10);
    for (name, src) in [("bounds_check", BOUNDS_CHECK), ("fenced", BOUNDS_CHECK_FENCED)] {
        let p = program(src);
        g.bench_function(format!("enumeration/{name}"), |b| {
            b.iter(|| spectector(&p, &policy(), &small, &Limits::default(), &Enumerator::default()).unwrap())
        });
        g.bench_function(format!("brute_force/{name}"), |b| {
            b.iter(|| brute_force_sni(&p, &policy(), &smaller, &BruteLimits::default()).unwrap())
        });
        if let Ok(z3) = ExternalSolver::from_env() {
            if z3.available() {
                g.bench_function(format!("external/{name}"), |b| {
                    b.iter(|| spectector(&p, &policy(), &Domain::default(), &Limits::default(), &z3).unwrap())
                });
            }
        }
    }
    g.finish();
}

fn emission(c: &mut Criterion) {
    let dom = Domain::default();
    let p = load_chain(32);
    let ex = explore(&p, &Domain::tiny(4, 16).unwrap(), 200, ExploreLimits::default(), &Enumerator::default()).unwrap();
    let f = ex.runs.iter().find_map(|r| mem_leak_formula(r, &policy(), &dom).unwrap()).unwrap();
    c.bench_function("emit_leak_query", |b| b.iter(|| emit(black_box(&f), &dom)));
}

criterion_group!(benches, concrete, symbolic, verdicts, emission);
criterion_main!(benches);
