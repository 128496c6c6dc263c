// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures and generators for the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use specleak_core::concrete::run_nonspec;
use specleak_core::smt::ExternalSolver;
use specleak_core::speculative::run_am;
use specleak_core::{
    parse_program, BinOp, Configuration, Domain, Error, ExecError, Expr, Input, Instr, Policy,
    Program, Reg, Trace, UnOp, Value,
};

pub const EXAMPLE1: &str = "0: x <- y < size
1: beqz x, end
2: load z, A + y
3: z <- z * 512
4: load w, B + z
5: temp <- temp & w";

pub const EXAMPLE1_FENCED: &str = "0: x <- y < size
1: beqz x, end
2: spbarr
3: load z, A + y
4: z <- z * 512
5: load w, B + z
6: temp <- temp & w";

pub const BOUNDS_CHECK: &str = "\
    mov size, %rax
    mov y, %rbx
    cmp %rbx, %rax
    jbe END
    mov A(%rbx), %rax
    shl $9, %rax
    mov B(%rax), %rax
    and %rax, temp
END:
";

/// The same function with speculative load hardening: a mask that is all
/// ones on the mispredicted path is or-ed into the loaded value.
pub const BOUNDS_CHECK_HARDENED: &str = "\
    mov size, %rax
    mov y, %rbx
    mov $0, %rdx
    cmp %rbx, %rax
    jbe END
    cmovbe $-1, %rdx
    mov A(%rbx), %rax
    shl $9, %rax
    or %rdx, %rax
    mov B(%rax), %rax
    or %rdx, %rax
    and %rax, temp
END:
";

/// Hardened code that masks the index but branches on the loaded value.
pub const COMPARE_LOADED: &str = "\
    mov size, %rcx
    mov y, %rax
    mov $0, %rdx
    cmp %rax, %rcx
    jbe END
    cmovbe $-1, %rdx
    or %rdx, %rax
    mov k, %rcx
    cmp %rcx, A(%rax)
    jne END
    cmovne $-1, %rdx
    mov B, %rax
    and %rax, temp
    jmp END
END:
";

pub fn symbols() -> BTreeMap<String, u64> {
    [("size", 0x1000), ("y", 0x1008), ("temp", 0x1010), ("k", 0x1018), ("A", 0x2000), ("B", 0x8000)]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
}

/// A tiny program with its policy and window, checked at 3-bit words and
/// eight memory cells.
#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub source: &'static str,
    pub low_regs: &'static [&'static str],
    pub low_mem: &'static [u64],
    pub window: u64,
    /// Verdict label when it is known independently of both checkers.
    pub expected: Option<&'static str>,
}

impl Fixture {
    pub fn program(&self) -> Program {
        parse_program(self.source).unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }

    pub fn policy(&self) -> Policy {
        Policy::new(self.low_regs.iter().map(|r| Reg::new(r)), self.low_mem.iter().copied())
    }
}

const fn fx(
    name: &'static str,
    source: &'static str,
    low_regs: &'static [&'static str],
    low_mem: &'static [u64],
    window: u64,
    expected: Option<&'static str>,
) -> Fixture {
    Fixture { name, source, low_regs, low_mem, window, expected }
}

const YS: &[&str] = &["y", "size"];

pub const FIXTURES: &[Fixture] = &[
    fx(
        "bounds_check",
        "0: x <- y < size\n1: beqz x, end\n2: load z, 4 + y\n3: z <- z * 2\n4: load w, z\n5: temp <- temp & w",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
    fx(
        "bounds_check_fenced",
        "0: x <- y < size\n1: beqz x, end\n2: spbarr\n3: load z, 4 + y\n4: z <- z * 2\n5: load w, z",
        YS,
        &[],
        8,
        Some("SECURE"),
    ),
    fx(
        "bounds_check_short_window",
        "0: x <- y < size\n1: beqz x, end\n2: load z, 4 + y\n3: z <- z * 2\n4: load w, z",
        YS,
        &[],
        2,
        Some("SECURE"),
    ),
    fx(
        "speculative_load_hardening",
        "0: m <- 0\n1: x <- y < size\n2: beqz x, end\n3: m <- x ? 7\n4: load z, 4 + y\n5: z <- z | m\n6: z <- z * 2\n7: load w, z",
        YS,
        &[],
        8,
        Some("SECURE"),
    ),
    fx(
        "nested_branch",
        "0: x <- y < size\n1: beqz x, end\n2: t <- y - 1\n3: u <- t < size\n4: beqz u, 9\n5: skip\n6: skip\n7: skip\n8: skip\n9: load z, 4 + y\n10: z <- z * 2\n11: load w, z",
        YS,
        &[],
        6,
        Some("INSECURE"),
    ),
    fx(
        "secret_compare",
        "0: c <- x < size\n1: beqz c, end\n2: load v, 4 + x\n3: d <- v == k\n4: beqz d, end\n5: load w, 0\n6: temp <- temp & w",
        &["x", "size", "k"],
        &[],
        8,
        Some("INSECURE"),
    ),
    fx(
        "secret_compare_fenced",
        "0: c <- x < size\n1: beqz c, end\n2: spbarr\n3: load v, 4 + x\n4: d <- v == k\n5: beqz d, end\n6: load w, 0",
        &["x", "size", "k"],
        &[],
        8,
        Some("SECURE"),
    ),
    fx("straight_line_secret_load", "0: load z, s\n1: load w, z", &[], &[], 8, Some("SECURE")),
    fx("secret_branch_without_speculative_access", "0: beqz s, 2\n1: skip\n2: skip", &[], &[], 8, Some("SECURE")),
    fx(
        "public_branch_secret_address",
        "0: beqz y, 3\n1: load a, s\n2: skip\n3: skip",
        &["y"],
        &[],
        4,
        Some("INSECURE"),
    ),
    fx(
        "speculative_store_forwarding",
        "0: x <- y < size\n1: beqz x, end\n2: store s, 4\n3: load z, 4\n4: load w, z",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
    fx(
        "masked_public_array",
        "0: x <- y < size\n1: beqz x, end\n2: i <- y & 3\n3: load z, 4 + i\n4: load w, z",
        YS,
        &[4, 5, 6, 7],
        8,
        Some("SECURE"),
    ),
    fx(
        "unmasked_public_array",
        "0: x <- y < size\n1: beqz x, end\n2: load z, 4 + y\n3: load w, z",
        YS,
        &[4, 5, 6, 7],
        8,
        Some("INSECURE"),
    ),
    fx(
        "secret_jump_target",
        "0: x <- y < size\n1: beqz x, end\n2: load z, 4 + y\n3: z <- z & 1\n4: z <- z + 6\n5: jmp z\n6: skip\n7: skip",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
    fx(
        "inverted_check_with_jump",
        "0: x <- y < size\n1: beqz x, 3\n2: jmp end\n3: load z, 4 + y\n4: load w, z",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
    fx(
        "two_checks",
        "0: x <- y < size\n1: beqz x, end\n2: load a, 4 + y\n3: u <- a < size\n4: beqz u, end\n5: load b, 4 + a",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
    fx(
        "conditional_assign_of_secret",
        "0: x <- y < size\n1: beqz x, end\n2: z <- 0\n3: z <- s ? 5\n4: load w, z",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
    fx("public_only_loads", "0: load a, y\n1: x <- a < size\n2: beqz x, end\n3: load b, y + 1", YS, &[0, 1, 2, 3, 4, 5, 6, 7], 8, Some("SECURE")),
    fx(
        "leak_after_fence_in_nested",
        "0: x <- y < size\n1: beqz x, end\n2: t <- y - 1\n3: u <- t < size\n4: beqz u, 7\n5: skip\n6: skip\n7: spbarr\n8: load z, 4 + y\n9: load w, z",
        YS,
        &[],
        6,
        Some("SECURE"),
    ),
    fx(
        "store_then_load_public",
        "0: x <- y < size\n1: beqz x, end\n2: store y, 4\n3: load z, 4\n4: load w, z",
        YS,
        &[],
        8,
        Some("SECURE"),
    ),
    fx(
        "loop_free_counter",
        "0: i <- 0\n1: c <- i < y\n2: beqz c, end\n3: load z, i\n4: i <- i + 1\n5: c <- i < y\n6: beqz c, end\n7: load z, i",
        &["y"],
        &[],
        4,
        Some("SECURE"),
    ),
    fx(
        "secret_in_public_register",
        "0: x <- y < size\n1: beqz x, end\n2: load w, s",
        YS,
        &[],
        8,
        Some("INSECURE"),
    ),
];

pub fn tiny() -> Domain {
    Domain::tiny(3, 8).unwrap()
}

pub fn z3() -> Option<ExternalSolver> {
    let s = ExternalSolver::from_env().ok()?;
    s.available().then_some(s)
}

/// A configuration with every register in `p` and every memory cell drawn at
/// random.
pub fn random_config(rng: &mut ChaCha8Rng, p: &Program, dom: &Domain) -> Configuration {
    let mask = dom.width.mask();
    let mut c = Configuration::default();
    for r in p.registers() {
        if !r.is_pc() {
            c.regs.write(r, rng.gen::<u64>() & mask);
        }
    }
    for a in 0..dom.cell_count().unwrap_or(16) {
        c.mem.write(a, rng.gen::<u64>() & mask);
    }
    c
}

const REG_POOL: [&str; 5] = ["a", "b", "c", "y", "s"];
const OPS: [BinOp; 12] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::And,
    BinOp::Or,
    BinOp::Xor,
    BinOp::Shl,
    BinOp::Shr,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Eq,
    BinOp::Ne,
];

fn random_reg(rng: &mut ChaCha8Rng) -> Reg {
    Reg::new(REG_POOL.choose(rng).unwrap())
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    match rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
        0 => Expr::lit(rng.gen_range(0..8)),
        1 => Expr::Reg(random_reg(rng)),
        2 => Expr::unary(if rng.gen() { UnOp::Neg } else { UnOp::Not }, random_expr(rng, depth - 1)),
        _ => Expr::binary(*OPS.choose(rng).unwrap(), random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
    }
}

fn forward_target(rng: &mut ChaCha8Rng, from: u64, len: u64) -> Value {
    // `end` is always a candidate, so a branch never targets its successor.
    let n = len.saturating_sub(from + 2);
    let k = rng.gen_range(0..=n);
    if k == n {
        Value::Bot
    } else {
        Value::Word(from + 2 + k)
    }
}

/// A random well-formed program with at most `max_len` instructions and
/// `max_branches` branches. Control flow only moves forward, so every run
/// terminates.
pub fn random_program(rng: &mut ChaCha8Rng, max_len: usize, max_branches: usize) -> Program {
    let len = rng.gen_range(1..=max_len) as u64;
    let mut branches = 0;
    let mut code = Vec::new();
    for l in 0..len {
        let ins = loop {
            let ins = match rng.gen_range(0..12) {
                0..=2 => Instr::Assign(random_reg(rng), random_expr(rng, 2)),
                3 => Instr::CondAssign(random_reg(rng), random_expr(rng, 1), random_expr(rng, 1)),
                4 | 5 => Instr::Load(random_reg(rng), random_expr(rng, 1)),
                6 => Instr::Store(random_reg(rng), random_expr(rng, 1)),
                7 | 8 if branches < max_branches => {
                    branches += 1;
                    Instr::Beqz(random_reg(rng), forward_target(rng, l, len))
                }
                9 => {
                    // Literal targets are words, so keep them below the
                    // smallest supported word range to avoid wrapping.
                    let t = rng.gen_range(l + 1..=len);
                    Instr::Jmp(if t == len || t >= 8 { Expr::Lit(Value::Bot) } else { Expr::lit(t) })
                }
                10 => Instr::Spbarr,
                11 => Instr::Skip,
                _ => continue,
            };
            break ins;
        };
        code.push(ins);
    }
    Program::sequential(code).expect("generator yields well-formed programs")
}

/// One class of initial configurations that share an always-mispredict run.
pub struct Leaf {
    /// Inputs read by the run; everything else is unassigned.
    pub cfg: Configuration,
    pub am: Trace,
    pub nonspec: Trace,
}

/// Every always-mispredict run of `p`, as a partition of the input space
/// into classes of inputs the runs actually read. `None` when there are more
/// than `budget` classes.
pub fn am_leaves(p: &Program, dom: &Domain, window: u64, fuel: usize, budget: usize) -> Option<Vec<Leaf>> {
    let mut out = Vec::new();
    let mut stack = vec![Configuration::partial()];
    while let Some(cfg) = stack.pop() {
        let r = run_am(p, dom, window, &cfg, fuel).and_then(|(am, _)| run_nonspec(p, dom, &cfg, fuel).map(|(ns, _)| (am, ns)));
        match r {
            Ok((am, nonspec)) => {
                out.push(Leaf { cfg, am, nonspec });
                if out.len() > budget {
                    return None;
                }
            }
            Err(ExecError::Undefined(input)) => {
                for v in 0..=dom.width.mask() {
                    let mut next = cfg.clone();
                    next.set(&input, v);
                    stack.push(next);
                }
            }
            Err(e) => panic!("concrete run failed: {e}"),
        }
    }
    Some(out)
}

pub fn inputs_of(cfg: &Configuration) -> Vec<Input> {
    cfg.regs
        .iter()
        .map(|(r, _)| Input::Reg(r.clone()))
        .chain(cfg.mem.cells().map(|(a, _)| Input::Mem(a)))
        .collect()
}

pub fn is_domain_error(e: &Error) -> bool {
    matches!(e, Error::DomainTooLarge(_) | Error::SpaceTooLarge(_))
}

/// Checks that projecting away the speculative parts of the oracle-driven and
/// always-mispredict traces leaves the non-speculative trace, and that all
/// three semantics end in the same final state.
pub fn check_projection(p: &Program, dom: &Domain, init: &Configuration) -> Result<(), String> {
    use specleak_core::speculative::{run_spec, AlwaysNotTaken, AlwaysTaken, Btfnt, PredictionOracle};
    use specleak_core::sni::nse;
    let fuel = 10_000;
    let (ns, fin) = run_nonspec(p, dom, init, fuel).map_err(|e| e.to_string())?;
    for w in [0, 1, 2, 5] {
        let oracles: [(&str, &dyn PredictionOracle); 3] = [
            ("always-taken", &AlwaysTaken { window: w }),
            ("always-not-taken", &AlwaysNotTaken { window: w }),
            ("btfnt", &Btfnt { window: w }),
        ];
        for (name, o) in oracles {
            let (t, f) = run_spec(p, dom, o, init, fuel).map_err(|e| format!("{name} w={w}: {e}"))?;
            if nse(&t).map_err(|e| e.to_string())? != ns {
                return Err(format!("{name} w={w}: projection differs"));
            }
            if f != fin {
                return Err(format!("{name} w={w}: final state differs"));
            }
        }
        let (t, f) = run_am(p, dom, w, init, fuel).map_err(|e| format!("am w={w}: {e}"))?;
        if nse(&t).map_err(|e| e.to_string())? != ns {
            return Err(format!("am w={w}: projection differs"));
        }
        if f != fin {
            return Err(format!("am w={w}: final state differs"));
        }
    }
    Ok(())
}

/// Outcome of comparing symbolic runs against concrete ones.
#[derive(Debug, Default)]
pub struct Concretization {
    pub runs: usize,
    pub samples: usize,
    /// Whether the exhaustive comparison ran.
    pub exhaustive: bool,
    pub mismatches: Vec<String>,
}

/// Explores `p` symbolically and compares each run's concretizations with
/// concrete always-mispredict runs: at least `samples` satisfying valuations
/// per run (fewer only when the path has fewer solutions), plus a full
/// comparison over the input space when it has at most `leaf_budget` classes.
pub fn check_concretization(
    rng: &mut ChaCha8Rng,
    p: &Program,
    dom: &Domain,
    window: u64,
    samples: usize,
    leaf_budget: usize,
) -> Concretization {
    use specleak_core::smt::{Enumerator, Formula, Side};
    use specleak_core::symbolic::{apply_config, apply_trace, explore, satisfies, ExploreLimits};
    let solver = Enumerator::default();
    let limits = ExploreLimits { max_paths: 10_000, max_steps: 10_000 };
    let ex = explore(p, dom, window, limits, &solver).expect("exploration");
    let mut out = Concretization { runs: ex.runs.len(), ..Default::default() };
    if !ex.complete {
        out.mismatches.push("exploration incomplete".into());
        return out;
    }
    let fuel = 10_000;
    let mask = dom.width.mask();
    for (i, run) in ex.runs.iter().enumerate() {
        let path = Formula::and(run.path.iter().map(|c| Formula::nonzero(Side::Single, c.clone())));
        let mut valuations: Vec<Configuration> = solver
            .models(&path, dom, samples)
            .expect("enumeration")
            .into_iter()
            .map(|m| m.valuation(Side::Single).clone())
            .collect();
        let mut tries = 0;
        while valuations.len() < samples && tries < 50 * samples {
            tries += 1;
            let mut c = random_config(rng, p, dom);
            c.regs = c.regs.with_default(rng.gen::<u64>() & mask);
            if satisfies(&c, dom, &run.path).unwrap_or(false) {
                valuations.push(c);
            }
        }
        for mu in valuations {
            out.samples += 1;
            let sym = apply_trace(&mu, dom, &run.trace).expect("concretization");
            let (am, fin) = run_am(p, dom, window, &mu, fuel).expect("concrete run");
            if sym != am {
                out.mismatches.push(format!("run {i}: sampled valuation {mu:?}"));
            }
            let sym_fin = apply_config(&mu, dom, &run.final_config).expect("concretization");
            let same_regs = p.registers().iter().all(|r| sym_fin.regs.read(r).ok() == fin.regs.read(r).ok());
            if !same_regs || sym_fin.pc != fin.pc || !same_cells(&sym_fin, &fin, dom) {
                out.mismatches.push(format!("run {i}: final state for {mu:?}"));
            }
        }
    }
    let Some(leaves) = am_leaves(p, dom, window, fuel, leaf_budget) else {
        return out;
    };
    out.exhaustive = true;
    let mut hit = vec![false; ex.runs.len()];
    for leaf in leaves {
        let mu = leaf.cfg.clone().completed(0);
        let matching: Vec<usize> = (0..ex.runs.len())
            .filter(|&i| satisfies(&mu, dom, &ex.runs[i].path).unwrap_or(false))
            .collect();
        if matching.len() != 1 {
            out.mismatches.push(format!("{} runs cover input class {:?}", matching.len(), leaf.cfg));
            continue;
        }
        hit[matching[0]] = true;
        let sym = apply_trace(&mu, dom, &ex.runs[matching[0]].trace).expect("concretization");
        if sym != leaf.am {
            out.mismatches.push(format!("run {}: input class {:?}", matching[0], leaf.cfg));
        }
    }
    for (i, h) in hit.iter().enumerate() {
        if !h {
            out.mismatches.push(format!("run {i} has no concrete counterpart"));
        }
    }
    out
}

/// Self-composition queries arising from verifying `p` under `policy`: the
/// memory-leak query and every control-leak query of each explored run.
pub fn leak_queries(p: &Program, policy: &Policy, dom: &Domain, window: u64) -> Vec<specleak_core::smt::Formula> {
    use specleak_core::smt::Enumerator;
    use specleak_core::sni::{ctrl_leak_formulas, mem_leak_formula};
    use specleak_core::symbolic::{explore, ExploreLimits};
    let ex = explore(p, dom, window, ExploreLimits::default(), &Enumerator::default()).expect("exploration");
    let mut out = Vec::new();
    for run in &ex.runs {
        out.extend(mem_leak_formula(run, policy, dom).expect("well-bracketed"));
        out.extend(ctrl_leak_formulas(run, policy, dom).expect("well-bracketed").into_iter().map(|(_, f)| f));
    }
    out
}

/// A random policy over the generator's registers and the first memory cells.
pub fn random_policy(rng: &mut ChaCha8Rng) -> Policy {
    let regs = REG_POOL.iter().filter(|_| rng.gen_bool(0.5)).map(|r| Reg::new(r)).collect::<Vec<_>>();
    let mem = (0..4).filter(|_| rng.gen_bool(0.3)).collect::<Vec<_>>();
    Policy::new(regs, mem)
}

fn same_cells(a: &Configuration, b: &Configuration, dom: &Domain) -> bool {
    (0..dom.cell_count().unwrap_or(16)).all(|i| a.mem.read(i).ok() == b.mem.read(i).ok())
}
