// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use specleak_core::concrete::run_nonspec;
use specleak_core::muasm::obs::dump_trace;
use specleak_core::smt::{Enumerator, ExternalSolver, Solver};
use specleak_core::sni::witness::config_json;
use specleak_core::sni::{brute_force_sni, BruteLimits, BruteVerdict, LeakKind};
use specleak_core::speculative::{run_am, run_spec, AlwaysNotTaken, AlwaysTaken, Btfnt, PredictionOracle};
use specleak_core::symbolic::{dump_sym_trace, explore, ExploreLimits};
use specleak_core::x86::{parse_symbols, translate, TranslateOptions};
use specleak_core::{
    parse_program, print_program, spectector, Configuration, Domain, Limits, Policy, Program, Reg, Verdict, Width,
};

const ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "specleak", version, about = "Detect speculative information leaks in assembly programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide speculative non-interference symbolically.
    Check(CheckArgs),
    /// Print the trace of one concrete run.
    Trace(TraceArgs),
    /// Print the symbolic runs of the always-mispredict semantics.
    Explore(ExploreArgs),
    /// Decide speculative non-interference by enumerating all inputs.
    Brute(BruteArgs),
    /// Lower an AT&T listing to the core language.
    Translate(InputArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Muasm,
    Att,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Semantics {
    Nonspec,
    Spec,
    Am,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Oracle {
    Btfnt,
    Taken,
    NotTaken,
}

#[derive(Args)]
struct InputArgs {
    input: PathBuf,
    /// Input language; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Symbol placement file for AT&T input (`NAME ADDRESS` per line).
    #[arg(long)]
    symbols: Option<PathBuf>,
    /// Skip unsupported AT&T instructions instead of failing.
    #[arg(long)]
    permissive: bool,
}

#[derive(Args)]
struct DomainArgs {
    /// Word width in bits.
    #[arg(long, default_value_t = 64)]
    width: u32,
    /// Number of memory cells; addresses are reduced modulo this.
    #[arg(long)]
    mem: Option<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    domain: DomainArgs,
    /// Policy file (`low reg NAME` / `low mem ADDR` lines).
    #[arg(long)]
    policy: PathBuf,
    /// Speculative window.
    #[arg(long, default_value_t = 200)]
    window: u64,
    #[arg(long, default_value_t = 25)]
    max_paths: usize,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    /// SMT solver command reading SMT-LIB2 on stdin, or `internal` for
    /// enumeration (width at most 4).
    #[arg(long, env = "SPECLEAK_SOLVER", default_value = "z3 -in")]
    solver: String,
    /// Per-query solver timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, value_enum, default_value_t = Semantics::Am)]
    semantics: Semantics,
    /// Branch predictor for `--semantics spec`.
    #[arg(long, value_enum, default_value_t = Oracle::Btfnt)]
    oracle: Oracle,
    #[arg(long, default_value_t = 200)]
    window: u64,
    /// Initial values, e.g. `y=5,size=2,mem[9]=7`; everything else is 0.
    #[arg(long, default_value = "")]
    init: String,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long, default_value_t = 200)]
    window: u64,
    #[arg(long, default_value_t = 25)]
    max_paths: usize,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, env = "SPECLEAK_SOLVER", default_value = "z3 -in")]
    solver: String,
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Args)]
struct BruteArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    domain: DomainArgs,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 200)]
    window: u64,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ERROR)
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Check(a) => check(a),
        Command::Trace(a) => trace(a),
        Command::Explore(a) => explore_cmd(a),
        Command::Brute(a) => brute(a),
        Command::Translate(a) => {
            let (p, _) = load(&a)?;
            print!("{}", print_program(&p));
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Loads the program and the symbol table used to resolve names in policies.
fn load(a: &InputArgs) -> Result<(Program, BTreeMap<String, u64>)> {
    let symbols = match &a.symbols {
        Some(path) => parse_symbols(&read(path)?)?,
        None => BTreeMap::new(),
    };
    let format = a.format.unwrap_or_else(|| match a.input.extension().and_then(|e| e.to_str()) {
        Some("s" | "S" | "asm") => Format::Att,
        _ => Format::Muasm,
    });
    let text = read(&a.input)?;
    let p = match format {
        Format::Muasm => parse_program(&text)?,
        Format::Att => translate(&text, &symbols, TranslateOptions { permissive: a.permissive })?,
    };
    Ok((p, symbols))
}

fn domain(a: &DomainArgs) -> Result<Domain> {
    let dom = Domain::new(Width::new(a.width)?);
    Ok(match a.mem {
        Some(m) => dom.with_mem_cells(m)?,
        None => dom,
    })
}

fn solver(cmd: &str, timeout: Option<f64>) -> Result<Box<dyn Solver + Sync>> {
    if cmd == "internal" {
        return Ok(Box::new(Enumerator::default()));
    }
    let s = ExternalSolver::from_command(cmd)?.with_timeout(timeout.map(Duration::from_secs_f64));
    if !s.available() {
        bail!("solver `{cmd}` not found; set --solver or SPECLEAK_SOLVER, or use `--solver internal` at small widths");
    }
    Ok(Box::new(s))
}

fn policy(path: &Path, symbols: &BTreeMap<String, u64>) -> Result<Policy> {
    Ok(Policy::parse(&read(path)?, symbols)?)
}

fn exit_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Secure => 0,
        Verdict::Insecure(_) => 1,
        Verdict::Inconclusive(_) => 2,
    }
}

fn check(a: CheckArgs) -> Result<u8> {
    let (p, symbols) = load(&a.input)?;
    let pol = policy(&a.policy, &symbols)?;
    let dom = domain(&a.domain)?;
    let solver = solver(&a.solver, a.timeout)?;
    let limits = Limits {
        window: a.window,
        explore: ExploreLimits { max_paths: a.max_paths, max_steps: a.max_steps },
        jobs: a.jobs.max(1),
    };
    let report = spectector(&p, &pol, &dom, &limits, solver.as_ref())?;
    match a.output {
        Output::Json => {
            let out = match &report.verdict {
                Verdict::Insecure(w) => w.to_json(),
                Verdict::Secure => json!({ "verdict": "SECURE", "runs": report.runs }),
                Verdict::Inconclusive(why) => json!({ "verdict": "INCONCLUSIVE", "runs": report.runs, "reason": why }),
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Output::Text => {
            println!("{}", report.verdict.label());
            println!("runs explored: {}", report.runs);
            match &report.verdict {
                Verdict::Insecure(w) => {
                    match w.kind {
                        LeakKind::Memory { obs_index } => {
                            println!("leak: speculative memory access {obs_index} of run {}", w.run_index)
                        }
                        LeakKind::Control { prefix_len } => {
                            println!("leak: speculative branch after {prefix_len} observations of run {}", w.run_index)
                        }
                    }
                    println!("first input:  {}", config_json(&w.first));
                    println!("second input: {}", config_json(&w.second));
                    print!("first trace:\n{}", dump_trace(&w.traces[0]));
                    print!("second trace:\n{}", dump_trace(&w.traces[1]));
                }
                Verdict::Inconclusive(why) => println!("reason: {why}"),
                Verdict::Secure => {}
            }
        }
    }
    Ok(exit_code(&report.verdict))
}

/// Parses `name=value` pairs separated by commas; `mem[ADDR]` sets a cell.
fn parse_init(text: &str, symbols: &BTreeMap<String, u64>) -> Result<Configuration> {
    let number = |s: &str| -> Result<u64> {
        let s = s.trim();
        let parsed = match s.strip_prefix("0x") {
            Some(hex) => u64::from_str_radix(hex, 16).ok(),
            None => s.parse::<u64>().ok().or_else(|| s.parse::<i64>().ok().map(|v| v as u64)),
        };
        parsed.or_else(|| symbols.get(s).copied()).ok_or_else(|| anyhow!("invalid value `{s}`"))
    };
    let mut c = Configuration::default();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (lhs, rhs) = item.split_once('=').ok_or_else(|| anyhow!("expected `name=value`, got `{item}`"))?;
        let lhs = lhs.trim();
        let v = number(rhs)?;
        match lhs.strip_prefix("mem[").and_then(|s| s.strip_suffix(']')) {
            Some(addr) => c.mem.write(number(addr)?, v),
            None => c.regs.write(Reg::new(lhs.trim_start_matches('%')), v),
        }
    }
    Ok(c)
}

fn trace(a: TraceArgs) -> Result<u8> {
    let (p, symbols) = load(&a.input)?;
    let dom = domain(&a.domain)?;
    let init = parse_init(&a.init, &symbols)?;
    let fuel = a.max_steps;
    let (t, fin) = match a.semantics {
        Semantics::Nonspec => run_nonspec(&p, &dom, &init, fuel)?,
        Semantics::Am => run_am(&p, &dom, a.window, &init, fuel)?,
        Semantics::Spec => {
            let w = a.window;
            let oracle: Box<dyn PredictionOracle> = match a.oracle {
                Oracle::Btfnt => Box::new(Btfnt { window: w }),
                Oracle::Taken => Box::new(AlwaysTaken { window: w }),
                Oracle::NotTaken => Box::new(AlwaysNotTaken { window: w }),
            };
            run_spec(&p, &dom, oracle.as_ref(), &init, fuel)?
        }
    };
    match a.output {
        Output::Text => print!("{}", dump_trace(&t)),
        Output::Json => {
            let out = json!({
                "trace": t.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
                "final": config_json(&fin),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(0)
}

fn explore_cmd(a: ExploreArgs) -> Result<u8> {
    let (p, _) = load(&a.input)?;
    let dom = domain(&a.domain)?;
    let solver = solver(&a.solver, a.timeout)?;
    let limits = ExploreLimits { max_paths: a.max_paths, max_steps: a.max_steps };
    let ex = explore(&p, &dom, a.window, limits, solver.as_ref())?;
    for (i, run) in ex.runs.iter().enumerate() {
        println!("run {i}:");
        print!("{}", dump_sym_trace(&run.trace));
    }
    if !ex.complete {
        println!("incomplete: {} runs abandoned, {} unanswered queries", ex.truncated, ex.unknown);
        return Ok(2);
    }
    Ok(0)
}

fn brute(a: BruteArgs) -> Result<u8> {
    let (p, symbols) = load(&a.input)?;
    let pol = policy(&a.policy, &symbols)?;
    let dom = domain(&a.domain)?;
    let limits = BruteLimits { window: a.window, fuel: a.max_steps, ..BruteLimits::default() };
    let v = brute_force_sni(&p, &pol, &dom, &limits)?;
    match (&v, a.output) {
        (BruteVerdict::Secure, Output::Text) => println!("SECURE"),
        (BruteVerdict::Secure, Output::Json) => println!("{}", json!({ "verdict": "SECURE" })),
        (BruteVerdict::Insecure { first, second, traces }, Output::Text) => {
            println!("INSECURE");
            println!("first input:  {}", config_json(first));
            println!("second input: {}", config_json(second));
            print!("first trace:\n{}", dump_trace(&traces[0]));
            print!("second trace:\n{}", dump_trace(&traces[1]));
        }
        (BruteVerdict::Insecure { first, second, traces }, Output::Json) => {
            let out = json!({
                "verdict": "INSECURE",
                "model1": config_json(first),
                "model2": config_json(second),
                "concretizedTraces": traces.iter().map(|t| t.iter().map(|o| o.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(if v.is_secure() { 0 } else { 1 })
}
