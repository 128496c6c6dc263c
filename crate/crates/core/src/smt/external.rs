// SPDX-License-Identifier: Apache-2.0

//! SMT-LIB solver run as a child process, one process per query.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use super::smtlib::{emit, parse_response};
use super::{Formula, Solver, SolverResult};
use crate::error::{Error, Result};
use crate::muasm::Domain;

/// Environment variable overriding the solver command.
pub const SOLVER_ENV: &str = "SPECLEAK_SOLVER";
pub const DEFAULT_COMMAND: &str = "z3 -in";

#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Option<Duration>,
}

impl ExternalSolver {
    /// Parses a whitespace-separated command line such as `z3 -in`.
    pub fn from_command(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_owned);
        let program = parts.next().ok_or_else(|| Error::Solver("empty solver command".into()))?;
        Ok(ExternalSolver { program, args: parts.collect(), timeout: None })
    }

    /// The command from the environment, or the default one.
    pub fn from_env() -> Result<Self> {
        let cmd = std::env::var(SOLVER_ENV).unwrap_or_else(|_| DEFAULT_COMMAND.into());
        ExternalSolver::from_command(&cmd)
    }

    pub fn with_timeout(mut self, t: Option<Duration>) -> Self {
        self.timeout = t;
        self
    }

    /// Whether the solver can be started and answers a trivial query.
    pub fn available(&self) -> bool {
        matches!(self.run("(check-sat)\n(exit)\n"), Ok(Some(out)) if out.trim_start().starts_with("sat"))
    }

    /// Runs a script; `None` means the timeout expired.
    pub fn run(&self, script: &str) -> Result<Option<String>> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Solver(format!("cannot start `{}`: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let input = script.to_owned();
        let (tx, rx) = mpsc::channel();
        let reader = thread::spawn(move || {
            // A solver that exits early closes the pipe; its output still tells why.
            let _ = stdin.write_all(input.as_bytes());
            drop(stdin);
            let mut out = String::new();
            let r = stdout.read_to_string(&mut out).map(|_| out);
            let _ = tx.send(r);
        });
        let received = match self.timeout {
            Some(t) => rx.recv_timeout(t).ok(),
            None => rx.recv().ok(),
        };
        let Some(out) = received else {
            let _ = child.kill();
            let _ = child.wait();
            let _ = reader.join();
            return Ok(None);
        };
        let _ = child.wait();
        let _ = reader.join();
        Ok(Some(out?))
    }
}

impl Solver for ExternalSolver {
    fn check(&self, f: &Formula, dom: &Domain) -> Result<SolverResult> {
        let script = emit(f, dom);
        log::trace!("solver query:\n{}", script.text);
        let Some(out) = self.run(&script.text)? else {
            return Ok(SolverResult::Unknown("timeout".into()));
        };
        let result = parse_response(&script, &out)?;
        if let SolverResult::Sat(m) = &result {
            // Every model is re-checked against the formula before use.
            if !f.eval(m, dom)? {
                return Ok(SolverResult::Unknown("solver model does not satisfy the query".into()));
            }
        }
        Ok(result)
    }

    fn name(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_parsing() {
        let s = ExternalSolver::from_command("z3 -in -T:5").unwrap();
        assert_eq!(s.program, "z3");
        assert_eq!(s.args, vec!["-in", "-T:5"]);
        assert_eq!(s.name(), "z3 -in -T:5");
        assert!(ExternalSolver::from_command("  ").is_err());
    }

    #[test]
    fn missing_binary_is_an_error() {
        let s = ExternalSolver::from_command("/nonexistent/solver").unwrap();
        assert!(s.run("(check-sat)").is_err());
        assert!(!s.available());
    }
}
