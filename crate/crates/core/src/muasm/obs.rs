// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use super::policy::parse_number;
use super::value::Value;
use crate::error::{Error, Result};

/// Adversary-visible event of a concrete run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Observation {
    Load(u64),
    Store(u64),
    Pc(Value),
    Start(u64),
    Commit(u64),
    Rollback(u64),
}

pub type Trace = Vec<Observation>;

/// Transaction bracket carried by an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    Start(u64),
    Commit(u64),
    Rollback(u64),
}

/// Events that can appear in a speculative trace, concrete or symbolic.
pub trait TraceEvent: Clone {
    fn marker(&self) -> Option<Marker>;
}

impl TraceEvent for Observation {
    fn marker(&self) -> Option<Marker> {
        match *self {
            Observation::Start(i) => Some(Marker::Start(i)),
            Observation::Commit(i) => Some(Marker::Commit(i)),
            Observation::Rollback(i) => Some(Marker::Rollback(i)),
            _ => None,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Load(a) => write!(f, "load {a}"),
            Observation::Store(a) => write!(f, "store {a}"),
            Observation::Pc(l) => write!(f, "pc {l}"),
            Observation::Start(i) => write!(f, "start {i}"),
            Observation::Commit(i) => write!(f, "commit {i}"),
            Observation::Rollback(i) => write!(f, "rollback {i}"),
        }
    }
}

/// One observation per line.
pub fn dump_trace(trace: &[Observation]) -> String {
    let mut out = String::new();
    for o in trace {
        out.push_str(&o.to_string());
        out.push('\n');
    }
    out
}

/// Inverse of [`dump_trace`].
pub fn parse_trace(text: &str) -> Result<Trace> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::parse(i + 1, 1, format!("invalid observation `{line}`"));
        let (kind, arg) = line.split_once(char::is_whitespace).ok_or_else(bad)?;
        let arg = arg.trim();
        let num = || parse_number(arg).ok_or_else(bad);
        out.push(match kind {
            "load" => Observation::Load(num()?),
            "store" => Observation::Store(num()?),
            "pc" if arg == "end" => Observation::Pc(Value::Bot),
            "pc" => Observation::Pc(Value::Word(num()?)),
            "start" => Observation::Start(num()?),
            "commit" => Observation::Commit(num()?),
            "rollback" => Observation::Rollback(num()?),
            _ => return Err(bad()),
        });
    }
    Ok(out)
}
