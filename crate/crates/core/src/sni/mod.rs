// SPDX-License-Identifier: Apache-2.0

//! Speculative non-interference: trace projections, leak checks, the
//! symbolic verification procedure and an exhaustive reference check.

pub mod brute;
pub mod formula;
pub mod leak;
pub mod projection;
pub mod witness;

pub use brute::{brute_force_sni, BruteLimits, BruteVerdict};
pub use leak::{
    ctrl_leak, ctrl_leak_formulas, mem_leak, mem_leak_formula, spectector, LeakCheck, Limits, Report,
    Verdict,
};
pub use projection::{nse, project, se};
pub use witness::{config_json, LeakKind, Witness};
