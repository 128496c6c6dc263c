// SPDX-License-Identifier: Apache-2.0

//! Core syntax, values, configurations and observations.

pub mod config;
pub mod expr;
pub mod obs;
pub mod parse;
pub mod policy;
pub mod program;
pub mod value;

pub use config::{Configuration, Input, Memory, Registers};
pub use expr::{BinOp, Expr, Reg, UnOp};
pub use obs::{Marker, Observation, Trace, TraceEvent};
pub use parse::{parse_expr, parse_program, print_program};
pub use policy::Policy;
pub use program::{Instr, Program};
pub use value::{Domain, Value, Width};
