// SPDX-License-Identifier: Apache-2.0

//! Front end for a subset of AT&T-syntax x86-64 assembly.

pub mod parse;
pub mod translate;

pub use parse::{parse_listing, parse_symbols, AsmInstr, AsmItem, Operand};
pub use translate::{translate, translate_items, TranslateOptions};
