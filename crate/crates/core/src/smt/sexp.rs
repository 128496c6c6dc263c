// SPDX-License-Identifier: Apache-2.0

//! Minimal s-expression reader for solver responses.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            Sexp::Atom(_) => None,
        }
    }

    /// Bitvector literal: `#b…`, `#x…` or `(_ bvN w)`.
    pub fn bitvector(&self) -> Option<u64> {
        match self {
            Sexp::Atom(a) => {
                if let Some(bits) = a.strip_prefix("#b") {
                    u64::from_str_radix(bits, 2).ok()
                } else if let Some(hex) = a.strip_prefix("#x") {
                    u64::from_str_radix(hex, 16).ok()
                } else {
                    None
                }
            }
            Sexp::List(l) => match l.as_slice() {
                [Sexp::Atom(u), Sexp::Atom(n), _] if u == "_" => {
                    n.strip_prefix("bv").and_then(|d| d.parse().ok())
                }
                _ => None,
            },
        }
    }
}

/// Reads every top-level s-expression of `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| {
                    Error::Solver("unbalanced parenthesis in solver output".into())
                })?;
                stack.last_mut().expect("outer level").push(Sexp::List(done));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '|' => {
                let mut s = String::from("|");
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '|' {
                        break;
                    }
                }
                stack.last_mut().expect("level").push(Sexp::Atom(s));
            }
            '"' => {
                let mut s = String::from("\"");
                while let Some(c) = chars.next() {
                    s.push(c);
                    if c == '"' {
                        // "" is an escaped quote inside SMT-LIB strings.
                        if chars.peek() == Some(&'"') {
                            chars.next();
                            continue;
                        }
                        break;
                    }
                }
                stack.last_mut().expect("level").push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().expect("level").push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err(Error::Solver("unbalanced parenthesis in solver output".into()));
    }
    Ok(stack.pop().expect("top level"))
}
