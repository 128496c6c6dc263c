// SPDX-License-Identifier: Apache-2.0

//! Text format: one `LABEL: INSTR` per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::expr::{BinOp, Expr, Reg, UnOp};
use super::policy::parse_number;
use super::program::{Instr, Program};
use super::value::Value;
use crate::error::{Error, Result, WellFormedError};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(u64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

const OPS: [&str; 17] = [
    "<<", ">>", "<=", ">=", "==", "!=", "<", ">", "|", "^", "&", "+", "-", "*", "~", "!", "?",
];

fn lex(src: &str, line: usize, base_col: usize) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = base_col + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                i += 1;
            }
            let text = &src[start..i];
            let n = parse_number(text)
                .ok_or_else(|| Error::parse(line, col, format!("invalid number `{text}`")))?;
            out.push((Tok::Num(n), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && {
                let d = bytes[i] as char;
                d.is_ascii_alphanumeric() || d == '_' || d == '.'
            } {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), col));
        } else if c == '(' {
            out.push((Tok::LParen, col));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, col));
            i += 1;
        } else if let Some(op) = OPS.iter().find(|op| src[i..].starts_with(**op)) {
            out.push((Tok::Op(op), col));
            i += op.len();
        } else {
            return Err(Error::parse(line, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct ExprParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, self.col(), msg)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.peek() == Some(&Tok::Op(op_static(op))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn binary_level(&mut self, level: u8) -> Result<Expr> {
        if level > 8 {
            return self.unary();
        }
        let mut lhs = self.binary_level(level + 1)?;
        while let Some(Tok::Op(op)) = self.peek().cloned() {
            let (bop, swap) = match (level, op) {
                (1, "|") => (BinOp::Or, false),
                (2, "^") => (BinOp::Xor, false),
                (3, "&") => (BinOp::And, false),
                (4, "==") => (BinOp::Eq, false),
                (4, "!=") => (BinOp::Ne, false),
                (5, "<") => (BinOp::Lt, false),
                (5, "<=") => (BinOp::Le, false),
                (5, ">") => (BinOp::Lt, true),
                (5, ">=") => (BinOp::Le, true),
                (6, "<<") => (BinOp::Shl, false),
                (6, ">>") => (BinOp::Shr, false),
                (7, "+") => (BinOp::Add, false),
                (7, "-") => (BinOp::Sub, false),
                (8, "*") => (BinOp::Mul, false),
                _ => break,
            };
            self.pos += 1;
            let rhs = self.binary_level(level + 1)?;
            lhs = if swap { Expr::binary(bop, rhs, lhs) } else { Expr::binary(bop, lhs, rhs) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op("-") {
            return Ok(Expr::unary(UnOp::Neg, self.unary()?));
        }
        if self.eat_op("~") {
            return Ok(Expr::unary(UnOp::Not, self.unary()?));
        }
        if self.eat_op("!") {
            return Ok(Expr::binary(BinOp::Eq, self.unary()?, Expr::lit(0)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::lit(n))
            }
            Some(Tok::Ident(name)) => {
                if name == "end" {
                    return Err(self.err("`end` is only allowed as a jump target"));
                }
                self.pos += 1;
                Ok(Expr::Reg(Reg::new(&name)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.binary_level(1)?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?}"))),
            None => Err(self.err("expected an expression")),
        }
    }
}

fn op_static(op: &str) -> &'static str {
    OPS.iter().find(|o| **o == op).copied().unwrap_or("")
}

fn expr_parser(src: &str, line: usize, col: usize) -> Result<ExprParser> {
    Ok(ExprParser { toks: lex(src, line, col)?, pos: 0, line, end_col: col + src.len() })
}

fn finish(p: &ExprParser) -> Result<()> {
    if p.pos != p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(())
}

/// Parses a single expression.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = expr_parser(src, 1, 1)?;
    let e = p.binary_level(1)?;
    finish(&p)?;
    Ok(e)
}

fn parse_full_expr(src: &str, line: usize, col: usize) -> Result<Expr> {
    let mut p = expr_parser(src, line, col)?;
    let e = p.binary_level(1)?;
    finish(&p)?;
    Ok(e)
}

fn parse_reg(src: &str, line: usize, col: usize) -> Result<Reg> {
    let name = src.trim();
    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if !ok || name == "end" {
        return Err(Error::parse(line, col, format!("invalid register name `{name}`")));
    }
    Ok(Reg::new(name))
}

fn parse_target(src: &str, line: usize, col: usize) -> Result<Value> {
    let t = src.trim();
    if t == "end" {
        return Ok(Value::Bot);
    }
    parse_number(t)
        .map(Value::Word)
        .ok_or_else(|| Error::parse(line, col, format!("invalid branch target `{t}`")))
}

/// Column (1-based) of `part` inside `whole`, where `part` is a subslice.
fn col_of(whole: &str, part: &str) -> usize {
    let off = (part.as_ptr() as usize).wrapping_sub(whole.as_ptr() as usize);
    off.min(whole.len()) + 1
}

fn parse_instr(raw: &str, body: &str, line: usize) -> Result<Instr> {
    let body = body.trim();
    let c = |s: &str| col_of(raw, s);
    let (head, rest) = match body.find(char::is_whitespace) {
        Some(i) => (&body[..i], body[i..].trim_start()),
        None => (body, &body[body.len()..]),
    };
    let two_operands = |rest: &str| -> Result<(Reg, Expr)> {
        let Some(comma) = rest.find(',') else {
            return Err(Error::parse(line, c(rest), "expected `REG, EXPR`"));
        };
        let reg = parse_reg(&rest[..comma], line, c(rest))?;
        let e_src = &rest[comma + 1..];
        Ok((reg, parse_full_expr(e_src, line, c(e_src))?))
    };
    match head {
        "skip" | "spbarr" if !rest.is_empty() => {
            Err(Error::parse(line, c(rest), format!("`{head}` takes no operands")))
        }
        "skip" => Ok(Instr::Skip),
        "spbarr" => Ok(Instr::Spbarr),
        "load" => two_operands(rest).map(|(x, e)| Instr::Load(x, e)),
        "store" => two_operands(rest).map(|(x, e)| Instr::Store(x, e)),
        "jmp" => {
            if rest.trim() == "end" {
                Ok(Instr::Jmp(Expr::Lit(Value::Bot)))
            } else {
                Ok(Instr::Jmp(parse_full_expr(rest, line, c(rest))?))
            }
        }
        "beqz" => {
            let Some(comma) = rest.find(',') else {
                return Err(Error::parse(line, c(rest), "expected `REG, TARGET`"));
            };
            let reg = parse_reg(&rest[..comma], line, c(rest))?;
            let t_src = &rest[comma + 1..];
            Ok(Instr::Beqz(reg, parse_target(t_src, line, c(t_src))?))
        }
        _ => {
            let Some(arrow) = body.find("<-") else {
                return Err(Error::parse(line, c(body), format!("unknown instruction `{head}`")));
            };
            let reg = parse_reg(&body[..arrow], line, c(body))?;
            let rhs = &body[arrow + 2..];
            let mut p = expr_parser(rhs, line, c(rhs))?;
            let first = p.binary_level(1)?;
            if p.eat_op("?") {
                let value = p.binary_level(1)?;
                finish(&p)?;
                Ok(Instr::CondAssign(reg, value, first))
            } else {
                finish(&p)?;
                Ok(Instr::Assign(reg, first))
            }
        }
    }
}

/// Parses a program and checks well-formedness.
pub fn parse_program(text: &str) -> Result<Program> {
    let mut instrs = Vec::new();
    let mut lines: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(colon) = content.find(':') else {
            return Err(Error::parse(line, 1, "expected `LABEL: INSTRUCTION`"));
        };
        let label_src = content[..colon].trim();
        let label = parse_number(label_src).ok_or_else(|| {
            Error::parse(line, col_of(raw, content), format!("invalid label `{label_src}`"))
        })?;
        let ins = parse_instr(raw, &content[colon + 1..], line)?;
        if lines.insert(label, line).is_some() {
            return Err(Error::WellFormedAt { line, source: WellFormedError::DuplicateLabel(label) });
        }
        instrs.push((label, ins));
    }
    Program::new(instrs).map_err(|e| match e {
        WellFormedError::BranchToNext(l) | WellFormedError::PcTarget(l)
        | WellFormedError::DuplicateLabel(l) => {
            Error::WellFormedAt { line: lines.get(&l).copied().unwrap_or(0), source: e }
        }
        WellFormedError::MissingEntry => Error::WellFormed(e),
    })
}

pub fn print_instr(ins: &Instr) -> String {
    match ins {
        Instr::Skip => "skip".to_string(),
        Instr::Spbarr => "spbarr".to_string(),
        Instr::Assign(x, e) => format!("{x} <- {e}"),
        Instr::CondAssign(x, e, c) => format!("{x} <- {c} ? {e}"),
        Instr::Load(x, e) => format!("load {x}, {e}"),
        Instr::Store(x, e) => format!("store {x}, {e}"),
        Instr::Jmp(e) => format!("jmp {e}"),
        Instr::Beqz(x, l) => format!("beqz {x}, {l}"),
    }
}

/// Prints a program in the text format accepted by [`parse_program`].
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, (label, ins)) in p.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{label}: {}", print_instr(ins));
    }
    out
}
