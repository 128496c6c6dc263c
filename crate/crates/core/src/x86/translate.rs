// SPDX-License-Identifier: Apache-2.0

//! Lowering of the supported x86 subset to the core language.
//!
//! Flags are not modelled. `cmp` and `test` store their operands in the
//! registers `cmp_l` and `cmp_r`; a conditional jump computes the negated
//! condition into `cmp_t` and branches on it, and a conditional move uses the
//! negated condition directly.

use std::collections::{BTreeMap, HashMap};

use super::parse::{parse_listing, AsmInstr, AsmItem, Operand};
use crate::error::{Error, Result};
use crate::muasm::{BinOp, Expr, Instr, Program, Reg, Value};

pub const CMP_LEFT: &str = "cmp_l";
pub const CMP_RIGHT: &str = "cmp_r";
pub const CMP_TEST: &str = "cmp_t";
pub const SCRATCH: &str = "tmp";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslateOptions {
    /// Lower unsupported instructions to `skip` instead of failing.
    pub permissive: bool,
}

/// Unsigned condition codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Cond {
    Below,
    BelowEq,
    Above,
    AboveEq,
    Equal,
    NotEqual,
}

impl Cond {
    fn parse(s: &str) -> Option<Cond> {
        Some(match s {
            "b" | "nae" | "c" => Cond::Below,
            "be" | "na" => Cond::BelowEq,
            "a" | "nbe" => Cond::Above,
            "ae" | "nb" | "nc" => Cond::AboveEq,
            "e" | "z" => Cond::Equal,
            "ne" | "nz" => Cond::NotEqual,
            _ => return None,
        })
    }

    /// 1 exactly when the condition does not hold for the last comparison.
    fn negated(self) -> Expr {
        let l = Expr::reg(CMP_LEFT);
        let r = Expr::reg(CMP_RIGHT);
        match self {
            Cond::Below => Expr::binary(BinOp::Le, r, l),
            Cond::BelowEq => Expr::binary(BinOp::Lt, r, l),
            Cond::Above => Expr::binary(BinOp::Le, l, r),
            Cond::AboveEq => Expr::binary(BinOp::Lt, l, r),
            Cond::Equal => Expr::binary(BinOp::Ne, l, r),
            Cond::NotEqual => Expr::binary(BinOp::Eq, l, r),
        }
    }
}

enum Pending {
    Plain(Instr),
    Beqz(Reg, String),
    Jmp(String),
}

const SIZED: [&str; 11] = ["mov", "add", "sub", "and", "or", "xor", "shl", "sal", "shr", "lea", "cmp"];

/// Strips a `q` size suffix; other sizes are rejected.
fn base_mnemonic(ins: &AsmInstr) -> Result<&str> {
    let m = ins.mnemonic.as_str();
    let known = |s: &str| SIZED.contains(&s) || s == "test" || s.strip_prefix("cmov").and_then(Cond::parse).is_some();
    if known(m) {
        return Ok(m);
    }
    if let Some((stem, suffix)) = m.split_at_checked(m.len().saturating_sub(1)) {
        if known(stem) {
            return match suffix {
                "q" => Ok(stem),
                _ => Err(Error::Translate {
                    line: ins.line,
                    msg: format!("`{m}` operates on a sub-register width; only 64-bit operations are supported"),
                }),
            };
        }
    }
    Ok(m)
}

struct Lowering<'s> {
    symbols: &'s BTreeMap<String, u64>,
    out: Vec<Pending>,
}

impl Lowering<'_> {
    fn err(ins: &AsmInstr, msg: impl Into<String>) -> Error {
        Error::Translate { line: ins.line, msg: format!("`{}`: {}", ins.mnemonic, msg.into()) }
    }

    fn emit(&mut self, i: Instr) {
        self.out.push(Pending::Plain(i));
    }

    fn address(&self, ins: &AsmInstr, op: &Operand) -> Result<Expr> {
        let Operand::Mem { disp, base, index, scale } = op else {
            return Err(Self::err(ins, format!("expected a memory operand, got {op}")));
        };
        let mut value = disp.offset as u64;
        if let Some(s) = &disp.symbol {
            let a = self.symbols.get(s).ok_or_else(|| Self::err(ins, format!("symbol `{s}` has no placement")))?;
            value = value.wrapping_add(*a);
        }
        let mut e: Option<Expr> = (value != 0 || (base.is_none() && index.is_none())).then(|| Expr::lit(value));
        let mut add = |t: Expr| {
            e = Some(match e.take() {
                Some(acc) => Expr::binary(BinOp::Add, acc, t),
                None => t,
            })
        };
        if let Some(b) = base {
            add(Expr::reg(b.as_str()));
        }
        if let Some(i) = index {
            let t = if *scale == 1 { Expr::reg(i.as_str()) } else { Expr::binary(BinOp::Mul, Expr::reg(i.as_str()), Expr::lit(*scale)) };
            add(t);
        }
        Ok(e.expect("non-empty address"))
    }

    /// Expression for a register or immediate operand; memory operands are
    /// loaded into `into` first.
    fn value(&mut self, ins: &AsmInstr, op: &Operand, into: &str) -> Result<Expr> {
        match op {
            Operand::Reg(r) => Ok(Expr::reg(r.as_str())),
            Operand::Imm(n) => Ok(Expr::lit(*n as u64)),
            Operand::Mem { .. } => {
                let a = self.address(ins, op)?;
                self.emit(Instr::Load(Reg::new(into), a));
                Ok(Expr::reg(into))
            }
            Operand::Label(l) => Err(Self::err(ins, format!("unexpected label `{l}`"))),
        }
    }

    fn two(ins: &AsmInstr) -> Result<(&Operand, &Operand)> {
        match ins.operands.as_slice() {
            [a, b] => Ok((a, b)),
            _ => Err(Self::err(ins, "expected two operands")),
        }
    }

    fn alu(&mut self, ins: &AsmInstr, op: BinOp) -> Result<()> {
        let (src, dst) = match (op, ins.operands.as_slice()) {
            (BinOp::Shl | BinOp::Shr, [dst]) => (Operand::Imm(1), dst.clone()),
            _ => {
                let (s, d) = Self::two(ins)?;
                (s.clone(), d.clone())
            }
        };
        match &dst {
            Operand::Reg(d) => {
                let v = self.value(ins, &src, SCRATCH)?;
                self.emit(Instr::Assign(Reg::new(d.as_str()), Expr::binary(op, Expr::reg(d.as_str()), v)));
            }
            Operand::Mem { .. } => {
                if matches!(src, Operand::Mem { .. }) {
                    return Err(Self::err(ins, "two memory operands"));
                }
                let a = self.address(ins, &dst)?;
                let v = self.value(ins, &src, SCRATCH)?;
                self.emit(Instr::Load(Reg::new(SCRATCH), a.clone()));
                self.emit(Instr::Assign(Reg::new(SCRATCH), Expr::binary(op, Expr::reg(SCRATCH), v)));
                self.emit(Instr::Store(Reg::new(SCRATCH), a));
            }
            other => return Err(Self::err(ins, format!("invalid destination {other}"))),
        }
        Ok(())
    }

    fn mov(&mut self, ins: &AsmInstr) -> Result<()> {
        let (src, dst) = Self::two(ins)?;
        match (src, dst) {
            (Operand::Mem { .. }, Operand::Mem { .. }) => Err(Self::err(ins, "two memory operands")),
            (_, Operand::Reg(d)) => {
                match src {
                    Operand::Mem { .. } => {
                        let a = self.address(ins, src)?;
                        self.emit(Instr::Load(Reg::new(d.as_str()), a));
                    }
                    _ => {
                        let v = self.value(ins, src, SCRATCH)?;
                        self.emit(Instr::Assign(Reg::new(d.as_str()), v));
                    }
                }
                Ok(())
            }
            (Operand::Reg(s), Operand::Mem { .. }) => {
                let a = self.address(ins, dst)?;
                self.emit(Instr::Store(Reg::new(s.as_str()), a));
                Ok(())
            }
            (Operand::Imm(n), Operand::Mem { .. }) => {
                let a = self.address(ins, dst)?;
                self.emit(Instr::Assign(Reg::new(SCRATCH), Expr::lit(*n as u64)));
                self.emit(Instr::Store(Reg::new(SCRATCH), a));
                Ok(())
            }
            _ => Err(Self::err(ins, "unsupported operand combination")),
        }
    }

    fn compare(&mut self, ins: &AsmInstr, test: bool) -> Result<()> {
        let (src, dst) = Self::two(ins)?;
        if test {
            let d = self.value(ins, dst, CMP_LEFT)?;
            let s = self.value(ins, src, SCRATCH)?;
            self.emit(Instr::Assign(Reg::new(CMP_LEFT), Expr::binary(BinOp::And, d, s)));
            self.emit(Instr::Assign(Reg::new(CMP_RIGHT), Expr::lit(0)));
            return Ok(());
        }
        for (op, reg) in [(dst, CMP_LEFT), (src, CMP_RIGHT)] {
            match op {
                Operand::Mem { .. } => {
                    let a = self.address(ins, op)?;
                    self.emit(Instr::Load(Reg::new(reg), a));
                }
                _ => {
                    let v = self.value(ins, op, SCRATCH)?;
                    self.emit(Instr::Assign(Reg::new(reg), v));
                }
            }
        }
        Ok(())
    }

    fn target(ins: &AsmInstr) -> Result<String> {
        match ins.operands.as_slice() {
            [Operand::Label(l)] => Ok(l.clone()),
            _ => Err(Self::err(ins, "expected a label operand")),
        }
    }

    fn instr(&mut self, ins: &AsmInstr) -> Result<bool> {
        let m = base_mnemonic(ins)?;
        match m {
            "mov" => self.mov(ins)?,
            "lea" => {
                let (src, dst) = Self::two(ins)?;
                let Operand::Reg(d) = dst else { return Err(Self::err(ins, "destination must be a register")) };
                let a = self.address(ins, src)?;
                self.emit(Instr::Assign(Reg::new(d.as_str()), a));
            }
            "add" => self.alu(ins, BinOp::Add)?,
            "sub" => self.alu(ins, BinOp::Sub)?,
            "and" => self.alu(ins, BinOp::And)?,
            "or" => self.alu(ins, BinOp::Or)?,
            "xor" => self.alu(ins, BinOp::Xor)?,
            "shl" | "sal" => self.alu(ins, BinOp::Shl)?,
            "shr" => self.alu(ins, BinOp::Shr)?,
            "cmp" => self.compare(ins, false)?,
            "test" => self.compare(ins, true)?,
            "jmp" => {
                let l = Self::target(ins)?;
                self.out.push(Pending::Jmp(l));
            }
            "lfence" => self.emit(Instr::Spbarr),
            "nop" => self.emit(Instr::Skip),
            _ => {
                if let Some(c) = m.strip_prefix('j').and_then(Cond::parse) {
                    let l = Self::target(ins)?;
                    self.emit(Instr::Assign(Reg::new(CMP_TEST), c.negated()));
                    self.out.push(Pending::Beqz(Reg::new(CMP_TEST), l));
                } else if let Some(c) = m.strip_prefix("cmov").and_then(Cond::parse) {
                    let (src, dst) = Self::two(ins)?;
                    let Operand::Reg(d) = dst else { return Err(Self::err(ins, "destination must be a register")) };
                    let v = self.value(ins, src, SCRATCH)?;
                    self.emit(Instr::CondAssign(Reg::new(d.as_str()), v, c.negated()));
                } else {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Translates parsed listing items.
pub fn translate_items(items: &[AsmItem], symbols: &BTreeMap<String, u64>, opts: TranslateOptions) -> Result<Program> {
    let mut lw = Lowering { symbols, out: Vec::new() };
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut label_lines: HashMap<String, usize> = HashMap::new();
    let mut line = 0;
    for item in items {
        match item {
            AsmItem::Label(l) => {
                if labels.insert(l.clone(), lw.out.len()).is_some() {
                    return Err(Error::Translate { line, msg: format!("label `{l}` defined twice") });
                }
            }
            AsmItem::Instr(ins) => {
                line = ins.line;
                let mark = lw.out.len();
                match lw.instr(ins) {
                    Ok(true) => {}
                    Ok(false) if opts.permissive => {
                        log::warn!("line {}: `{}` lowered to skip", ins.line, ins.mnemonic);
                        lw.out.truncate(mark);
                        lw.emit(Instr::Skip);
                    }
                    Ok(false) => {
                        return Err(Error::Translate {
                            line: ins.line,
                            msg: format!("unsupported instruction `{}`", ins.mnemonic),
                        })
                    }
                    Err(e) => return Err(e),
                }
                if let Some(Pending::Beqz(_, l) | Pending::Jmp(l)) = lw.out.last() {
                    label_lines.entry(l.clone()).or_insert(ins.line);
                }
            }
        }
    }
    let mut out = lw.out;
    for (l, line) in &label_lines {
        if !labels.contains_key(l) {
            return Err(Error::Translate { line: *line, msg: format!("undefined label `{l}`") });
        }
    }
    // A branch whose target is its own successor is padded with a skip.
    while let Some(i) = out.iter().enumerate().position(|(i, p)| {
        matches!(p, Pending::Beqz(_, l) if labels[l] == i + 1 && i + 1 < out.len())
    }) {
        out.insert(i + 1, Pending::Plain(Instr::Skip));
        for pos in labels.values_mut() {
            if *pos > i {
                *pos += 1;
            }
        }
    }
    let n = out.len();
    let resolve = |l: &str| {
        let pos = labels[l];
        if pos >= n {
            Value::Bot
        } else {
            Value::Word(pos as u64)
        }
    };
    let instrs: Vec<Instr> = out
        .into_iter()
        .map(|p| match p {
            Pending::Plain(i) => i,
            Pending::Beqz(r, l) => Instr::Beqz(r, resolve(&l)),
            Pending::Jmp(l) => Instr::Jmp(Expr::Lit(resolve(&l))),
        })
        .collect();
    if instrs.is_empty() {
        return Ok(Program::sequential([Instr::Skip])?);
    }
    Ok(Program::sequential(instrs)?)
}

/// Parses and translates an AT&T listing.
pub fn translate(text: &str, symbols: &BTreeMap<String, u64>, opts: TranslateOptions) -> Result<Program> {
    translate_items(&parse_listing(text)?, symbols, opts)
}
