// SPDX-License-Identifier: Apache-2.0

//! Reader for AT&T-syntax assembly listings.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::muasm::policy::parse_number;

/// Whole 64-bit general purpose registers.
pub const REGISTERS: [&str; 16] = [
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp", "r8", "r9", "r10", "r11", "r12", "r13",
    "r14", "r15",
];

const SUB_REGISTERS: [&str; 52] = [
    "eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp", "ax", "bx", "cx", "dx", "si", "di", "bp",
    "sp", "al", "bl", "cl", "dl", "ah", "bh", "ch", "dh", "sil", "dil", "bpl", "spl", "r8d", "r9d",
    "r10d", "r11d", "r12d", "r13d", "r14d", "r15d", "r8w", "r9w", "r10w", "r11w", "r12w", "r13w",
    "r14w", "r15w", "r8b", "r9b", "r10b", "r11b", "r12b", "r13b", "r14b", "r15b",
];

/// Displacement of a memory operand: an optional symbol plus an offset.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Disp {
    pub symbol: Option<String>,
    pub offset: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Reg(String),
    Imm(i64),
    /// `disp(base, index, scale)`.
    Mem { disp: Disp, base: Option<String>, index: Option<String>, scale: u64 },
    /// Bare name used as a jump target.
    Label(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "%{r}"),
            Operand::Imm(n) => write!(f, "${n}"),
            Operand::Label(l) => f.write_str(l),
            Operand::Mem { disp, base, index, scale } => {
                if let Some(s) = &disp.symbol {
                    f.write_str(s)?;
                    if disp.offset > 0 {
                        write!(f, "+{}", disp.offset)?;
                    }
                }
                if disp.offset < 0 || (disp.symbol.is_none() && disp.offset != 0) {
                    write!(f, "{}", disp.offset)?;
                }
                if base.is_some() || index.is_some() {
                    f.write_str("(")?;
                    if let Some(b) = base {
                        write!(f, "%{b}")?;
                    }
                    if let Some(i) = index {
                        write!(f, ",%{i},{scale}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AsmInstr {
    /// 1-based source line.
    pub line: usize,
    pub mnemonic: String,
    pub operands: Vec<Operand>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AsmItem {
    Label(String),
    Instr(AsmInstr),
}

/// Reads a symbol placement file: one `NAME ADDRESS` pair per line, `#`
/// comments allowed.
pub fn parse_symbols(text: &str) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(addr), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(i + 1, 1, "expected `NAME ADDRESS`"));
        };
        let addr = parse_number(addr).ok_or_else(|| Error::parse(i + 1, 1, format!("invalid address `{addr}`")))?;
        if out.insert(name.to_owned(), addr).is_some() {
            return Err(Error::parse(i + 1, 1, format!("symbol `{name}` placed twice")));
        }
    }
    Ok(out)
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Translate { line, msg: msg.into() }
}

fn register(line: usize, name: &str) -> Result<String> {
    let name = name.trim().to_ascii_lowercase();
    if REGISTERS.contains(&name.as_str()) {
        Ok(name)
    } else if SUB_REGISTERS.contains(&name.as_str()) {
        Err(err(line, format!("sub-register %{name} is not supported; use 64-bit registers")))
    } else {
        Err(err(line, format!("unknown register %{name}")))
    }
}

fn integer(s: &str) -> Option<i64> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let v = parse_number(body)?;
    let v = i64::try_from(v).ok().or_else(|| (!neg).then_some(v as i64))?;
    Some(if neg { v.wrapping_neg() } else { v })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn displacement(line: usize, s: &str) -> Result<Disp> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Disp::default());
    }
    if let Some(n) = integer(s) {
        return Ok(Disp { symbol: None, offset: n });
    }
    let split = s.rfind(['+', '-']).filter(|&i| i > 0);
    let (sym, off) = match split {
        Some(i) => {
            let off = integer(&s[i..].replace('+', "")).ok_or_else(|| err(line, format!("invalid displacement `{s}`")))?;
            (s[..i].trim(), off)
        }
        None => (s, 0),
    };
    if !is_ident(sym) {
        return Err(err(line, format!("invalid displacement `{s}`")));
    }
    Ok(Disp { symbol: Some(sym.to_owned()), offset: off })
}

fn operand(line: usize, s: &str, branch: bool) -> Result<Operand> {
    let s = s.trim();
    if let Some(r) = s.strip_prefix('%') {
        return Ok(Operand::Reg(register(line, r)?));
    }
    if let Some(n) = s.strip_prefix('$') {
        return integer(n).map(Operand::Imm).ok_or_else(|| err(line, format!("invalid immediate `{s}`")));
    }
    if branch && is_ident(s) {
        return Ok(Operand::Label(s.to_owned()));
    }
    let (disp, inner) = match s.find('(') {
        Some(i) => {
            let inner = s[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| err(line, format!("unbalanced memory operand `{s}`")))?;
            (&s[..i], Some(inner))
        }
        None => (s, None),
    };
    let disp = displacement(line, disp)?;
    let (mut base, mut index, mut scale) = (None, None, 1);
    if let Some(inner) = inner {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let reg = |p: &str| -> Result<String> {
            let r = p.strip_prefix('%').ok_or_else(|| err(line, format!("expected a register in `{s}`")))?;
            register(line, r)
        };
        if !parts[0].is_empty() {
            base = Some(reg(parts[0])?);
        }
        if let Some(i) = parts.get(1) {
            index = Some(reg(i)?);
        }
        if let Some(sc) = parts.get(2) {
            scale = parse_number(sc)
                .filter(|n| [1, 2, 4, 8].contains(n))
                .ok_or_else(|| err(line, format!("invalid scale in `{s}`")))?;
        }
        if parts.len() > 3 {
            return Err(err(line, format!("invalid memory operand `{s}`")));
        }
    }
    Ok(Operand::Mem { disp, base, index, scale })
}

/// Splits operands on commas outside parentheses.
fn split_operands(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(&s[start..]);
    }
    out
}

/// Parses a listing into labels and instructions. Directives (lines
/// starting with `.`) and comments (`#`, `;`) are ignored.
pub fn parse_listing(text: &str) -> Result<Vec<AsmItem>> {
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut rest = raw.split(['#', ';']).next().unwrap_or("").trim();
        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if !is_ident(name) {
                return Err(err(line, format!("invalid label `{name}`")));
            }
            items.push(AsmItem::Label(name.to_owned()));
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() || rest.starts_with('.') {
            continue;
        }
        let (mnemonic, ops) = match rest.find(char::is_whitespace) {
            Some(k) => (&rest[..k], rest[k..].trim()),
            None => (rest, ""),
        };
        let mnemonic = mnemonic.to_ascii_lowercase();
        let branch = mnemonic.starts_with('j');
        let operands = split_operands(ops)
            .into_iter()
            .map(|o| operand(line, o, branch))
            .collect::<Result<Vec<_>>>()?;
        items.push(AsmItem::Instr(AsmInstr { line, mnemonic, operands }));
    }
    Ok(items)
}
