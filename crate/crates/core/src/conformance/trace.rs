//! Plain-text operation traces.
//!
//! ```text
//! mask 255
//! U 17 -4
//! G 17
//! C 0
//! R 17
//! ```
//!
//! The first line gives the table mask. Each following line is one
//! operation; keys and values are signed decimal `i64`. Blank lines are
//! ignored.

use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::probe::is_valid_mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceOp {
    Update(i64, i64),
    Remove(i64),
    Get(i64),
    Contains(i64),
}

impl TraceOp {
    pub fn key(self) -> i64 {
        match self {
            TraceOp::Update(k, _) | TraceOp::Remove(k) | TraceOp::Get(k) | TraceOp::Contains(k) => k,
        }
    }
}

impl fmt::Display for TraceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceOp::Update(k, v) => write!(f, "U {k} {v}"),
            TraceOp::Remove(k) => write!(f, "R {k}"),
            TraceOp::Get(k) => write!(f, "G {k}"),
            TraceOp::Contains(k) => write!(f, "C {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub mask: u32,
    pub ops: Vec<TraceOp>,
}

#[derive(Debug, Error)]
pub enum TraceParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: mask {mask} is not 2^n - 1 with n <= 30")]
    InvalidMask { line: usize, mask: i64 },
    #[error("empty trace: missing `mask` header")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> TraceParseError {
    TraceParseError::Syntax { line, message: message.into() }
}

fn parse_int(line: usize, tok: Option<&str>, what: &str) -> Result<i64, TraceParseError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

fn parse_op(line: usize, text: &str) -> Result<TraceOp, TraceParseError> {
    let mut toks = text.split_whitespace();
    let tag = toks.next().expect("caller skips blank lines");
    let op = match tag {
        "U" => TraceOp::Update(parse_int(line, toks.next(), "key")?, parse_int(line, toks.next(), "value")?),
        "R" => TraceOp::Remove(parse_int(line, toks.next(), "key")?),
        "G" => TraceOp::Get(parse_int(line, toks.next(), "key")?),
        "C" => TraceOp::Contains(parse_int(line, toks.next(), "key")?),
        other => return Err(syntax(line, format!("unknown operation `{other}`"))),
    };
    if let Some(extra) = toks.next() {
        return Err(syntax(line, format!("unexpected `{extra}`")));
    }
    Ok(op)
}

/// Parses a trace. Line numbers in errors are 1-based.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, TraceParseError> {
    let mut mask = None;
    let mut ops = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match mask {
            None => {
                let mut toks = text.split_whitespace();
                if toks.next() != Some("mask") {
                    return Err(syntax(line_no, "expected `mask <n>` header"));
                }
                let m = parse_int(line_no, toks.next(), "mask")?;
                if toks.next().is_some() {
                    return Err(syntax(line_no, "trailing tokens after mask"));
                }
                if !(0..=u32::MAX as i64).contains(&m) || !is_valid_mask(m as u32) {
                    return Err(TraceParseError::InvalidMask { line: line_no, mask: m });
                }
                mask = Some(m as u32);
            }
            Some(_) => ops.push(parse_op(line_no, text)?),
        }
    }
    let mask = mask.ok_or(TraceParseError::MissingHeader)?;
    Ok(Trace { mask, ops })
}

pub fn write_trace<W: Write>(mut w: W, trace: &Trace) -> io::Result<()> {
    writeln!(w, "mask {}", trace.mask)?;
    for op in &trace.ops {
        writeln!(w, "{op}")?;
    }
    Ok(())
}
