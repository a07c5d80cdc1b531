//! Text dump of a map's raw state.
//!
//! ```text
//! mask 7
//! extra 1 42 0
//! size 2
//! slot 3 17 170
//! slot 5 -9223372036854775808 0
//! slot 6 99 990
//! ```
//!
//! `extra` carries the sentinel flags followed by the values for `0` and
//! `MIN`. `size` is optional; when omitted the array size is the number of
//! valid keys listed. Slots not listed hold key `0` and value `0`.
//!
//! Loading does not validate the state beyond what is needed to build the
//! arrays: an invalid mask or inconsistent size is left for the invariant
//! checker to report.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::invariant::is_valid_key;
use crate::map::{FixedLongMap, RawParts};
use crate::probe::MAX_MASK;

#[derive(Debug, Error)]
pub enum StateParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> StateParseError {
    StateParseError::Syntax { line, message: message.into() }
}

fn fields<const N: usize>(line: usize, toks: &[&str]) -> Result<[i64; N], StateParseError> {
    if toks.len() != N {
        return Err(syntax(line, format!("expected {N} numbers, found {}", toks.len())));
    }
    let mut out = [0i64; N];
    for (slot, tok) in out.iter_mut().zip(toks) {
        *slot = tok.parse().map_err(|_| syntax(line, format!("bad number `{tok}`")))?;
    }
    Ok(out)
}

fn to_u32(line: usize, v: i64, what: &str) -> Result<u32, StateParseError> {
    u32::try_from(v).map_err(|_| syntax(line, format!("{what} {v} out of range")))
}

/// Reads a dump into raw parts.
pub fn parse_state<R: BufRead>(reader: R) -> Result<RawParts, StateParseError> {
    let mut parts: Option<RawParts> = None;
    let mut extra_seen = false;
    let mut size: Option<u32> = None;
    let mut listed = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some((&tag, rest)) = toks.split_first() else { continue };
        match (tag, parts.as_mut()) {
            ("mask", None) => {
                let [m] = fields::<1>(line_no, rest)?;
                let mask = to_u32(line_no, m, "mask")?;
                if mask > MAX_MASK {
                    return Err(syntax(line_no, format!("mask {mask} exceeds {MAX_MASK}")));
                }
                let len = mask as usize + 1;
                parts = Some(RawParts {
                    mask,
                    keys: vec![0; len],
                    values: vec![0; len],
                    array_size: 0,
                    extra_keys: 0,
                    zero_value: 0,
                    min_value: 0,
                });
                listed = vec![false; len];
            }
            (_, None) => return Err(syntax(line_no, "expected `mask <n>` first")),
            ("mask", Some(_)) => return Err(syntax(line_no, "duplicate mask line")),
            ("extra", Some(p)) => {
                if extra_seen {
                    return Err(syntax(line_no, "duplicate extra line"));
                }
                let [e, z, m] = fields::<3>(line_no, rest)?;
                p.extra_keys = to_u32(line_no, e, "extra keys")?;
                p.zero_value = z;
                p.min_value = m;
                extra_seen = true;
            }
            ("size", Some(_)) => {
                if size.is_some() {
                    return Err(syntax(line_no, "duplicate size line"));
                }
                let [s] = fields::<1>(line_no, rest)?;
                size = Some(to_u32(line_no, s, "size")?);
            }
            ("slot", Some(p)) => {
                let [idx, k, v] = fields::<3>(line_no, rest)?;
                let idx = usize::try_from(idx)
                    .ok()
                    .filter(|&i| i < p.keys.len())
                    .ok_or_else(|| syntax(line_no, format!("slot index {idx} outside 0..={}", p.mask)))?;
                if std::mem::replace(&mut listed[idx], true) {
                    return Err(syntax(line_no, format!("slot {idx} listed twice")));
                }
                p.keys[idx] = k;
                p.values[idx] = v;
            }
            (other, Some(_)) => return Err(syntax(line_no, format!("unknown line `{other}`"))),
        }
    }

    let mut parts = parts.ok_or(StateParseError::Missing("mask"))?;
    if !extra_seen {
        return Err(StateParseError::Missing("extra"));
    }
    parts.array_size = match size {
        Some(s) => s,
        None => parts.keys.iter().filter(|&&k| is_valid_key(k)).count() as u32,
    };
    Ok(parts)
}

/// Writes `m` in dump format, listing every slot whose key or value is
/// nonzero.
pub fn write_state<W: Write>(mut w: W, m: &FixedLongMap) -> io::Result<()> {
    writeln!(w, "mask {}", m.mask())?;
    writeln!(w, "extra {} {} {}", m.extra_keys(), m.zero_value(), m.min_value())?;
    writeln!(w, "size {}", m.array_size())?;
    for (i, (&k, &v)) in m.keys().iter().zip(m.values()).enumerate() {
        if k != 0 || v != 0 {
            writeln!(w, "slot {i} {k} {v}")?;
        }
    }
    Ok(())
}
