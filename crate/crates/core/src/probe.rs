//! Hashing and quadratic probing over a raw `keys` array.
//!
//! These functions are free of any map state: they take the key array and
//! its mask explicitly so that the invariant checker and the conformance
//! suite can run them against arbitrary arrays.
//!
//! Slot encoding in `keys`:
//!
//! * `0` marks a never-used slot and terminates every probe.
//! * [`TOMBSTONE`] (`i64::MIN`) marks a slot whose key was removed. Lookups
//!   skip it; insertions may reuse it.
//! * Anything else is a stored key.

/// Marker written into `keys` when a key is removed.
pub const TOMBSTONE: i64 = i64::MIN;

/// Upper bound on probe iterations for a single seek.
///
/// A seek that has advanced this many times without reaching the wanted
/// key or a free slot reports [`SeekResult::Undefined`].
pub const MAX_PROBES: u32 = 2048;

/// Largest permitted mask, `2^30 - 1`.
pub const MAX_MASK: u32 = (1 << 30) - 1;

/// Largest permitted mask exponent.
pub const MAX_MASK_EXPONENT: u32 = 30;

/// Returns `true` if `mask` is `2^n - 1` for some `0 <= n <= 30`.
#[inline]
pub fn is_valid_mask(mask: u32) -> bool {
    mask <= MAX_MASK && (mask & mask.wrapping_add(1)) == 0
}

/// Mask for a table of `2^exponent` slots.
#[inline]
pub fn mask_for_exponent(exponent: u32) -> u32 {
    assert!(exponent <= MAX_MASK_EXPONENT, "mask exponent {exponent} > 30");
    (1u32 << exponent) - 1
}

/// Home slot of `k`.
///
/// Folds the key to 32 bits, then applies a multiply/xor-shift finaliser.
/// All shifts are logical and the multiplication wraps modulo `2^32`.
#[inline]
pub fn to_index(k: i64, mask: u32) -> u32 {
    let k = k as u64;
    let h = ((k ^ (k >> 32)) & 0xFFFF_FFFF) as u32;
    let x = (h ^ (h >> 16)).wrapping_mul(0x85EB_CA6B);
    (x ^ (x >> 13)) & mask
}

/// Next slot in the probe sequence.
///
/// `x` is the iteration counter *after* incrementing, so the first call
/// from the home slot passes `x = 1`.
#[inline]
pub fn next_probe(e: u32, x: u32, mask: u32) -> u32 {
    let x = x as i32;
    let step = 2i32.wrapping_mul(x.wrapping_add(1)).wrapping_mul(x).wrapping_sub(3);
    (e as i32).wrapping_add(step) as u32 & mask
}

/// Outcome of a seek.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeekResult {
    /// The key sits at this index.
    Found(u32),
    /// The key is absent; the index points at a `0` slot.
    ///
    /// When produced by [`seek_entry`] the index may instead point at a
    /// tombstone and must not be used.
    MissingZero(u32),
    /// The key is absent; the index is the first tombstone crossed on the
    /// way to the terminating `0`.
    MissingVacant(u32),
    /// The probe bound was reached.
    Undefined,
}

impl SeekResult {
    pub fn is_found(self) -> bool {
        matches!(self, SeekResult::Found(_))
    }

    pub fn is_missing(self) -> bool {
        matches!(self, SeekResult::MissingZero(_) | SeekResult::MissingVacant(_))
    }

    pub fn index(self) -> Option<u32> {
        match self {
            SeekResult::Found(i) | SeekResult::MissingZero(i) | SeekResult::MissingVacant(i) => Some(i),
            SeekResult::Undefined => None,
        }
    }
}

/// Result of the first probing phase: where it stopped and after how many
/// iterations. Only the seek functions consume it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Intermediate {
    pub undefined: bool,
    pub index: u32,
    pub x: u32,
}

/// A seek result together with the iteration count it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeekTrace {
    pub result: SeekResult,
    /// Value of the iteration counter when the seek returned. Equals
    /// [`MAX_PROBES`] exactly when the result is `Undefined`.
    pub iterations: u32,
}

impl SeekTrace {
    /// Number of key slots read.
    pub fn probe_length(&self) -> u32 {
        if self.result == SeekResult::Undefined {
            self.iterations
        } else {
            self.iterations + 1
        }
    }
}

#[inline]
fn is_zero_or_tombstone(q: i64) -> bool {
    q.wrapping_add(q) == 0
}

/// Probes from `e` until a slot holding `k`, `0` or a tombstone.
pub fn seek_key_or_zero_or_min(mut x: u32, mut e: u32, k: i64, keys: &[i64], mask: u32) -> Intermediate {
    debug_assert!(e <= mask);
    loop {
        if x >= MAX_PROBES {
            return Intermediate { undefined: true, index: e, x };
        }
        let q = keys[e as usize];
        if q == k || is_zero_or_tombstone(q) {
            return Intermediate { undefined: false, index: e, x };
        }
        x += 1;
        e = next_probe(e, x, mask);
    }
}

fn seek_return_vacant_traced(mut x: u32, mut e: u32, vacant: u32, k: i64, keys: &[i64], mask: u32) -> SeekTrace {
    debug_assert!(e <= mask && vacant <= mask);
    loop {
        if x >= MAX_PROBES {
            return SeekTrace { result: SeekResult::Undefined, iterations: x };
        }
        let q = keys[e as usize];
        if q == k {
            return SeekTrace { result: SeekResult::Found(e), iterations: x };
        }
        if q == 0 {
            return SeekTrace { result: SeekResult::MissingVacant(vacant), iterations: x };
        }
        x += 1;
        e = next_probe(e, x, mask);
    }
}

/// Second probing phase, entered after a tombstone at `vacant` was seen.
pub fn seek_key_or_zero_return_vacant(x: u32, e: u32, vacant: u32, k: i64, keys: &[i64], mask: u32) -> SeekResult {
    seek_return_vacant_traced(x, e, vacant, k, keys, mask).result
}

/// [`seek_entry_or_open`] with the iteration count exposed.
pub fn seek_entry_or_open_traced(k: i64, keys: &[i64], mask: u32) -> SeekTrace {
    let first = seek_key_or_zero_or_min(0, to_index(k, mask), k, keys, mask);
    if first.undefined {
        return SeekTrace { result: SeekResult::Undefined, iterations: first.x };
    }
    let q = keys[first.index as usize];
    if q == k {
        SeekTrace { result: SeekResult::Found(first.index), iterations: first.x }
    } else if q == 0 {
        SeekTrace { result: SeekResult::MissingZero(first.index), iterations: first.x }
    } else {
        debug_assert_eq!(q, TOMBSTONE);
        seek_return_vacant_traced(first.x, first.index, first.index, k, keys, mask)
    }
}

/// [`seek_entry`] with the iteration count exposed.
pub fn seek_entry_traced(k: i64, keys: &[i64], mask: u32) -> SeekTrace {
    let mut trace = seek_entry_or_open_traced(k, keys, mask);
    if let SeekResult::MissingVacant(i) = trace.result {
        trace.result = SeekResult::MissingZero(i);
    }
    trace
}

/// Locates `k` for insertion: its slot if present, otherwise the best free
/// slot (first tombstone crossed, else the terminating `0`).
///
/// `k` must be a valid key (neither `0` nor [`TOMBSTONE`]).
pub fn seek_entry_or_open(k: i64, keys: &[i64], mask: u32) -> SeekResult {
    seek_entry_or_open_traced(k, keys, mask).result
}

/// Locates `k` for lookup. Same walk as [`seek_entry_or_open`], but every
/// `MissingVacant` is reported as `MissingZero`; only `Found` indices are
/// meaningful.
pub fn seek_entry(k: i64, keys: &[i64], mask: u32) -> SeekResult {
    seek_entry_traced(k, keys, mask).result
}
