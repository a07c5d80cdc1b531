//! Executable class invariant for [`FixedLongMap`].
//!
//! `check` accepts any state, including corrupted ones loaded from a dump,
//! and reports which condition fails first instead of panicking.

use std::collections::HashSet;
use std::fmt;

use crate::map::FixedLongMap;
use crate::probe::{is_valid_mask, seek_entry_or_open, SeekResult, TOMBSTONE};

/// A key that may be stored in the key array: anything except `0` and `MIN`.
#[inline]
pub fn is_valid_key(k: i64) -> bool {
    k != 0 && k != TOMBSTONE
}

/// Number of valid keys in `a[from..to]`.
pub fn count_valid_keys(a: &[i64], from: usize, to: usize) -> u32 {
    assert!(from <= to && to <= a.len(), "bad range {from}..{to} for length {}", a.len());
    a[from..to].iter().filter(|&&k| is_valid_key(k)).count() as u32
}

/// Whether `k` occurs in `a[from..]`.
pub fn array_contains_key(a: &[i64], k: i64, from: usize) -> bool {
    debug_assert!(from <= a.len());
    a.get(from..).is_some_and(|tail| tail.contains(&k))
}

/// First index `>= from` holding `k`.
///
/// # Panics
///
/// If `k` does not occur in `a[from..]`.
pub fn array_scan_for_key(a: &[i64], k: i64, from: usize) -> usize {
    match a[from..].iter().position(|&q| q == k) {
        Some(i) => from + i,
        None => panic!("array_scan_for_key: key {k} not present from index {from}"),
    }
}

/// True iff no valid key occurs twice in `a[from..]` or appears in `seen`.
pub fn array_no_duplicates(a: &[i64], from: usize, seen: &[i64]) -> bool {
    first_duplicate(a, from, seen).is_none()
}

/// Index of the first valid key in `a[from..]` already present in `seen` or
/// earlier in the scan.
fn first_duplicate(a: &[i64], from: usize, seen: &[i64]) -> Option<usize> {
    let mut acc: HashSet<i64> = seen.iter().copied().collect();
    (from..a.len()).find(|&i| is_valid_key(a[i]) && !acc.insert(a[i]))
}

/// First index whose valid key is not found at that index by
/// `seek_entry_or_open`.
fn first_unseekable(keys: &[i64], mask: u32) -> Option<(usize, SeekResult)> {
    keys.iter().enumerate().find_map(|(i, &k)| {
        if !is_valid_key(k) {
            return None;
        }
        let r = seek_entry_or_open(k, keys, mask);
        (r != SeekResult::Found(i as u32)).then_some((i, r))
    })
}

/// True iff every stored valid key is found at its own index.
///
/// Requires `keys.len() == mask + 1` with a valid mask.
pub fn all_keys_seekable(keys: &[i64], mask: u32) -> bool {
    assert!(is_valid_mask(mask) && keys.len() == mask as usize + 1);
    first_unseekable(keys, mask).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidMask { mask: u32 },
    KeysLength { len: usize, expected: usize },
    ValuesLength { len: usize, expected: usize },
    ArraySizeOutOfRange { array_size: u32, capacity: usize },
    ExtraKeysOutOfRange { extra_keys: u32 },
    CountMismatch { counted: u32, array_size: u32 },
    Unseekable { index: usize, key: i64, seek: SeekResult },
    Duplicate { index: usize, key: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidMask { mask } => write!(f, "mask {mask} is not 2^n - 1 with n <= 30"),
            Violation::KeysLength { len, expected } => write!(f, "keys length {len}, expected {expected}"),
            Violation::ValuesLength { len, expected } => write!(f, "values length {len}, expected {expected}"),
            Violation::ArraySizeOutOfRange { array_size, capacity } => {
                write!(f, "array size {array_size} exceeds capacity {capacity}")
            }
            Violation::ExtraKeysOutOfRange { extra_keys } => write!(f, "extra keys {extra_keys} not in 0..=3"),
            Violation::CountMismatch { counted, array_size } => {
                write!(f, "{counted} valid keys in array but array size is {array_size}")
            }
            Violation::Unseekable { index, key, seek } => {
                write!(f, "key {key} at index {index} not reachable by probing (got {seek:?})")
            }
            Violation::Duplicate { index, key } => write!(f, "key {key} at index {index} occurs earlier in the array"),
        }
    }
}

/// Outcome of [`check`]. The map is valid iff all four flags are set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub simple_valid: bool,
    pub count_matches_size: bool,
    pub all_keys_seekable: bool,
    pub no_duplicates: bool,
    pub first_violation: Option<Violation>,
}

impl InvariantReport {
    pub fn is_valid(&self) -> bool {
        self.simple_valid && self.count_matches_size && self.all_keys_seekable && self.no_duplicates
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "simple_valid:       {}", self.simple_valid)?;
        writeln!(f, "count_matches_size: {}", self.count_matches_size)?;
        writeln!(f, "all_keys_seekable:  {}", self.all_keys_seekable)?;
        writeln!(f, "no_duplicates:      {}", self.no_duplicates)?;
        match &self.first_violation {
            Some(v) => write!(f, "first violation:    {v}"),
            None => write!(f, "valid:              true"),
        }
    }
}

fn simple_violation(m: &FixedLongMap) -> Option<Violation> {
    let expected = m.mask as usize + 1;
    if !is_valid_mask(m.mask) {
        Some(Violation::InvalidMask { mask: m.mask })
    } else if m.values.len() != expected {
        Some(Violation::ValuesLength { len: m.values.len(), expected })
    } else if m.keys.len() != m.values.len() {
        Some(Violation::KeysLength { len: m.keys.len(), expected })
    } else if m.array_size as usize > expected {
        Some(Violation::ArraySizeOutOfRange { array_size: m.array_size, capacity: expected })
    } else if m.extra_keys > 3 {
        Some(Violation::ExtraKeysOutOfRange { extra_keys: m.extra_keys })
    } else {
        None
    }
}

/// Evaluates the full invariant on `m`.
///
/// Seekability needs a well-formed mask and key array, so it is reported
/// false without being evaluated when the simple conditions fail.
pub fn check(m: &FixedLongMap) -> InvariantReport {
    let simple = simple_violation(m);
    let simple_valid = simple.is_none();

    let counted = count_valid_keys(&m.keys, 0, m.keys.len());
    let count_violation =
        (counted != m.array_size).then_some(Violation::CountMismatch { counted, array_size: m.array_size });

    let seek_violation = if simple_valid {
        first_unseekable(&m.keys, m.mask).map(|(index, seek)| Violation::Unseekable { index, key: m.keys[index], seek })
    } else {
        None
    };

    let dup_violation =
        first_duplicate(&m.keys, 0, &[]).map(|index| Violation::Duplicate { index, key: m.keys[index] });

    InvariantReport {
        simple_valid,
        count_matches_size: count_violation.is_none(),
        all_keys_seekable: simple_valid && seek_violation.is_none(),
        no_duplicates: dup_violation.is_none(),
        first_violation: simple.or(count_violation).or(seek_violation).or(dup_violation),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::zero_default;
    use crate::probe::{next_probe, to_index};
    use proptest::prelude::*;

    const MIN: i64 = i64::MIN;

    #[test]
    fn valid_keys() {
        assert!(!is_valid_key(0));
        assert!(!is_valid_key(MIN));
        assert!(is_valid_key(1));
        assert!(is_valid_key(i64::MAX));
    }

    #[test]
    fn counting() {
        assert_eq!(count_valid_keys(&[0; 8], 0, 8), 0);
        assert_eq!(count_valid_keys(&[0, 7, MIN, 3], 0, 4), 2);
        assert_eq!(count_valid_keys(&[0, 7, MIN, 3], 2, 4), 1);
    }

    #[test]
    fn containment_and_scan() {
        assert!(array_contains_key(&[0, 7, 0], 7, 0));
        assert_eq!(array_scan_for_key(&[0, 7, 0], 7, 0), 1);
        assert!(!array_contains_key(&[0, 7, 0], 7, 2));
        assert!(array_contains_key(&[7, 0, 7], 7, 1));
        assert_eq!(array_scan_for_key(&[7, 0, 7], 7, 1), 2);
        assert!(!array_contains_key(&[7], 7, 1));
    }

    #[test]
    #[should_panic(expected = "not present")]
    fn scan_for_absent_key_panics() {
        array_scan_for_key(&[0, 7, 0], 7, 2);
    }

    #[test]
    fn duplicates() {
        assert!(array_no_duplicates(&[0, MIN, 0, MIN], 0, &[]));
        assert!(!array_no_duplicates(&[5, 0, 5], 0, &[]));
        assert!(!array_no_duplicates(&[5], 0, &[5]));
        assert!(array_no_duplicates(&[5, 0, 5], 1, &[]));
    }

    #[test]
    fn seekability() {
        let mask = 15;
        assert!(all_keys_seekable(&[0; 16], mask));

        let k = 9_000_001;
        let home = to_index(k, mask) as usize;
        let mut keys = vec![0; 16];
        keys[home] = k;
        assert!(all_keys_seekable(&keys, mask));

        let mut keys = vec![0; 16];
        keys[(home + 1) & mask as usize] = k;
        assert!(!all_keys_seekable(&keys, mask));

        // behind a tombstone on the probe chain is fine
        let mut keys = vec![0; 16];
        keys[home] = MIN;
        keys[next_probe(home as u32, 1, mask) as usize] = k;
        assert!(all_keys_seekable(&keys, mask));
    }

    #[test]
    fn fresh_map_is_valid() {
        let m = FixedLongMap::new(63, zero_default()).unwrap();
        let r = check(&m);
        assert!(r.is_valid());
        assert_eq!(r.first_violation, None);
    }

    #[test]
    fn corrupted_size_is_reported() {
        let mut m = FixedLongMap::new(7, zero_default()).unwrap();
        m.update(5, 1);
        m.array_size += 1;
        let r = check(&m);
        assert!(r.simple_valid);
        assert!(!r.count_matches_size);
        assert!(r.all_keys_seekable && r.no_duplicates);
        assert!(!r.is_valid());
        assert_eq!(r.first_violation, Some(Violation::CountMismatch { counted: 1, array_size: 2 }));
    }

    #[test]
    fn structural_violations() {
        let mut m = FixedLongMap::new(7, zero_default()).unwrap();
        m.extra_keys = 4;
        let r = check(&m);
        assert!(!r.simple_valid && !r.all_keys_seekable);
        assert_eq!(r.first_violation, Some(Violation::ExtraKeysOutOfRange { extra_keys: 4 }));

        let mut m = FixedLongMap::new(7, zero_default()).unwrap();
        m.mask = 5;
        assert_eq!(check(&m).first_violation, Some(Violation::InvalidMask { mask: 5 }));

        let mut m = FixedLongMap::new(7, zero_default()).unwrap();
        m.values.pop();
        assert!(matches!(check(&m).first_violation, Some(Violation::ValuesLength { len: 7, expected: 8 })));

        let mut m = FixedLongMap::new(1, zero_default()).unwrap();
        m.array_size = 3;
        assert!(!check(&m).simple_valid);
    }

    #[test]
    fn duplicate_key_is_reported() {
        let mut m = FixedLongMap::new(7, zero_default()).unwrap();
        m.update(5, 1);
        let at = m.keys.iter().position(|&k| k == 5).unwrap();
        let other = (at + 4) % 8;
        m.keys[other] = 5;
        m.array_size += 1;
        let r = check(&m);
        assert!(!r.no_duplicates);
        assert!(r.count_matches_size);
    }

    proptest! {
        #[test]
        fn count_is_additive(a in prop::collection::vec(prop_oneof![Just(0i64), Just(MIN), any::<i64>()], 0..40),
                             cuts in (0usize..=40, 0usize..=40, 0usize..=40)) {
            let n = a.len();
            let mut c = [cuts.0 % (n + 1), cuts.1 % (n + 1), cuts.2 % (n + 1)];
            c.sort();
            let [from, mid, to] = c;
            prop_assert_eq!(
                count_valid_keys(&a, from, to),
                count_valid_keys(&a, from, mid) + count_valid_keys(&a, mid, to)
            );
        }

        #[test]
        fn duplicates_match_brute_force(a in prop::collection::vec(-3i64..4, 0..12), seen in prop::collection::vec(1i64..4, 0..3)) {
            let mut all: Vec<i64> = seen.clone();
            all.extend(a.iter().copied().filter(|&k| is_valid_key(k)));
            let brute = (0..all.len()).all(|i| (i + 1..all.len()).all(|j| all[i] != all[j]));
            // the accumulator starts from `seen`, which is assumed duplicate-free
            let seen_unique = (0..seen.len()).all(|i| (i + 1..seen.len()).all(|j| seen[i] != seen[j]));
            prop_assume!(seen_unique);
            prop_assert_eq!(array_no_duplicates(&a, 0, &seen), brute);
        }
    }
}
