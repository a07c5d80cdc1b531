//! Model extraction and the checks that tie a [`FixedLongMap`] to its
//! [`OrderedListMap`] model.

mod fuzz;
mod trace;

use std::collections::HashMap;
use std::fmt;

pub use fuzz::{
    run_fuzz, run_trace, shrink, CheckOptions, Divergence, FuzzConfig, FuzzReport, MapUnderTest, OpCounts, OpOutcome,
    ProbeStats, TraceResult,
};
pub use trace::{parse_trace, write_trace, Trace, TraceOp, TraceParseError};

use crate::invariant::{array_contains_key, is_valid_key};
use crate::list_map::OrderedListMap;
use crate::map::FixedLongMap;
use crate::probe::{seek_entry, seek_entry_or_open, SeekResult};

/// Model of the map's current contents.
///
/// Array slots are folded in from the last index down to the first, then
/// `0` and `MIN` are added if their flags are set.
pub fn snapshot_model(m: &FixedLongMap) -> OrderedListMap<i64> {
    let array = m.keys.iter().zip(&m.values).rev().filter(|(&k, _)| is_valid_key(k)).map(|(&k, &v)| (k, v));
    let zero = (m.extra_keys & 1 != 0).then_some((0, m.zero_value));
    let min = (m.extra_keys & 2 != 0).then_some((i64::MIN, m.min_value));
    OrderedListMap::from_pairs(array.chain(zero).chain(min))
}

/// Which array/model correspondence failed, with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivalenceViolation {
    /// A valid key of the model is missing from the key array.
    ModelKeyNotInArray { key: i64 },
    /// A valid key stored at `index` is missing from the model.
    ArrayKeyNotInModel { index: usize, key: i64 },
    /// The array contains `key` but the model does not.
    ArrayContainsButModelLacks { key: i64 },
    /// The model and the value array disagree for `key`.
    ValueMismatch { key: i64, index: Option<usize>, model: i64, array: i64 },
}

impl fmt::Display for EquivalenceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ModelKeyNotInArray { key } => write!(f, "model key {key} not found in key array"),
            Self::ArrayKeyNotInModel { index, key } => write!(f, "key {key} at index {index} missing from model"),
            Self::ArrayContainsButModelLacks { key } => write!(f, "key array contains {key}, model does not"),
            Self::ValueMismatch { key, index: Some(i), model, array } => {
                write!(f, "key {key}: model value {model}, values[{i}] = {array}")
            }
            Self::ValueMismatch { key, index: None, model, array } => {
                write!(f, "sentinel key {key}: model value {model}, side field {array}")
            }
        }
    }
}

/// Checks that `model` and the array state of `m` describe the same map.
///
/// 1. Every valid model key occurs in the key array.
/// 2. Every valid key in the array is in the model.
/// 3. Any key the array contains is in the model.
/// 4. Model values equal `values[i]` at the key's first index (and the side
///    fields for `0` and `MIN`).
pub fn check_equivalence(m: &FixedLongMap, model: &OrderedListMap<i64>) -> Result<(), EquivalenceViolation> {
    // first index of each valid key; same answer as array_scan_for_key(keys, k, 0)
    let mut first_index: HashMap<i64, usize> = HashMap::with_capacity(m.keys.len());
    for (i, &k) in m.keys.iter().enumerate() {
        if is_valid_key(k) {
            first_index.entry(k).or_insert(i);
        }
    }

    for k in model.keys().filter(|&k| is_valid_key(k)) {
        if !first_index.contains_key(&k) {
            return Err(EquivalenceViolation::ModelKeyNotInArray { key: k });
        }
    }
    for (i, &k) in m.keys.iter().enumerate() {
        if is_valid_key(k) && !model.contains(k) {
            return Err(EquivalenceViolation::ArrayKeyNotInModel { index: i, key: k });
        }
    }
    for &k in first_index.keys() {
        if !model.contains(k) {
            return Err(EquivalenceViolation::ArrayContainsButModelLacks { key: k });
        }
    }
    for &(k, v) in model.entries() {
        let (index, array) = match k {
            0 if m.extra_keys & 1 != 0 => (None, m.zero_value),
            i64::MIN if m.extra_keys & 2 != 0 => (None, m.min_value),
            0 | i64::MIN => return Err(EquivalenceViolation::ModelKeyNotInArray { key: k }),
            _ => {
                let i = first_index[&k];
                (Some(i), m.values[i])
            }
        };
        if v != array {
            return Err(EquivalenceViolation::ValueMismatch { key: k, index, model: v, array });
        }
    }
    Ok(())
}

/// Agreement between [`seek_entry`] and [`seek_entry_or_open`] for `k`.
///
/// `Found` and `Undefined` must coincide, a `MissingVacant(i)` must appear
/// as `MissingZero(i)` on the lookup side, and a key present in the array
/// must never be reported missing.
///
/// `keys` is expected to satisfy seekability and uniqueness.
pub fn seek_agreement(keys: &[i64], mask: u32, k: i64) -> Result<(), String> {
    let lookup = seek_entry(k, keys, mask);
    let open = seek_entry_or_open(k, keys, mask);
    let related = match (lookup, open) {
        (SeekResult::Found(a), SeekResult::Found(b)) => a == b,
        (SeekResult::Undefined, SeekResult::Undefined) => true,
        (SeekResult::MissingZero(a), SeekResult::MissingZero(b) | SeekResult::MissingVacant(b)) => a == b,
        _ => false,
    };
    if !related {
        return Err(format!("key {k}: seek_entry {lookup:?} vs seek_entry_or_open {open:?}"));
    }
    if array_contains_key(keys, k, 0) {
        let at = keys.iter().position(|&q| q == k).unwrap() as u32;
        if open != SeekResult::Found(at) {
            return Err(format!("key {k} stored at {at} but seek_entry_or_open gave {open:?}"));
        }
    }
    if let SeekResult::MissingZero(i) = open {
        if keys[i as usize] != 0 {
            return Err(format!("key {k}: MissingZero({i}) points at {}", keys[i as usize]));
        }
    }
    if let SeekResult::MissingVacant(i) = open {
        if keys[i as usize] != crate::probe::TOMBSTONE {
            return Err(format!("key {k}: MissingVacant({i}) points at {}", keys[i as usize]));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::zero_default;
    use crate::probe::{next_probe, to_index, TOMBSTONE};

    fn map(mask: u32) -> FixedLongMap {
        FixedLongMap::new(mask, zero_default()).unwrap()
    }

    #[test]
    fn snapshot_of_empty_map() {
        assert_eq!(snapshot_model(&map(7)), OrderedListMap::empty());
    }

    #[test]
    fn snapshot_includes_sentinels() {
        let mut m = map(7);
        m.update(0, 4);
        m.update(i64::MIN, 5);
        assert_eq!(m.extra_keys(), 3);
        let s = snapshot_model(&m);
        assert_eq!(s.entries(), &[(i64::MIN, 5), (0, 4)]);
    }

    #[test]
    fn snapshot_skips_free_and_removed_slots() {
        let mut m = map(3);
        m.keys = vec![0, 7, TOMBSTONE, 0];
        m.values = vec![11, 70, 12, 13];
        m.array_size = 1;
        assert_eq!(snapshot_model(&m).entries(), &[(7, 70)]);
    }

    #[test]
    fn equivalence_holds_on_built_map() {
        let mut m = map(15);
        assert_eq!(check_equivalence(&m, &snapshot_model(&m)), Ok(()));
        for k in 1..10 {
            m.update(k * 1000, k);
        }
        m.remove(3000);
        m.update(0, -1);
        assert_eq!(check_equivalence(&m, &snapshot_model(&m)), Ok(()));
    }

    #[test]
    fn equivalence_detects_flipped_value() {
        let mut m = map(15);
        m.update(77, 1);
        let model = snapshot_model(&m);
        let i = m.keys.iter().position(|&k| k == 77).unwrap();
        m.values[i] ^= 1;
        assert_eq!(
            check_equivalence(&m, &model),
            Err(EquivalenceViolation::ValueMismatch { key: 77, index: Some(i), model: 1, array: 0 })
        );
    }

    #[test]
    fn equivalence_detects_missing_keys() {
        let mut m = map(15);
        m.update(77, 1);
        let model = snapshot_model(&m);
        m.update(78, 2);
        assert!(matches!(check_equivalence(&m, &model), Err(EquivalenceViolation::ArrayKeyNotInModel { key: 78, .. })));
        m.remove(77);
        m.remove(78);
        assert_eq!(check_equivalence(&m, &model), Err(EquivalenceViolation::ModelKeyNotInArray { key: 77 }));
    }

    #[test]
    fn seek_agreement_cases() {
        let mask = 15;
        let k = 31337;
        let home = to_index(k, mask) as usize;
        assert_eq!(seek_agreement(&[0; 16], mask, k), Ok(()));
        assert_eq!(seek_entry(k, &[0; 16], mask), SeekResult::MissingZero(home as u32));

        let mut keys = vec![0; 16];
        keys[home] = k;
        assert_eq!(seek_agreement(&keys, mask, k), Ok(()));

        let mut keys = vec![0; 16];
        keys[home] = TOMBSTONE;
        assert_eq!(seek_entry_or_open(k, &keys, mask), SeekResult::MissingVacant(home as u32));
        assert_eq!(seek_entry(k, &keys, mask), SeekResult::MissingZero(home as u32));
        assert_eq!(seek_agreement(&keys, mask, k), Ok(()));

        keys[next_probe(home as u32, 1, mask) as usize] = k;
        assert_eq!(seek_agreement(&keys, mask, k), Ok(()));
    }

    #[test]
    fn seek_agreement_flags_unreachable_key() {
        let mask = 15;
        let k = 31337;
        let home = to_index(k, mask) as usize;
        let mut keys = vec![0; 16];
        keys[(home + 1) % 16] = k;
        assert!(seek_agreement(&keys, mask, k).is_err());
    }
}
