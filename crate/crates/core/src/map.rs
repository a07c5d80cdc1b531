use std::fmt;
use std::sync::Arc;

use crate::probe::{self, is_valid_mask, SeekResult, TOMBSTONE};
use crate::Error;

/// Value returned by lookups of absent keys.
pub type DefaultEntry = Arc<dyn Fn(i64) -> i64 + Send + Sync>;

/// Default-entry function that maps every key to `0`.
pub fn zero_default() -> DefaultEntry {
    Arc::new(|_| 0)
}

/// Open-addressing map from `i64` to `i64` with a fixed number of slots.
///
/// Keys `0` and `i64::MIN` cannot live in the key array (they mark free
/// and removed slots), so their mappings are kept in side fields flagged by
/// the two low bits of `extra_keys`.
#[derive(Clone)]
pub struct FixedLongMap {
    pub(crate) mask: u32,
    pub(crate) keys: Vec<i64>,
    pub(crate) values: Vec<i64>,
    pub(crate) array_size: u32,
    pub(crate) extra_keys: u32,
    pub(crate) zero_value: i64,
    pub(crate) min_value: i64,
    default_entry: DefaultEntry,
}

impl fmt::Debug for FixedLongMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedLongMap")
            .field("mask", &self.mask)
            .field("array_size", &self.array_size)
            .field("extra_keys", &self.extra_keys)
            .field("zero_value", &self.zero_value)
            .field("min_value", &self.min_value)
            .finish_non_exhaustive()
    }
}

/// Raw field values of a [`FixedLongMap`], used to rebuild a map from a
/// dump without any validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawParts {
    pub mask: u32,
    pub keys: Vec<i64>,
    pub values: Vec<i64>,
    pub array_size: u32,
    pub extra_keys: u32,
    pub zero_value: i64,
    pub min_value: i64,
}

#[inline]
fn is_sentinel(key: i64) -> bool {
    key == key.wrapping_neg()
}

/// Bit in `extra_keys` that flags a sentinel key: 1 for `0`, 2 for `MIN`.
#[inline]
fn sentinel_bit(key: i64) -> u32 {
    ((key as u64 >> 63) as u32) + 1
}

impl FixedLongMap {
    /// Creates an empty map with `mask + 1` slots.
    pub fn new(mask: u32, default_entry: DefaultEntry) -> Result<Self, Error> {
        Self::validate_mask(mask)?;
        let len = mask as usize + 1;
        Ok(FixedLongMap {
            mask,
            keys: vec![0; len],
            values: vec![0; len],
            array_size: 0,
            extra_keys: 0,
            zero_value: 0,
            min_value: 0,
            default_entry,
        })
    }

    /// Accepts exactly the masks `2^n - 1` with `0 <= n <= 30`.
    pub fn validate_mask(mask: u32) -> Result<(), Error> {
        if is_valid_mask(mask) {
            Ok(())
        } else {
            Err(Error::InvalidMask(mask as u64))
        }
    }

    /// Creates an empty map with `2^exponent` slots and a zero default.
    pub fn with_exponent(exponent: u32) -> Result<Self, Error> {
        if exponent > probe::MAX_MASK_EXPONENT {
            return Err(Error::InvalidMaskExponent(exponent));
        }
        Self::new(probe::mask_for_exponent(exponent), zero_default())
    }

    /// Rebuilds a map from raw fields. Nothing is checked; run the invariant
    /// checker on the result before using it.
    pub fn from_raw_parts(parts: RawParts, default_entry: DefaultEntry) -> Self {
        let RawParts { mask, keys, values, array_size, extra_keys, zero_value, min_value } = parts;
        FixedLongMap { mask, keys, values, array_size, extra_keys, zero_value, min_value, default_entry }
    }

    pub fn to_raw_parts(&self) -> RawParts {
        RawParts {
            mask: self.mask,
            keys: self.keys.clone(),
            values: self.values.clone(),
            array_size: self.array_size,
            extra_keys: self.extra_keys,
            zero_value: self.zero_value,
            min_value: self.min_value,
        }
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn capacity(&self) -> usize {
        self.mask as usize + 1
    }

    pub fn keys(&self) -> &[i64] {
        &self.keys
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Number of keys stored in the arrays (excludes `0` and `MIN`).
    pub fn array_size(&self) -> u32 {
        self.array_size
    }

    pub fn extra_keys(&self) -> u32 {
        self.extra_keys
    }

    pub fn zero_value(&self) -> i64 {
        self.zero_value
    }

    pub fn min_value(&self) -> i64 {
        self.min_value
    }

    pub fn default_entry(&self) -> &DefaultEntry {
        &self.default_entry
    }

    pub fn default_for(&self, key: i64) -> i64 {
        (self.default_entry)(key)
    }

    pub fn size(&self) -> u32 {
        self.array_size + self.extra_keys.div_ceil(2)
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    /// Fraction of array slots holding a key.
    pub fn occupancy(&self) -> f64 {
        self.array_size as f64 / self.capacity() as f64
    }

    pub fn contains(&self, key: i64) -> bool {
        if is_sentinel(key) {
            sentinel_bit(key) & self.extra_keys != 0
        } else {
            probe::seek_entry(key, &self.keys, self.mask).is_found()
        }
    }

    /// Value mapped to `key`, or the default entry for it.
    pub fn get(&self, key: i64) -> i64 {
        if is_sentinel(key) {
            if sentinel_bit(key) & self.extra_keys == 0 {
                self.default_for(key)
            } else if key == 0 {
                self.zero_value
            } else {
                self.min_value
            }
        } else {
            match probe::seek_entry(key, &self.keys, self.mask) {
                SeekResult::Found(i) => self.values[i as usize],
                _ => self.default_for(key),
            }
        }
    }

    /// Maps `key` to `value`. Returns `false`, leaving the map untouched, if
    /// no slot for `key` is reachable within the probe bound.
    pub fn update(&mut self, key: i64, value: i64) -> bool {
        if is_sentinel(key) {
            if key == 0 {
                self.zero_value = value;
                self.extra_keys |= 1;
            } else {
                self.min_value = value;
                self.extra_keys |= 2;
            }
            return true;
        }
        match probe::seek_entry_or_open(key, &self.keys, self.mask) {
            SeekResult::Found(i) => {
                self.values[i as usize] = value;
                true
            }
            SeekResult::MissingZero(i) | SeekResult::MissingVacant(i) => {
                self.keys[i as usize] = key;
                self.values[i as usize] = value;
                self.array_size += 1;
                true
            }
            SeekResult::Undefined => false,
        }
    }

    /// Removes `key`. Removing an absent key succeeds without change;
    /// `false` means the probe bound was hit and nothing was done.
    pub fn remove(&mut self, key: i64) -> bool {
        if is_sentinel(key) {
            self.extra_keys &= !sentinel_bit(key);
            return true;
        }
        match probe::seek_entry(key, &self.keys, self.mask) {
            SeekResult::Found(i) => {
                self.keys[i as usize] = TOMBSTONE;
                self.values[i as usize] = 0;
                self.array_size -= 1;
                true
            }
            SeekResult::MissingZero(_) | SeekResult::MissingVacant(_) => true,
            SeekResult::Undefined => false,
        }
    }

    /// Number of key slots a lookup of `key` reads. Sentinel keys read none.
    pub fn probe_length(&self, key: i64) -> u32 {
        if is_sentinel(key) {
            0
        } else {
            probe::seek_entry_traced(key, &self.keys, self.mask).probe_length()
        }
    }

    /// Number of tombstoned slots.
    pub fn tombstones(&self) -> usize {
        self.keys.iter().filter(|&&k| k == TOMBSTONE).count()
    }

    /// Stored pairs, array slots in index order followed by `0` and `MIN`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let array = self
            .keys
            .iter()
            .zip(&self.values)
            .filter(|(&k, _)| crate::invariant::is_valid_key(k))
            .map(|(&k, &v)| (k, v));
        let zero = (self.extra_keys & 1 != 0).then_some((0, self.zero_value));
        let min = (self.extra_keys & 2 != 0).then_some((i64::MIN, self.min_value));
        array.chain(zero).chain(min)
    }
}
