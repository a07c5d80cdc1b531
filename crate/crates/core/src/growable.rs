//! Growing decorator around [`FixedLongMap`].
//!
//! All operations are forwarded to an inner fixed map. When an insertion
//! would push the array occupancy past the threshold, or the inner map
//! rejects it, a map with twice the slots is allocated and every pair of
//! the old one is re-inserted with `update`.
//!
//! Occupancy counts array slots only: `0` and `MIN` live in side fields and
//! never cause growth. Tombstones are not counted either, so a table that
//! has seen heavy churn may probe long chains without growing. The map
//! never shrinks.

use serde::{Deserialize, Serialize};

use crate::conformance::{snapshot_model, MapUnderTest};
use crate::list_map::OrderedListMap;
use crate::map::{DefaultEntry, FixedLongMap};
use crate::probe::{mask_for_exponent, MAX_MASK_EXPONENT};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Largest occupancy (stored array keys / slots) tolerated after an
    /// insertion. Must lie in `(0, 1]`.
    pub threshold: f64,
    /// Growth stops at `2^max_mask_exponent` slots.
    pub max_mask_exponent: u32,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig { threshold: 0.5, max_mask_exponent: MAX_MASK_EXPONENT }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidConfig(format!("growth threshold {} not in (0, 1]", self.threshold)));
        }
        if self.max_mask_exponent > MAX_MASK_EXPONENT {
            return Err(Error::InvalidMaskExponent(self.max_mask_exponent));
        }
        Ok(())
    }
}

/// One reallocation. The snapshots are only taken when auditing is on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthEvent {
    pub from_mask: u32,
    pub to_mask: u32,
    pub before: Option<OrderedListMap<i64>>,
    pub after: Option<OrderedListMap<i64>>,
}

#[derive(Debug, Clone)]
pub struct GrowableLongMap {
    inner: FixedLongMap,
    exponent: u32,
    config: GrowthConfig,
    audit: bool,
    events: Vec<GrowthEvent>,
    growths: usize,
}

fn is_sentinel(key: i64) -> bool {
    key == key.wrapping_neg()
}

impl GrowableLongMap {
    pub fn new(start_exponent: u32, config: GrowthConfig, default_entry: DefaultEntry) -> Result<Self, Error> {
        config.validate()?;
        if start_exponent > config.max_mask_exponent {
            return Err(Error::InvalidMaskExponent(start_exponent));
        }
        Ok(GrowableLongMap {
            inner: FixedLongMap::new(mask_for_exponent(start_exponent), default_entry)?,
            exponent: start_exponent,
            config,
            audit: false,
            events: Vec::new(),
            growths: 0,
        })
    }

    /// Record model snapshots around every growth in [`GrowthEvent`]s.
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn inner(&self) -> &FixedLongMap {
        &self.inner
    }

    pub fn config(&self) -> &GrowthConfig {
        &self.config
    }

    pub fn mask(&self) -> u32 {
        self.inner.mask()
    }

    pub fn capacity(&self) -> usize {
        self.inner.capacity()
    }

    /// Number of reallocations so far.
    pub fn growths(&self) -> usize {
        self.growths
    }

    pub fn contains(&self, key: i64) -> bool {
        self.inner.contains(key)
    }

    pub fn get(&self, key: i64) -> i64 {
        self.inner.get(key)
    }

    pub fn size(&self) -> u32 {
        self.inner.size()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn occupancy(&self) -> f64 {
        self.inner.occupancy()
    }

    fn over_threshold(&self, array_keys: u64) -> bool {
        array_keys as f64 > self.config.threshold * self.capacity() as f64
    }

    fn can_grow(&self) -> bool {
        self.exponent < self.config.max_mask_exponent
    }

    /// Moves every pair into a larger table. Tries successively larger
    /// sizes if re-insertion is rejected; on total failure the old table
    /// is kept and `false` returned.
    fn grow(&mut self) -> bool {
        let model = snapshot_model(&self.inner);
        for exponent in self.exponent + 1..=self.config.max_mask_exponent {
            let mut next = FixedLongMap::new(mask_for_exponent(exponent), self.inner.default_entry().clone())
                .expect("exponent within bounds");
            if model.entries().iter().all(|&(k, v)| next.update(k, v)) {
                let from_mask = self.inner.mask();
                self.inner = next;
                self.exponent = exponent;
                self.growths += 1;
                let (before, after) =
                    if self.audit { (Some(model), Some(snapshot_model(&self.inner))) } else { (None, None) };
                self.events.push(GrowthEvent { from_mask, to_mask: self.inner.mask(), before, after });
                return true;
            }
        }
        false
    }

    /// Maps `key` to `value`, growing first if needed. Returns `false` only
    /// when even the largest allowed table cannot take the key.
    pub fn update(&mut self, key: i64, value: i64) -> bool {
        if !is_sentinel(key) && !self.inner.contains(key) {
            let after_insert = self.inner.array_size() as u64 + 1;
            while self.over_threshold(after_insert) && self.can_grow() {
                if !self.grow() {
                    break;
                }
            }
        }
        loop {
            if self.inner.update(key, value) {
                return true;
            }
            if !self.can_grow() || !self.grow() {
                return false;
            }
        }
    }

    pub fn remove(&mut self, key: i64) -> bool {
        loop {
            if self.inner.remove(key) {
                return true;
            }
            if !self.can_grow() || !self.grow() {
                return false;
            }
        }
    }

    pub fn take_growth_events(&mut self) -> Vec<GrowthEvent> {
        std::mem::take(&mut self.events)
    }
}

impl MapUnderTest for GrowableLongMap {
    fn contains(&self, key: i64) -> bool {
        GrowableLongMap::contains(self, key)
    }
    fn get(&self, key: i64) -> i64 {
        GrowableLongMap::get(self, key)
    }
    fn update(&mut self, key: i64, value: i64) -> bool {
        GrowableLongMap::update(self, key, value)
    }
    fn remove(&mut self, key: i64) -> bool {
        GrowableLongMap::remove(self, key)
    }
    fn size(&self) -> u32 {
        GrowableLongMap::size(self)
    }
    fn array_map(&self) -> &FixedLongMap {
        &self.inner
    }
    fn take_growth_events(&mut self) -> Vec<GrowthEvent> {
        GrowableLongMap::take_growth_events(self)
    }
}
