//! Fixed-capacity open-addressing map from `i64` keys to `i64` values,
//! with the tooling used to check it.
//!
//! - [`FixedLongMap`]: the map. Quadratic probing, tombstone deletion, keys
//!   `0` and `i64::MIN` stored out of band, and a hard bound of
//!   [`MAX_PROBES`] iterations per seek.
//! - [`invariant`]: the class invariant as an executable check.
//! - [`OrderedListMap`]: sorted association list used as the reference model.
//! - [`conformance`]: model extraction, array/model equivalence, and a
//!   seeded differential fuzzer with trace shrinking.
//! - [`GrowableLongMap`]: a decorator that reallocates into a larger table.
//! - [`bench`]: occupancy sweeps reporting latency and probe lengths.
//!
//! ```
//! use longmap::FixedLongMap;
//!
//! let mut m = FixedLongMap::with_exponent(4).unwrap();
//! assert!(m.update(7, 99));
//! assert!(m.update(0, 1));
//! assert_eq!(m.get(7), 99);
//! assert_eq!(m.size(), 2);
//! assert!(m.remove(7));
//! assert!(!m.contains(7));
//! ```

pub mod bench;
pub mod conformance;
pub mod growable;
pub mod invariant;
pub mod list_map;
pub mod map;
pub mod probe;
pub mod state;

use thiserror::Error;

pub use conformance::snapshot_model;
pub use growable::{GrowableLongMap, GrowthConfig};
pub use invariant::InvariantReport;
pub use list_map::OrderedListMap;
pub use map::{zero_default, DefaultEntry, FixedLongMap};
pub use probe::{SeekResult, MAX_PROBES, TOMBSTONE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("mask {0} is not 2^n - 1 with n <= 30")]
    InvalidMask(u64),
    #[error("mask exponent {0} exceeds 30")]
    InvalidMaskExponent(u32),
    #[error("{0}")]
    InvalidConfig(String),
}
