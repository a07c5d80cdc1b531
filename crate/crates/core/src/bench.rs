//! Occupancy sweep: latency and probe-length distribution at increasing
//! fill levels.
//!
//! Each level starts from a fresh map filled with random distinct keys up
//! to the requested fraction of the initial capacity. Lookups are split
//! evenly between stored keys and keys never inserted, so absent-key
//! lookups walk full probe chains. Timing covers only the map call; no
//! model or invariant checks run here.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::growable::{GrowableLongMap, GrowthConfig};
use crate::invariant::is_valid_key;
use crate::map::{zero_default, FixedLongMap};
use crate::probe::{mask_for_exponent, MAX_MASK_EXPONENT};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub mask_exponent: u32,
    pub levels: Vec<f64>,
    pub ops_per_level: usize,
    pub growth: Option<GrowthConfig>,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(mask_exponent: u32, levels: Vec<f64>, ops_per_level: usize) -> Self {
        BenchConfig { mask_exponent, levels, ops_per_level, growth: None, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.mask_exponent > MAX_MASK_EXPONENT {
            return Err(Error::InvalidMaskExponent(self.mask_exponent));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("no occupancy levels".into()));
        }
        if let Some(bad) = self.levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidConfig(format!("occupancy level {bad} not in [0, 1]")));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("occupancy levels must be strictly increasing".into()));
        }
        if self.ops_per_level == 0 {
            return Err(Error::InvalidConfig("ops per level must be positive".into()));
        }
        if let Some(g) = &self.growth {
            g.validate()?;
            if g.max_mask_exponent < self.mask_exponent {
                return Err(Error::InvalidConfig("growth ceiling below starting exponent".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Latency {
    pub median_ns: u64,
    pub p99_ns: u64,
}

impl Latency {
    fn from_samples(mut samples: Vec<u64>) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        samples.sort_unstable();
        let at = |q: f64| samples[((samples.len() - 1) as f64 * q).round() as usize];
        Some(Latency { median_ns: at(0.5), p99_ns: at(0.99) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    /// Requested fill, as a fraction of the starting capacity.
    pub occupancy: f64,
    /// Stored array keys over the capacity in use after filling.
    pub achieved_occupancy: f64,
    pub capacity: usize,
    pub stored: usize,
    pub get: Latency,
    /// Absent when nothing is stored.
    pub update: Option<Latency>,
    pub remove: Option<Latency>,
    pub mean_probe_length: f64,
    /// Lookup count per probe length.
    pub probe_histogram: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub capacity: usize,
    pub mode: &'static str,
    pub ops_per_level: usize,
    pub levels: Vec<LevelReport>,
}

enum Subject {
    Fixed(FixedLongMap),
    Growable(GrowableLongMap),
}

impl Subject {
    fn fixed(&self) -> &FixedLongMap {
        match self {
            Subject::Fixed(m) => m,
            Subject::Growable(g) => g.inner(),
        }
    }

    fn get(&self, k: i64) -> i64 {
        match self {
            Subject::Fixed(m) => m.get(k),
            Subject::Growable(g) => g.get(k),
        }
    }

    fn update(&mut self, k: i64, v: i64) -> bool {
        match self {
            Subject::Fixed(m) => m.update(k, v),
            Subject::Growable(g) => g.update(k, v),
        }
    }

    fn remove(&mut self, k: i64) -> bool {
        match self {
            Subject::Fixed(m) => m.remove(k),
            Subject::Growable(g) => g.remove(k),
        }
    }
}

fn random_valid_key(rng: &mut ChaCha8Rng, taken: &HashSet<i64>) -> i64 {
    loop {
        let k: i64 = rng.random();
        if is_valid_key(k) && !taken.contains(&k) {
            return k;
        }
    }
}

fn time<T>(f: impl FnOnce() -> T) -> u64 {
    let start = Instant::now();
    black_box(f());
    start.elapsed().as_nanos() as u64
}

fn run_level(cfg: &BenchConfig, level_index: usize, level: f64) -> LevelReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (level_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mask = mask_for_exponent(cfg.mask_exponent);
    let mut map = match &cfg.growth {
        None => Subject::Fixed(FixedLongMap::new(mask, zero_default()).expect("valid mask")),
        Some(g) => Subject::Growable(
            GrowableLongMap::new(cfg.mask_exponent, g.clone(), zero_default()).expect("validated config"),
        ),
    };

    let target = (level * (mask as f64 + 1.0)).round() as usize;
    let mut taken = HashSet::with_capacity(target + cfg.ops_per_level);
    let mut present = Vec::with_capacity(target);
    let mut rejected = 0usize;
    while present.len() < target && rejected < 4 * target.max(16) {
        let k = random_valid_key(&mut rng, &taken);
        taken.insert(k);
        if map.update(k, rng.random()) {
            present.push(k);
        } else {
            rejected += 1;
        }
    }

    let absent: Vec<i64> = (0..cfg.ops_per_level.div_ceil(2))
        .map(|_| {
            let k = random_valid_key(&mut rng, &taken);
            taken.insert(k);
            k
        })
        .collect();
    let lookups: Vec<i64> = (0..cfg.ops_per_level)
        .map(|i| match (i % 2, present.choose(&mut rng)) {
            (0, Some(&k)) => k,
            _ => absent[(i / 2) % absent.len()],
        })
        .collect();

    let mut histogram = BTreeMap::new();
    let mut probe_total = 0u64;
    for &k in &lookups {
        let len = map.fixed().probe_length(k);
        probe_total += len as u64;
        *histogram.entry(len).or_insert(0u64) += 1;
    }

    let get = lookups.iter().map(|&k| time(|| map.get(k))).collect();

    let mut update = Vec::new();
    let mut remove = Vec::new();
    if !present.is_empty() {
        for _ in 0..cfg.ops_per_level {
            let k = *present.choose(&mut rng).expect("non-empty");
            let v: i64 = rng.random();
            update.push(time(|| map.update(k, v)));
        }
        for _ in 0..cfg.ops_per_level {
            let k = *present.choose(&mut rng).expect("non-empty");
            remove.push(time(|| map.remove(k)));
            map.update(k, 0);
        }
    }

    let fixed = map.fixed();
    LevelReport {
        occupancy: level,
        achieved_occupancy: fixed.occupancy(),
        capacity: fixed.capacity(),
        stored: fixed.array_size() as usize,
        get: Latency::from_samples(get).expect("ops_per_level > 0"),
        update: Latency::from_samples(update),
        remove: Latency::from_samples(remove),
        mean_probe_length: probe_total as f64 / lookups.len() as f64,
        probe_histogram: histogram,
    }
}

/// Runs every level of `cfg` in order.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, Error> {
    cfg.validate()?;
    let levels = cfg.levels.iter().enumerate().map(|(i, &level)| run_level(cfg, i, level)).collect();
    Ok(BenchReport {
        capacity: 1 << cfg.mask_exponent,
        mode: if cfg.growth.is_some() { "growable" } else { "fixed" },
        ops_per_level: cfg.ops_per_level,
        levels,
    })
}

fn fmt_latency(l: Option<Latency>) -> String {
    match l {
        Some(l) => format!("{:>6} {:>7}", l.median_ns, l.p99_ns),
        None => format!("{:>6} {:>7}", "-", "-"),
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "capacity {} mode {} ops/level {}", self.capacity, self.mode, self.ops_per_level)?;
        writeln!(
            f,
            "{:>6} {:>8} {:>9} {:>9} {:>6} | {:>14} | {:>14} | {:>14}",
            "level", "achieved", "capacity", "stored", "probe", "get med/p99", "update med/p99", "remove med/p99"
        )?;
        for l in &self.levels {
            writeln!(
                f,
                "{:>6.3} {:>8.3} {:>9} {:>9} {:>6.2} | {} | {} | {}",
                l.occupancy,
                l.achieved_occupancy,
                l.capacity,
                l.stored,
                l.mean_probe_length,
                fmt_latency(Some(l.get)),
                fmt_latency(l.update),
                fmt_latency(l.remove)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_level_probes_once() {
        let r = run_bench(&BenchConfig::new(8, vec![0.0], 200)).unwrap();
        let l = &r.levels[0];
        assert_eq!(l.stored, 0);
        assert_eq!(l.probe_histogram, BTreeMap::from([(1, 200)]));
        assert_eq!(l.mean_probe_length, 1.0);
        assert!(l.update.is_none() && l.remove.is_none());
    }

    #[test]
    fn histogram_counts_every_lookup() {
        let r = run_bench(&BenchConfig::new(10, vec![0.25, 0.75], 301)).unwrap();
        for l in &r.levels {
            assert_eq!(l.probe_histogram.values().sum::<u64>(), 301);
            assert_eq!(l.capacity, 1024);
        }
        assert!((r.levels[0].achieved_occupancy - 0.25).abs() < 1e-3);
    }

    #[test]
    fn growable_stays_under_threshold() {
        let mut cfg = BenchConfig::new(8, vec![0.25, 0.5, 0.9], 100);
        cfg.growth = Some(GrowthConfig::default());
        let r = run_bench(&cfg).unwrap();
        assert_eq!(r.mode, "growable");
        for l in &r.levels {
            assert!(l.achieved_occupancy <= 0.5, "{l:?}");
        }
        assert_eq!(r.levels[2].capacity, 512);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(run_bench(&BenchConfig::new(4, vec![0.5, 0.25], 10)).is_err());
        assert!(run_bench(&BenchConfig::new(4, vec![1.5], 10)).is_err());
        assert!(run_bench(&BenchConfig::new(4, vec![], 10)).is_err());
        assert!(run_bench(&BenchConfig::new(31, vec![0.5], 10)).is_err());
    }
}
