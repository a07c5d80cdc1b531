//! Differential execution of operation traces against the list-map model.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::trace::{Trace, TraceOp};
use super::{check_equivalence, snapshot_model};
use crate::growable::{GrowableLongMap, GrowthConfig, GrowthEvent};
use crate::invariant::{self, is_valid_key};
use crate::list_map::OrderedListMap;
use crate::map::{zero_default, FixedLongMap};
use crate::probe::{self, SeekResult, MAX_MASK_EXPONENT, MAX_PROBES};
use crate::Error;

/// The map interface the differential runner drives.
pub trait MapUnderTest {
    fn contains(&self, key: i64) -> bool;
    fn get(&self, key: i64) -> i64;
    fn update(&mut self, key: i64, value: i64) -> bool;
    fn remove(&mut self, key: i64) -> bool;
    fn size(&self) -> u32;
    /// The array map currently holding the data.
    fn array_map(&self) -> &FixedLongMap;
    /// Growth events since the last call.
    fn take_growth_events(&mut self) -> Vec<GrowthEvent> {
        Vec::new()
    }
}

impl MapUnderTest for FixedLongMap {
    fn contains(&self, key: i64) -> bool {
        FixedLongMap::contains(self, key)
    }
    fn get(&self, key: i64) -> i64 {
        FixedLongMap::get(self, key)
    }
    fn update(&mut self, key: i64, value: i64) -> bool {
        FixedLongMap::update(self, key, value)
    }
    fn remove(&mut self, key: i64) -> bool {
        FixedLongMap::remove(self, key)
    }
    fn size(&self) -> u32 {
        FixedLongMap::size(self)
    }
    fn array_map(&self) -> &FixedLongMap {
        self
    }
}

/// Observable result of one operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpOutcome {
    Bool(bool),
    Value(i64),
}

impl fmt::Display for OpOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpOutcome::Bool(b) => write!(f, "{b}"),
            OpOutcome::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub updates: usize,
    pub rejected_updates: usize,
    pub removes: usize,
    pub rejected_removes: usize,
    pub gets: usize,
    pub contains: usize,
}

/// Probe-bound instrumentation gathered alongside a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProbeStats {
    pub seeks: usize,
    pub undefined: usize,
    pub max_iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub op_index: usize,
    pub op: Option<TraceOp>,
    pub message: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            Some(op) => write!(f, "op {} ({op}): {}", self.op_index, self.message),
            None => write!(f, "initial state: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Run the invariant checker every this many ops; 0 disables it.
    pub invariant_stride: usize,
    /// Run the equivalence check every this many ops; 0 disables it.
    pub equivalence_stride: usize,
    /// Keep every op's outcome in [`TraceResult::outcomes`].
    pub record_outcomes: bool,
}

impl CheckOptions {
    /// Stride 1 for tables of at most 64 slots, 64 above that.
    pub fn for_capacity(capacity: usize) -> Self {
        let stride = if capacity <= 64 { 1 } else { 64 };
        CheckOptions { invariant_stride: stride, equivalence_stride: stride, record_outcomes: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceResult {
    pub ops_run: usize,
    pub counts: OpCounts,
    pub outcomes: Vec<OpOutcome>,
    pub invariant_checks: usize,
    pub equivalence_checks: usize,
    pub snapshot_checks: usize,
    pub growth_events: usize,
    pub probe: ProbeStats,
    pub final_size: u32,
    pub final_mask: u32,
    pub divergence: Option<Divergence>,
}

impl TraceResult {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

struct Runner<'a, M> {
    map: &'a mut M,
    model: OrderedListMap<i64>,
    opts: CheckOptions,
    result: TraceResult,
}

impl<M: MapUnderTest> Runner<'_, M> {
    fn check_invariant(&mut self) -> Result<(), String> {
        self.result.invariant_checks += 1;
        let report = invariant::check(self.map.array_map());
        match report.first_violation {
            None => Ok(()),
            Some(v) => Err(format!("invariant violated: {v}")),
        }
    }

    fn check_equivalence(&mut self) -> Result<(), String> {
        self.result.equivalence_checks += 1;
        check_equivalence(self.map.array_map(), &self.model).map_err(|v| format!("equivalence violated: {v}"))
    }

    fn check_snapshot(&mut self, expected: &OrderedListMap<i64>, what: &str) -> Result<(), String> {
        self.result.snapshot_checks += 1;
        let snap = snapshot_model(self.map.array_map());
        if snap != *expected {
            return Err(format!("{what}: snapshot {snap:?} != model {expected:?}"));
        }
        if !snap.is_strictly_ordered() {
            return Err("snapshot not strictly ordered".into());
        }
        Ok(())
    }

    /// Seeks `key` on the current array state, independently of the map's
    /// own call, and checks the probe bound.
    fn probe(&mut self, key: i64, for_insert: bool) -> Result<Option<SeekResult>, String> {
        if !is_valid_key(key) {
            return Ok(None);
        }
        let m = self.map.array_map();
        let trace = if for_insert {
            probe::seek_entry_or_open_traced(key, m.keys(), m.mask())
        } else {
            probe::seek_entry_traced(key, m.keys(), m.mask())
        };
        let stats = &mut self.result.probe;
        stats.seeks += 1;
        stats.max_iterations = stats.max_iterations.max(trace.iterations);
        if trace.result == SeekResult::Undefined {
            stats.undefined += 1;
        }
        if trace.iterations > MAX_PROBES {
            return Err(format!("seek for {key} ran {} iterations", trace.iterations));
        }
        if (trace.result == SeekResult::Undefined) != (trace.iterations == MAX_PROBES) {
            return Err(format!("seek for {key}: {:?} after {} iterations", trace.result, trace.iterations));
        }
        Ok(Some(trace.result))
    }

    fn step(&mut self, index: usize, op: TraceOp) -> Result<OpOutcome, String> {
        let mask_before = self.map.array_map().mask();
        let outcome = match op {
            TraceOp::Contains(k) => {
                self.probe(k, false)?;
                self.result.counts.contains += 1;
                let res = self.map.contains(k);
                if res != self.model.contains(k) {
                    return Err(format!("contains({k}) = {res}, model says {}", !res));
                }
                OpOutcome::Bool(res)
            }
            TraceOp::Get(k) => {
                self.probe(k, false)?;
                self.result.counts.gets += 1;
                let res = self.map.get(k);
                let expected = match self.model.get(k) {
                    Some(&v) => v,
                    None => self.map.array_map().default_for(k),
                };
                if res != expected {
                    return Err(format!("get({k}) = {res}, expected {expected}"));
                }
                OpOutcome::Value(res)
            }
            TraceOp::Update(k, v) => {
                let seek = self.probe(k, true)?;
                self.result.counts.updates += 1;
                let old = self.model.clone();
                let res = self.map.update(k, v);
                self.check_growth(&old)?;
                if res {
                    if !self.map.contains(k) {
                        return Err(format!("update({k}, {v}) succeeded but key not contained"));
                    }
                    self.model = old.insert(k, v);
                    self.check_snapshot(&self.model.clone(), "after update")?;
                } else {
                    self.result.counts.rejected_updates += 1;
                    self.check_snapshot(&old, "after rejected update")?;
                }
                if self.map.array_map().mask() == mask_before {
                    if let Some(seek) = seek {
                        if res == (seek == SeekResult::Undefined) {
                            return Err(format!("update({k}) returned {res} but seek gave {seek:?}"));
                        }
                    }
                }
                OpOutcome::Bool(res)
            }
            TraceOp::Remove(k) => {
                let seek = self.probe(k, false)?;
                self.result.counts.removes += 1;
                let old = self.model.clone();
                let res = self.map.remove(k);
                self.check_growth(&old)?;
                if res {
                    self.model = old.remove(k);
                    self.check_snapshot(&self.model.clone(), "after remove")?;
                } else {
                    self.result.counts.rejected_removes += 1;
                    self.check_snapshot(&old, "after rejected remove")?;
                }
                if self.map.array_map().mask() == mask_before {
                    if let Some(seek) = seek {
                        if res == (seek == SeekResult::Undefined) {
                            return Err(format!("remove({k}) returned {res} but seek gave {seek:?}"));
                        }
                    }
                }
                OpOutcome::Bool(res)
            }
        };
        let size = self.map.size();
        if size as usize != self.model.len() {
            return Err(format!("size {size}, model has {} entries", self.model.len()));
        }
        let n = index + 1;
        if self.opts.invariant_stride > 0 && n.is_multiple_of(self.opts.invariant_stride) {
            self.check_invariant()?;
        }
        if self.opts.equivalence_stride > 0 && n.is_multiple_of(self.opts.equivalence_stride) {
            self.check_equivalence()?;
        }
        Ok(outcome)
    }

    fn check_growth(&mut self, model_before: &OrderedListMap<i64>) -> Result<(), String> {
        let events = self.map.take_growth_events();
        if events.is_empty() {
            return Ok(());
        }
        let mut expected_before = model_before.clone();
        for ev in &events {
            self.result.growth_events += 1;
            if let (Some(before), Some(after)) = (&ev.before, &ev.after) {
                if before != after {
                    return Err(format!("growth {} -> {} changed the model", ev.from_mask, ev.to_mask));
                }
                if *before != expected_before {
                    return Err(format!("growth {} -> {} started from a stale model", ev.from_mask, ev.to_mask));
                }
                expected_before = after.clone();
            }
        }
        // the new table must satisfy the invariant regardless of stride
        self.check_invariant()
    }
}

/// Replays `ops` on `map`, checking every result against the model.
///
/// The model starts as the snapshot of `map`. Execution stops at the first
/// divergence.
pub fn run_trace<M: MapUnderTest>(map: &mut M, ops: &[TraceOp], opts: &CheckOptions) -> TraceResult {
    let model = snapshot_model(map.array_map());
    let mut runner = Runner { map, model, opts: *opts, result: TraceResult::default() };

    let initial = runner.check_invariant().and_then(|()| runner.check_equivalence());
    if let Err(message) = initial {
        runner.result.divergence = Some(Divergence { op_index: 0, op: None, message });
    } else {
        for (i, &op) in ops.iter().enumerate() {
            match runner.step(i, op) {
                Ok(outcome) => {
                    runner.result.ops_run += 1;
                    if runner.opts.record_outcomes {
                        runner.result.outcomes.push(outcome);
                    }
                }
                Err(message) => {
                    runner.result.divergence = Some(Divergence { op_index: i, op: Some(op), message });
                    break;
                }
            }
        }
    }
    let mut result = runner.result;
    result.final_size = runner.map.size();
    result.final_mask = runner.map.array_map().mask();
    result
}

/// Smallest trace found (by greedy chunk deletion) that still diverges
/// when replayed on a fresh map from `fresh`.
pub fn shrink<M, F>(ops: &[TraceOp], fresh: F, opts: &CheckOptions) -> Vec<TraceOp>
where
    M: MapUnderTest,
    F: Fn() -> M,
{
    let fails = |candidate: &[TraceOp]| {
        let mut m = fresh();
        !run_trace(&mut m, candidate, opts).passed()
    };
    let mut current: Vec<TraceOp> = ops.to_vec();
    if !fails(&current) {
        return current;
    }
    let mut chunk = current.len().div_ceil(2).max(1);
    loop {
        let mut removed_any = false;
        let mut start = 0;
        while start < current.len() {
            let end = (start + chunk).min(current.len());
            let mut candidate = Vec::with_capacity(current.len() - (end - start));
            candidate.extend_from_slice(&current[..start]);
            candidate.extend_from_slice(&current[end..]);
            if fails(&candidate) {
                current = candidate;
                removed_any = true;
            } else {
                start = end;
            }
        }
        if chunk == 1 && !removed_any {
            return current;
        }
        if !removed_any {
            chunk = (chunk / 2).max(1);
        }
    }
}

/// Parameters of a seeded random trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub op_count: usize,
    pub mask_exponent: u32,
    /// Distinct valid keys to draw from; defaults to twice the capacity.
    pub key_pool_size: Option<usize>,
    /// Probability of drawing `0`, and separately of drawing `MIN`.
    pub sentinel_weight: f64,
    /// Run against a growable map starting at `mask_exponent`.
    pub growth: Option<GrowthConfig>,
    pub invariant_stride: Option<usize>,
    pub equivalence_stride: Option<usize>,
    pub record_outcomes: bool,
}

impl FuzzConfig {
    pub fn new(seed: u64, op_count: usize, mask_exponent: u32) -> Self {
        FuzzConfig {
            seed,
            op_count,
            mask_exponent,
            key_pool_size: None,
            sentinel_weight: 0.05,
            growth: None,
            invariant_stride: None,
            equivalence_stride: None,
            record_outcomes: false,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.mask_exponent > MAX_MASK_EXPONENT {
            return Err(Error::InvalidMaskExponent(self.mask_exponent));
        }
        if self.op_count == 0 {
            return Err(Error::InvalidConfig("op count must be positive".into()));
        }
        if self.key_pool_size == Some(0) {
            return Err(Error::InvalidConfig("key pool must be non-empty".into()));
        }
        if !(0.0..=0.5).contains(&self.sentinel_weight) {
            return Err(Error::InvalidConfig(format!(
                "sentinel weight {} not in [0, 0.5] (drawn once for each sentinel)",
                self.sentinel_weight
            )));
        }
        if let Some(g) = &self.growth {
            g.validate()?;
            if g.max_mask_exponent < self.mask_exponent {
                return Err(Error::InvalidConfig("growth ceiling below starting exponent".into()));
            }
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        1usize << self.mask_exponent
    }

    pub fn check_options(&self) -> CheckOptions {
        let base = CheckOptions::for_capacity(self.capacity());
        CheckOptions {
            invariant_stride: self.invariant_stride.unwrap_or(base.invariant_stride),
            equivalence_stride: self.equivalence_stride.unwrap_or(base.equivalence_stride),
            record_outcomes: self.record_outcomes,
        }
    }

    /// The seeded operation sequence.
    pub fn generate(&self) -> Trace {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let pool_size = self.key_pool_size.unwrap_or(2 * self.capacity());
        let mut pool = Vec::with_capacity(pool_size);
        let mut seen = std::collections::HashSet::with_capacity(pool_size);
        while pool.len() < pool_size {
            let k: i64 = rng.random();
            if is_valid_key(k) && seen.insert(k) {
                pool.push(k);
            }
        }
        let w = self.sentinel_weight;
        let ops = (0..self.op_count)
            .map(|_| {
                let r: f64 = rng.random();
                let key = if r < w {
                    0
                } else if r < 2.0 * w {
                    i64::MIN
                } else {
                    pool[rng.random_range(0..pool.len())]
                };
                match rng.random_range(0..10u32) {
                    0..=3 => TraceOp::Update(key, rng.random()),
                    4..=5 => TraceOp::Remove(key),
                    6..=7 => TraceOp::Get(key),
                    _ => TraceOp::Contains(key),
                }
            })
            .collect();
        Trace { mask: probe::mask_for_exponent(self.mask_exponent), ops }
    }
}

#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub trace: Trace,
    pub result: TraceResult,
    /// Shrunk reproducer, present when the run diverged.
    pub minimized: Option<Trace>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.result.passed()
    }
}

impl fmt::Display for FuzzReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        let r = &self.result;
        let mode = if c.growth.is_some() { "growable" } else { "fixed" };
        writeln!(f, "seed {} ops {} mask-exp {} mode {mode}", c.seed, c.op_count, c.mask_exponent)?;
        writeln!(
            f,
            "ran {} ops: {} updates ({} rejected), {} removes ({} rejected), {} gets, {} contains",
            r.ops_run,
            r.counts.updates,
            r.counts.rejected_updates,
            r.counts.removes,
            r.counts.rejected_removes,
            r.counts.gets,
            r.counts.contains
        )?;
        writeln!(
            f,
            "checks: {} invariant, {} equivalence, {} snapshot; {} growth events",
            r.invariant_checks, r.equivalence_checks, r.snapshot_checks, r.growth_events
        )?;
        writeln!(
            f,
            "probes: {} seeks, {} undefined, max {} iterations",
            r.probe.seeks, r.probe.undefined, r.probe.max_iterations
        )?;
        writeln!(f, "final size {} mask {}", r.final_size, r.final_mask)?;
        match &r.divergence {
            None => write!(f, "result: ok"),
            Some(d) => {
                write!(f, "result: DIVERGED at {d}")?;
                if let Some(m) = &self.minimized {
                    write!(f, "\nminimized to {} ops", m.ops.len())?;
                }
                Ok(())
            }
        }
    }
}

fn fresh_growable(mask_exponent: u32, growth: &GrowthConfig) -> GrowableLongMap {
    GrowableLongMap::new(mask_exponent, growth.clone(), zero_default()).expect("validated config").with_audit(true)
}

/// Generates and runs the trace described by `cfg`, shrinking it on failure.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport, Error> {
    cfg.validate()?;
    let trace = cfg.generate();
    let opts = cfg.check_options();
    let (result, minimized) = match &cfg.growth {
        None => {
            let fresh = || FixedLongMap::new(trace.mask, zero_default()).expect("validated mask");
            let result = run_trace(&mut fresh(), &trace.ops, &opts);
            let minimized = divergent_prefix(&result, &trace.ops).map(|ops| shrink(ops, fresh, &opts));
            (result, minimized)
        }
        Some(growth) => {
            let fresh = || fresh_growable(cfg.mask_exponent, growth);
            let result = run_trace(&mut fresh(), &trace.ops, &opts);
            let minimized = divergent_prefix(&result, &trace.ops).map(|ops| shrink(ops, fresh, &opts));
            (result, minimized)
        }
    };
    let minimized = minimized.map(|ops| Trace { mask: trace.mask, ops });
    Ok(FuzzReport { config: cfg.clone(), trace, result, minimized })
}

fn divergent_prefix<'a>(result: &TraceResult, ops: &'a [TraceOp]) -> Option<&'a [TraceOp]> {
    result.divergence.as_ref().map(|d| &ops[..(d.op_index + 1).min(ops.len())])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(mask: u32) -> FixedLongMap {
        FixedLongMap::new(mask, zero_default()).unwrap()
    }

    /// Forgets every update to key 13 after it has been stored once.
    struct Sticky13(FixedLongMap);

    impl MapUnderTest for Sticky13 {
        fn contains(&self, key: i64) -> bool {
            self.0.contains(key)
        }
        fn get(&self, key: i64) -> i64 {
            self.0.get(key)
        }
        fn update(&mut self, key: i64, value: i64) -> bool {
            if key == 13 && self.0.contains(13) {
                return true;
            }
            self.0.update(key, value)
        }
        fn remove(&mut self, key: i64) -> bool {
            self.0.remove(key)
        }
        fn size(&self) -> u32 {
            self.0.size()
        }
        fn array_map(&self) -> &FixedLongMap {
            &self.0
        }
    }

    #[test]
    fn fixed_map_passes_seeded_trace() {
        let report = run_fuzz(&FuzzConfig::new(1, 10_000, 8)).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.result.ops_run, 10_000);
        assert!(report.minimized.is_none());
    }

    #[test]
    fn capacity_overflow_trace() {
        let ops = [TraceOp::Update(1, 1), TraceOp::Update(2, 2), TraceOp::Update(3, 3), TraceOp::Get(3)];
        let opts = CheckOptions { record_outcomes: true, ..CheckOptions::for_capacity(2) };
        let r = run_trace(&mut fixed(1), &ops, &opts);
        assert!(r.passed(), "{:?}", r.divergence);
        assert_eq!(
            r.outcomes,
            vec![OpOutcome::Bool(true), OpOutcome::Bool(true), OpOutcome::Bool(false), OpOutcome::Value(0)]
        );
        assert_eq!(r.counts.rejected_updates, 1);
        assert_eq!(r.final_size, 2);
    }

    #[test]
    fn sentinel_only_trace() {
        let mut cfg = FuzzConfig::new(9, 2_000, 3);
        cfg.sentinel_weight = 0.5;
        let report = run_fuzz(&cfg).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.result.final_size <= 2);
        assert!(report.trace.ops.iter().all(|op| op.key() == 0 || op.key() == i64::MIN));
    }

    #[test]
    fn fuzz_is_deterministic() {
        let cfg = FuzzConfig::new(42, 3_000, 5);
        let a = run_fuzz(&cfg).unwrap();
        let b = run_fuzz(&cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.to_string(), b.to_string());
        assert_ne!(FuzzConfig::new(43, 3_000, 5).generate(), a.trace);
    }

    #[test]
    fn buggy_map_is_caught_and_shrunk() {
        let ops: Vec<TraceOp> = (0..200)
            .map(|i| match i % 4 {
                0 => TraceOp::Update(i, i),
                1 => TraceOp::Get(i - 1),
                2 => TraceOp::Update(13, i),
                _ => TraceOp::Contains(i),
            })
            .collect();
        let opts = CheckOptions::for_capacity(256);
        let fresh = || Sticky13(fixed(255));
        let r = run_trace(&mut fresh(), &ops, &opts);
        let d = r.divergence.clone().expect("bug must be detected");
        assert_eq!(d.op, Some(TraceOp::Update(13, 6)));

        let small = shrink(&ops[..=d.op_index], fresh, &opts);
        assert_eq!(small, vec![TraceOp::Update(13, 2), TraceOp::Update(13, 6)]);
        // the reproducer still fails on its own
        assert!(!run_trace(&mut fresh(), &small, &opts).passed());
        // and passes on the correct map
        assert!(run_trace(&mut fixed(255), &small, &opts).passed());
    }

    #[test]
    fn corrupt_initial_state_is_reported() {
        let mut m = fixed(7);
        m.update(5, 5);
        m.array_size = 3;
        let r = run_trace(&mut m, &[TraceOp::Get(5)], &CheckOptions::for_capacity(8));
        let d = r.divergence.unwrap();
        assert_eq!(d.op, None);
        assert_eq!(r.ops_run, 0);
    }

    #[test]
    fn config_validation() {
        assert!(FuzzConfig::new(1, 10, 31).validate().is_err());
        assert!(FuzzConfig::new(1, 0, 3).validate().is_err());
        let mut c = FuzzConfig::new(1, 10, 3);
        c.sentinel_weight = 0.7;
        assert!(c.validate().is_err());
        c.sentinel_weight = 0.05;
        c.key_pool_size = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_strides() {
        assert_eq!(CheckOptions::for_capacity(64).invariant_stride, 1);
        assert_eq!(CheckOptions::for_capacity(128).invariant_stride, 64);
    }
}
