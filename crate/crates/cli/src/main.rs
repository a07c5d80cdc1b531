use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use longmap::bench::{run_bench, BenchConfig};
use longmap::conformance::{
    check_equivalence, parse_trace, run_fuzz, run_trace, write_trace, CheckOptions, FuzzConfig, MapUnderTest,
    OpOutcome, Trace, TraceResult,
};
use longmap::state::{parse_state, write_state};
use longmap::{invariant, snapshot_model, zero_default, FixedLongMap, GrowableLongMap, GrowthConfig};

const EXIT_OK: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "longmap", version, about = "Fuzz, replay, check and benchmark the fixed-capacity i64 map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded random trace against the list-map model.
    Fuzz(FuzzArgs),
    /// Replay a trace file with full contract checking.
    Replay(ReplayArgs),
    /// Sweep occupancy levels and report latency and probe lengths.
    Bench(BenchArgs),
    /// Load a state dump and run the invariant and equivalence checks.
    Check(CheckArgs),
}

#[derive(Args)]
struct GrowthArgs {
    /// Use the growing decorator, starting at the given mask exponent.
    #[arg(long)]
    growable: bool,
    /// Occupancy above which the growable map reallocates.
    #[arg(long, default_value_t = 0.5, requires = "growable")]
    threshold: f64,
}

impl GrowthArgs {
    fn config(&self) -> Option<GrowthConfig> {
        self.growable.then(|| GrowthConfig { threshold: self.threshold, ..GrowthConfig::default() })
    }
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(0..=30))]
    mask_exp: u32,
    /// Probability of drawing key 0, and separately of drawing i64::MIN.
    #[arg(long, default_value_t = 0.05)]
    sentinel_weight: f64,
    /// Number of distinct valid keys to draw from (default: 2 x capacity).
    #[arg(long)]
    pool: Option<usize>,
    /// Invariant/equivalence check stride (default: 1 up to 64 slots, else 64).
    #[arg(long)]
    stride: Option<usize>,
    #[command(flatten)]
    growth: GrowthArgs,
    /// Write the generated trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write one outcome per op here.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Write the final map state here.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    /// Where to write the minimized trace on divergence.
    #[arg(long)]
    failure_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    trace: PathBuf,
    #[arg(long)]
    stride: Option<usize>,
    #[command(flatten)]
    growth: GrowthArgs,
    /// Write one outcome per op here.
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(0..=30))]
    mask_exp: u32,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.7,0.9")]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    ops_per_level: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    growth: GrowthArgs,
    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    state: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_outcomes(path: &Path, outcomes: &[OpOutcome]) -> Result<()> {
    let mut w = create(path)?;
    for o in outcomes {
        writeln!(w, "{o}")?;
    }
    w.flush()?;
    Ok(())
}

fn usage_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn fuzz(args: FuzzArgs) -> Result<u8> {
    let cfg = FuzzConfig {
        key_pool_size: args.pool,
        sentinel_weight: args.sentinel_weight,
        growth: args.growth.config(),
        invariant_stride: args.stride,
        equivalence_stride: args.stride,
        record_outcomes: args.results.is_some(),
        ..FuzzConfig::new(args.seed, args.ops, args.mask_exp)
    };
    let report = match run_fuzz(&cfg) {
        Ok(r) => r,
        Err(e) => return Ok(usage_error(e)),
    };
    println!("{report}");

    if let Some(path) = &args.trace_out {
        let mut w = create(path)?;
        write_trace(&mut w, &report.trace)?;
        w.flush()?;
    }
    if let Some(path) = &args.results {
        write_outcomes(path, &report.result.outcomes)?;
    }
    if let Some(path) = &args.dump_state {
        // rebuild the final state; the runner does not hand the map back
        let fresh = FixedLongMap::new(report.trace.mask, zero_default())?;
        let state = match cfg.growth.clone() {
            None => {
                let mut m = fresh;
                replay_ops(&mut m, &report.trace);
                m
            }
            Some(g) => {
                let mut m = GrowableLongMap::new(args.mask_exp, g, zero_default())?;
                replay_ops(&mut m, &report.trace);
                m.inner().clone()
            }
        };
        let mut w = create(path)?;
        write_state(&mut w, &state)?;
        w.flush()?;
    }

    if report.passed() {
        return Ok(EXIT_OK);
    }
    let path = args.failure_out.unwrap_or_else(|| PathBuf::from(format!("fuzz-failure-{}.trace", args.seed)));
    let minimized = report.minimized.as_ref().unwrap_or(&report.trace);
    let mut w = create(&path)?;
    write_trace(&mut w, minimized)?;
    w.flush()?;
    eprintln!("minimized trace written to {}", path.display());
    Ok(EXIT_VIOLATION)
}

fn replay_ops<M: MapUnderTest>(m: &mut M, trace: &Trace) {
    use longmap::conformance::TraceOp::*;
    for op in &trace.ops {
        match *op {
            Update(k, v) => {
                m.update(k, v);
            }
            Remove(k) => {
                m.remove(k);
            }
            Get(_) | Contains(_) => {}
        }
    }
}

fn replay(args: ReplayArgs) -> Result<u8> {
    let file = match File::open(&args.trace) {
        Ok(f) => f,
        Err(e) => return Ok(usage_error(format!("{}: {e}", args.trace.display()))),
    };
    let trace = match parse_trace(BufReader::new(file)) {
        Ok(t) => t,
        Err(e) => return Ok(usage_error(format!("{}: {e}", args.trace.display()))),
    };
    let capacity = trace.mask as usize + 1;
    let base = CheckOptions::for_capacity(capacity);
    let opts = CheckOptions {
        invariant_stride: args.stride.unwrap_or(base.invariant_stride),
        equivalence_stride: args.stride.unwrap_or(base.equivalence_stride),
        record_outcomes: args.results.is_some(),
    };
    let result: TraceResult = match args.growth.config() {
        None => run_trace(&mut FixedLongMap::new(trace.mask, zero_default())?, &trace.ops, &opts),
        Some(g) => {
            let exp = trace.mask.count_ones();
            let mut m = match GrowableLongMap::new(exp, g, zero_default()) {
                Ok(m) => m.with_audit(true),
                Err(e) => return Ok(usage_error(e)),
            };
            run_trace(&mut m, &trace.ops, &opts)
        }
    };
    if let Some(path) = &args.results {
        write_outcomes(path, &result.outcomes)?;
    }
    println!("replayed {} of {} ops", result.ops_run, trace.ops.len());
    println!("final size {}", result.final_size);
    match &result.divergence {
        None => {
            println!("result: ok");
            Ok(EXIT_OK)
        }
        Some(d) => {
            println!("result: contract violated at {d}");
            Ok(EXIT_VIOLATION)
        }
    }
}

fn bench(args: BenchArgs) -> Result<u8> {
    let cfg = BenchConfig {
        growth: args.growth.config(),
        seed: args.seed,
        ..BenchConfig::new(args.mask_exp, args.levels, args.ops_per_level)
    };
    let report = match run_bench(&cfg) {
        Ok(r) => r,
        Err(e) => return Ok(usage_error(e)),
    };
    print!("{report}");
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(EXIT_OK)
}

fn check(args: CheckArgs) -> Result<u8> {
    let file = match File::open(&args.state) {
        Ok(f) => f,
        Err(e) => return Ok(usage_error(format!("{}: {e}", args.state.display()))),
    };
    let parts = match parse_state(BufReader::new(file)) {
        Ok(p) => p,
        Err(e) => return Ok(usage_error(format!("{}: {e}", args.state.display()))),
    };
    let m = FixedLongMap::from_raw_parts(parts, zero_default());
    let report = invariant::check(&m);
    println!("{report}");
    if !report.is_valid() {
        return Ok(EXIT_VIOLATION);
    }
    match check_equivalence(&m, &snapshot_model(&m)) {
        Ok(()) => {
            println!("equivalence:        ok");
            Ok(EXIT_OK)
        }
        Err(v) => {
            println!("equivalence:        {v}");
            Ok(EXIT_VIOLATION)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fuzz(a) => fuzz(a),
        Command::Replay(a) => replay(a),
        Command::Bench(a) => bench(a),
        Command::Check(a) => check(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
