use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn longmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longmap")).args(args).output().expect("run longmap")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fuzz_passes() {
    let out = longmap(&["fuzz", "--seed", "1", "--ops", "10000", "--mask-exp", "8"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("result: ok"));
}

#[test]
fn fuzz_growable_passes() {
    let out = longmap(&["fuzz", "--seed", "3", "--ops", "5000", "--mask-exp", "1", "--growable"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("mode growable"));
}

#[test]
fn fuzz_rejects_bad_flags() {
    assert_eq!(code(&longmap(&["fuzz", "--mask-exp", "31"])), 2);
    assert_eq!(code(&longmap(&["fuzz", "--ops", "many"])), 2);
    assert_eq!(code(&longmap(&["fuzz", "--sentinel-weight", "0.9"])), 2);
    assert_eq!(code(&longmap(&["fuzz", "--threshold", "0.5"])), 2);
    assert_eq!(code(&longmap(&["fuzz", "--growable", "--threshold", "0"])), 2);
}

#[test]
fn fuzz_is_deterministic() {
    let args = ["fuzz", "--seed", "77", "--ops", "3000", "--mask-exp", "5"];
    let a = longmap(&args);
    let b = longmap(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fuzz_trace_replays_with_same_results() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    let fuzz_results = dir.path().join("fuzz.out");
    let replay_results = dir.path().join("replay.out");
    let out = longmap(&[
        "fuzz",
        "--seed",
        "5",
        "--ops",
        "4000",
        "--mask-exp",
        "4",
        "--trace-out",
        path_str(&trace),
        "--results",
        path_str(&fuzz_results),
    ]);
    assert_eq!(code(&out), 0);
    let out = longmap(&["replay", path_str(&trace), "--results", path_str(&replay_results)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let a = fs::read_to_string(&fuzz_results).unwrap();
    assert_eq!(a.lines().count(), 4000);
    assert_eq!(a, fs::read_to_string(&replay_results).unwrap());
}

#[test]
fn replay_hand_written_trace() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    fs::write(&trace, "mask 7\nU 12 34\nG 12\nR 12\n").unwrap();
    let out = longmap(&["replay", path_str(&trace)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("final size 0"));
}

#[test]
fn replay_parse_errors() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    fs::write(&trace, "mask 5\nU 1 1\n").unwrap();
    let out = longmap(&["replay", path_str(&trace)]);
    assert_eq!(code(&out), 2);

    fs::write(&trace, "mask 3\nU 1 1\nQ 2\n").unwrap();
    let out = longmap(&["replay", path_str(&trace)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(code(&longmap(&["replay", path_str(&dir.path().join("missing"))])), 2);
}

#[test]
fn replay_capacity_overflow_is_not_a_violation() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    fs::write(&trace, "mask 1\nU 1 1\nU 2 2\nU 3 3\nU 0 4\nU -9223372036854775808 5\nC 3\n").unwrap();
    let out = longmap(&["replay", path_str(&trace)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("final size 4"));
}

#[test]
fn check_dump_of_fuzzed_map() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("s.state");
    let out = longmap(&["fuzz", "--seed", "2", "--ops", "2000", "--mask-exp", "6", "--dump-state", path_str(&state)]);
    assert_eq!(code(&out), 0);
    let out = longmap(&["check", path_str(&state)]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("equivalence:        ok"));
}

#[test]
fn check_reports_violations() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("s.state");

    fs::write(&state, "mask 3\nextra 0 0 0\nslot 0 5 1\nslot 2 5 2\n").unwrap();
    let out = longmap(&["check", path_str(&state)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("no_duplicates:      false"), "{}", stdout(&out));

    // a key placed one step past its home slot, with 0 at home
    let k: i64 = 12345;
    let mask = 15u32;
    let home = longmap::probe::to_index(k, mask);
    fs::write(&state, format!("mask {mask}\nextra 0 0 0\nslot {} {k} 1\n", (home + 1) & mask)).unwrap();
    let out = longmap(&["check", path_str(&state)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("all_keys_seekable:  false"), "{}", stdout(&out));
}

#[test]
fn check_malformed_state() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("s.state");
    fs::write(&state, "mask 3\nslot 9 1 1\n").unwrap();
    assert_eq!(code(&longmap(&["check", path_str(&state)])), 2);
}

#[test]
fn bench_writes_json() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("bench.json");
    let out = longmap(&[
        "bench",
        "--mask-exp",
        "10",
        "--levels",
        "0,0.5,0.9",
        "--ops-per-level",
        "500",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["capacity"], 1024);
    assert_eq!(json["mode"], "fixed");
    let levels = json["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    assert_eq!(levels[0]["mean_probe_length"], 1.0);
    assert!(levels[2]["get"]["p99_ns"].is_u64());
}

#[test]
fn bench_rejects_bad_levels() {
    assert_eq!(code(&longmap(&["bench", "--levels", "0.5,0.1"])), 2);
    assert_eq!(code(&longmap(&["bench", "--levels", "x"])), 2);
    assert_eq!(code(&longmap(&["bench", "--mask-exp", "31"])), 2);
}
