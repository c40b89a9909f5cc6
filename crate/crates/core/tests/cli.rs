// SPDX-License-Identifier: Apache-2.0
use std::path::Path;
use std::process::Command;

use vgf_core::cli::{run, EXIT_FAULT, EXIT_NO_FAULT, EXIT_USAGE};

fn vgf(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("vgf").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fuzz_needs_a_target() {
    let (code, _, err) = vgf(&["fuzz", "--seed", "1"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--bench or --design"), "{err}");
}

#[test]
fn unknown_flags_and_benches_are_usage_errors() {
    assert_eq!(vgf(&["fuzz", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(vgf(&["fuzz", "--bench", "nope", "--seed", "1"]).0, EXIT_USAGE);
    assert_eq!(vgf(&["analyze", "--bench", "lock_case", "--tau", "max/3"]).0, EXIT_USAGE);
    let (code, out, _) = vgf(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("fuzz"));
}

#[test]
fn tiny_budget_exits_no_fault() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100 {
        let seed = seed.to_string();
        let (code, out, err) = vgf(&["fuzz", "--bench", "lock_case", "--execs", "10", "--seed", &seed, "--out", s(dir.path())]);
        assert_eq!(code, EXIT_NO_FAULT, "seed {seed}: {out}{err}");
        assert!(out.starts_with("no fault in 10 execs"));
    }
}

#[test]
fn fuzz_writes_report_and_replayable_crash() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = vgf(&[
        "fuzz",
        "--bench",
        "lock_case",
        "--analysis",
        "cfa",
        "--tau",
        "max8",
        "--seed",
        "1",
        "--execs",
        "1000000",
        "--stop-on-fault",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, EXIT_FAULT, "{out}{err}");
    assert!(out.starts_with("fault after "));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"], "fault_found");
    assert!(dir.path().join("stats.jsonl").exists());

    let crash = dir.path().join("crashes/lock_case/0.bin");
    // The benchmark is inferred from the crash directory name.
    let (code, out, _) = vgf(&["replay", s(&crash)]);
    assert_eq!(code, EXIT_FAULT, "{out}");
    assert!(out.contains("fault unlocked at t="));
    assert!(out.contains("unlocked 0->1"));
}

#[test]
fn replay_errors_and_clean_runs() {
    let (code, _, err) = vgf(&["replay", "/nonexistent/0.bin", "--bench", "lock_case"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("no such file"));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("zeros.bin");
    std::fs::write(&p, [0u8; 4]).unwrap();
    let (code, out, _) = vgf(&["replay", s(&p), "--bench", "lock_case"]);
    assert_eq!(code, EXIT_NO_FAULT);
    assert!(out.contains("clean after"));
}

#[test]
fn design_flag_picks_up_sibling_config() {
    let dir = tempfile::tempdir().unwrap();
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../bench/lock_case");
    std::fs::copy(root.join("design.vgf.v"), dir.path().join("design.vgf.v")).unwrap();
    std::fs::copy(root.join("harness.cfg"), dir.path().join("harness.cfg")).unwrap();
    let (code, out, err) = vgf(&["analyze", "--design", s(&dir.path().join("design.vgf.v")), "--analysis", "dfa"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("dfa max: 0 signal(s)"), "{out}");
}

#[test]
fn analyze_counter_trojan_at_min() {
    let (code, out, _) = vgf(&["analyze", "--bench", "counter_trojan", "--analysis", "dcfa", "--tau", "min"]);
    assert_eq!(code, 0);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines[0], "# counter_trojan dcfa min: 1 signal(s)");
    assert!(lines[1].starts_with("trig\tpd=0\tweight="), "{out}");
    assert_eq!(lines.len(), 2);
}

#[test]
fn sweep_emits_rows_and_medians() {
    let args = [
        "sweep",
        "--bench",
        "lock_case",
        "--analysis",
        "dfa,cfa",
        "--tau",
        "max8",
        "--seeds",
        "1,2",
        "--execs",
        "300000",
    ];
    let (code, out, err) = vgf(&args);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<_> = out.lines().collect();
    assert_eq!(rows[0], "bench,analysis,tau,seed,execs_to_fault,selected_count");
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[1], "lock_case,dfa,max/8,1,NA,0");
    assert_eq!(rows[2], "lock_case,dfa,max/8,2,NA,0");
    assert!(rows[3].starts_with("lock_case,cfa,max/8,1,"));
    assert!(err.contains("median lock_case dfa max/8: NA (0 of 2 found)"), "{err}");
    assert!(err.contains("median lock_case cfa max/8: "));
    // Same arguments, same bytes.
    assert_eq!(vgf(&args).1, out);
}

#[test]
fn seed_falls_back_to_environment() {
    let bin = env!("CARGO_BIN_EXE_vgf");
    let report = |seed_env: &str| {
        let dir = tempfile::tempdir().unwrap();
        let st = Command::new(bin)
            .args(["fuzz", "--bench", "seq_trojan", "--execs", "2000", "--out", s(dir.path())])
            .env("VGF_SEED", seed_env)
            .output()
            .unwrap();
        assert!(st.status.code().is_some());
        std::fs::read_to_string(dir.path().join("report.json")).unwrap()
    };
    let a = report("42");
    assert!(a.contains("\"seed\": 42"));
    assert_eq!(a, report("42"));
    assert_ne!(a, report("43"));
    let dir = tempfile::tempdir().unwrap();
    let st = Command::new(bin)
        .args(["fuzz", "--bench", "seq_trojan", "--execs", "10", "--out", s(dir.path())])
        .env("VGF_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
}

#[test]
fn serve_speaks_the_protocol_over_stdio() {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_vgf"))
        .args(["serve", "--bench", "lock_case"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    for input in [&[0xA5u8, 0x5A, 0xC3, 0x96][..], &[0]] {
        stdin.write_all(&(input.len() as u32).to_le_bytes()).unwrap();
        stdin.write_all(input).unwrap();
    }
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(out.stdout, [b"VGF\x01".as_slice(), &0xF0u32.to_le_bytes(), &0u32.to_le_bytes()].concat());
}
