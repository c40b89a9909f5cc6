// SPDX-License-Identifier: Apache-2.0
mod common;

use std::io::Cursor;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vgf_core::depgraph::{Analysis, ThresholdLevel};
use vgf_core::fuzzer::campaign::{campaign_config, read_crashes, worker_seed};
use vgf_core::fuzzer::det::{self, stage_len};
use vgf_core::fuzzer::fitness::{arith_mean, bucket_total, geo_mean};
use vgf_core::fuzzer::forkserver::{self, HELLO, STATUS_FAULT};
use vgf_core::fuzzer::mutate::{havoc, DEFAULT_MAX_LEN};
use vgf_core::fuzzer::trim::{signature, trim, trim_by};
use vgf_core::fuzzer::{
    run_campaign, CampaignOptions, CampaignOutcome, ChampionDecision, Champions, Direction, Fitness, ForkClient, ForkServer, ProtocolError,
};
use vgf_core::harness::{replay, Harness};
use vgf_core::sim::SimMode;

const LOCK_CODE: [u8; 4] = [0xA5, 0x5A, 0xC3, 0x96];

fn lock_harness() -> Harness {
    let (_, d, c) = common::bench("lock_case");
    Harness::new(d, c, SimMode::Accurate).unwrap()
}

#[test]
fn fitness_scores_on_small_maps() {
    assert_eq!(Fitness::AflDefault.score(10, 2, &[1, 2, 3]), 20.0);
    let m = [4u8, 16];
    assert_eq!(Fitness::GeoMean.score(0, 0, &m), 8.0);
    assert_eq!(Fitness::ArithMean.score(0, 0, &m), 10.0);
    assert_eq!(Fitness::BucketCount.score(0, 0, &m), 2.0);
    assert_eq!(Fitness::BucketTotal.score(0, 0, &m), 20.0);
    for f in Fitness::ALL.into_iter().filter(|&f| f != Fitness::AflDefault) {
        assert_eq!(f.score(7, 7, &[]), 0.0, "{f:?}");
    }
    assert_eq!(bucket_total(&[255; 4]), 1020);
    assert_eq!(arith_mean(&[1, 2]), 1.5);
    assert_eq!(geo_mean(&[2, 8]), 4.0);
}

#[test]
fn fitness_names_parse() {
    for (s, f) in [
        ("default", Fitness::AflDefault),
        ("afl_default", Fitness::AflDefault),
        ("geo", Fitness::GeoMean),
        ("arith", Fitness::ArithMean),
        ("count", Fitness::BucketCount),
        ("total", Fitness::BucketTotal),
    ] {
        assert_eq!(s.parse::<Fitness>().unwrap(), f, "{s}");
    }
    assert!("median".parse::<Fitness>().is_err());
}

#[test]
fn only_afl_default_minimizes() {
    for f in Fitness::ALL {
        let want = if f == Fitness::AflDefault { Direction::Minimize } else { Direction::Maximize };
        assert_eq!(f.direction(), want);
        assert!(!f.better(5.0, 5.0), "ties never win");
    }
    // Shorter, faster runs score lower and so win under the default.
    let short = Fitness::AflDefault.score(4, 10, &[1]);
    let long = Fitness::AflDefault.score(40, 10, &[1]);
    assert!(Fitness::AflDefault.better(short, long));
}

#[test]
fn champion_rules() {
    let mut c = Champions::new(Fitness::AflDefault);
    assert!(c.is_empty());
    assert_eq!(c.offer(9, 0, 20.0), (ChampionDecision::Installed, None));
    assert_eq!(c.offer(9, 1, 12.0), (ChampionDecision::Replaced, Some(0)));
    assert_eq!(c.offer(9, 2, 30.0), (ChampionDecision::Kept, None));
    assert_eq!(c.get(9), Some((1, 12.0)));
    assert_eq!(c.len(), 1);

    let mut c = Champions::new(Fitness::BucketCount);
    c.offer(3, 0, 3.0);
    assert_eq!(c.offer(3, 1, 3.0), (ChampionDecision::Kept, None));
    assert_eq!(c.offer(3, 2, 4.0), (ChampionDecision::Replaced, Some(0)));
    assert_eq!(c.offer(4, 3, 1.0), (ChampionDecision::Installed, None));
    assert_eq!(c.len(), 2);

    c.rescore(3, 2, 10.0);
    assert_eq!(c.get(3), Some((2, 10.0)));
    c.rescore(3, 0, 1.0);
    assert_eq!(c.get(3), Some((2, 10.0)), "only the holder is rescored");
}

#[test]
fn havoc_is_deterministic_and_bounded() {
    let parent = b"abcdefgh".to_vec();
    let splice = b"0123456789".to_vec();
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..200).map(|_| havoc(&parent, Some(&splice), 64, &mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let c = havoc(&parent, None, 64, &mut rng);
        assert!(!c.is_empty() && c.len() <= 64);
    }
}

#[test]
fn det_bitflips_come_first() {
    let kids: Vec<_> = (0..8).map(|k| det::child(&[0x00], k).unwrap()).collect();
    let want: Vec<_> = (0..8).map(|b| vec![0x80u8 >> b]).collect();
    assert_eq!(kids, want);
}

/// Child count by enumeration and by the closed form.
#[test]
fn det_stage_counts() {
    for (n, want) in [(1usize, 100usize), (8, 1948), (32, 8956)] {
        let input = vec![0x11u8; n];
        let enumerated = (0..).take_while(|&k| det::child(&input, k).is_some()).count();
        assert_eq!(enumerated, want, "n={n}");
        assert_eq!(stage_len(n), want);
        if n >= 4 {
            assert_eq!(want, 292 * n - 388);
        }
    }
}

#[test]
fn det_children_keep_length() {
    let input = [1u8, 2, 3, 4, 5];
    for k in 0..stage_len(5) {
        let c = det::child(&input, k).unwrap();
        assert_eq!(c.len(), 5, "child {k}");
    }
}

#[test]
fn trim_drops_unread_tail_and_keeps_verdict() {
    let mut h = lock_harness();
    let mut input = LOCK_CODE.to_vec();
    input.extend(std::iter::repeat_n(0, 60));
    let before = signature(&mut h, &input).unwrap();
    assert!(before.fault.is_some());
    let out = trim(&mut h, &input).unwrap();
    assert!(out.len() < input.len(), "trimmed to {}", out.len());
    assert_eq!(&out[..4], &LOCK_CODE);
    assert_eq!(signature(&mut h, &out).unwrap(), before);
}

#[test]
fn trim_leaves_short_inputs() {
    let mut h = lock_harness();
    for input in [vec![], vec![7], vec![1, 2, 3, 4]] {
        assert_eq!(trim(&mut h, &input).unwrap(), input);
    }
}

#[test]
fn trim_by_stops_when_budget_runs_out() {
    let input = vec![0u8; 64];
    let mut calls = 0;
    let out = trim_by(&input, |_| {
        calls += 1;
        (calls <= 2).then_some(())
    });
    // One reference run and one accepted removal of a 4-byte block.
    assert_eq!(out.len(), 60);
}

#[test]
fn worker_seed_spreads() {
    assert_eq!(worker_seed(7, 0), worker_seed(7, 0));
    let seeds: std::collections::BTreeSet<_> = (0..64).map(|w| worker_seed(1, w)).collect();
    assert_eq!(seeds.len(), 64);
    assert_ne!(worker_seed(1, 0), worker_seed(2, 0));
}

fn lock_opts(seed: u64, budget: u64) -> CampaignOptions {
    CampaignOptions {
        seed,
        exec_budget: budget,
        selection: Some((Analysis::Cfa, ThresholdLevel::Eighth)),
        ..CampaignOptions::default()
    }
}

#[test]
fn campaign_is_deterministic() {
    let (_, d, c) = common::bench("lock_case");
    let opts = lock_opts(3, 20_000);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_campaign(d.clone(), &c, &opts, Some(a.path())).unwrap();
    let rb = run_campaign(d.clone(), &c, &opts, Some(b.path())).unwrap();
    assert_eq!(ra.to_json(), rb.to_json());
    assert_eq!(std::fs::read(a.path().join("report.json")).unwrap(), ra.to_json().into_bytes());
    assert_eq!(read_crashes(a.path(), &d.name).unwrap(), read_crashes(b.path(), &d.name).unwrap());
    assert_eq!(ra.execs_total, 20_000);
}

#[test]
fn multi_worker_campaign_is_deterministic() {
    let (_, d, c) = common::bench("seq_trojan");
    let opts = CampaignOptions {
        workers: 3,
        exec_budget: 6_001,
        seed: 11,
        ..CampaignOptions::default()
    };
    let ra = run_campaign(d.clone(), &c, &opts, None).unwrap();
    let rb = run_campaign(d.clone(), &c, &opts, None).unwrap();
    assert_eq!(ra.to_json(), rb.to_json());
    assert_eq!(ra.execs_total, 6_001);
}

#[test]
fn empty_tracked_set_collects_nothing() {
    let (_, d, c) = common::bench("lock_case");
    let cfg = (*c).clone().with_tracked(Vec::new());
    let r = run_campaign(
        d,
        &cfg,
        &CampaignOptions {
            exec_budget: 5_000,
            ..CampaignOptions::default()
        },
        None,
    )
    .unwrap();
    assert!(r.tracked.is_empty());
    assert_eq!(r.buckets_populated, 0);
    assert_eq!(r.champions, 0);
}

#[test]
fn cfa_selection_replaces_the_tracked_set() {
    let (_, d, c) = common::bench("counter_trojan");
    let opts = CampaignOptions {
        selection: Some((Analysis::Cfa, ThresholdLevel::Max)),
        ..CampaignOptions::default()
    };
    // trig has no control in-edges, so nothing is reachable.
    assert!(campaign_config(&d, &c, &opts).unwrap().tracked.is_empty());
    let opts = CampaignOptions {
        selection: Some((Analysis::Dcfa, ThresholdLevel::Min)),
        ..CampaignOptions::default()
    };
    let cfg = campaign_config(&d, &c, &opts).unwrap();
    let names: Vec<_> = cfg.tracked.iter().map(|&(s, _)| d.signals[s.index()].name.as_str()).collect();
    assert_eq!(names, ["trig"]);
}

#[test]
fn lock_campaign_finds_the_fault_and_crashes_replay() {
    let (_, d, c) = common::bench("lock_case");
    let dir = tempfile::tempdir().unwrap();
    let opts = CampaignOptions {
        stop_on_fault: true,
        ..lock_opts(1, 1_000_000)
    };
    let r = run_campaign(d.clone(), &c, &opts, Some(dir.path())).unwrap();
    assert_eq!(r.outcome, CampaignOutcome::FaultFound);
    let n = r.execs_to_fault().unwrap();
    assert!(n <= 1_000_000);
    assert!(!r.crashes.is_empty());
    for rel in &r.crashes {
        let (v, _) = replay(d.clone(), c.clone(), SimMode::Accurate, &dir.path().join(rel)).unwrap();
        assert_eq!(v.property(), Some("unlocked"), "{rel}");
    }
}

#[test]
fn zero_workers_rejected() {
    let (_, d, c) = common::bench("lock_case");
    let opts = CampaignOptions {
        workers: 0,
        ..CampaignOptions::default()
    };
    assert!(run_campaign(d, &c, &opts, None).is_err());
}

fn framed(inputs: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for i in inputs {
        out.extend((i.len() as u32).to_le_bytes());
        out.extend_from_slice(i);
    }
    out
}

#[test]
fn forkserver_serves_a_thousand_requests() {
    let mut fs = ForkServer::new(lock_harness());
    let inputs: Vec<Vec<u8>> = (0..1000u32).map(|k| k.to_le_bytes().to_vec()).collect();
    let refs: Vec<&[u8]> = inputs.iter().map(|v| v.as_slice()).collect();
    let mut tx = Vec::new();
    assert_eq!(fs.serve(Cursor::new(framed(&refs)), &mut tx).unwrap(), 1000);
    assert_eq!(fs.requests(), 1000);
    assert_eq!(&tx[..4], &HELLO);
    assert_eq!(tx.len(), 4 + 4 * 1000);
    assert!(tx[4..].chunks(4).all(|s| s == [0, 0, 0, 0]));
}

#[test]
fn forkserver_fault_status_carries_slot() {
    let mut fs = ForkServer::new(lock_harness());
    assert_eq!(fs.handle(&LOCK_CODE).unwrap(), STATUS_FAULT);
    assert_eq!(fs.handle(&[0; 4]).unwrap(), 0);
    let v = lock_harness().run(&LOCK_CODE).unwrap();
    assert_eq!(forkserver::status(&v.outcome), 0xF0);
}

#[test]
fn forkserver_rejects_truncated_frames() {
    let mut fs = ForkServer::new(lock_harness());
    let err = fs.serve(Cursor::new(vec![1, 0, 0]), Vec::new()).unwrap_err();
    assert!(matches!(err, ProtocolError::Truncated { expected: 4, got: 3 }));
    let mut frame = 10u32.to_le_bytes().to_vec();
    frame.extend([1, 2]);
    let err = fs.serve(Cursor::new(frame), Vec::new()).unwrap_err();
    assert!(matches!(err, ProtocolError::Truncated { expected: 10, got: 2 }));
    let err = fs.serve(Cursor::new(u32::MAX.to_le_bytes().to_vec()), Vec::new()).unwrap_err();
    assert!(matches!(err, ProtocolError::TooLarge(_)));
}

#[test]
fn forkserver_writes_crash_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut fs = ForkServer::new(lock_harness()).with_crash_dir(dir.path().to_path_buf());
    fs.handle(&[1]).unwrap();
    fs.handle(&LOCK_CODE).unwrap();
    assert_eq!(std::fs::read(dir.path().join("0.bin")).unwrap(), LOCK_CODE);
    assert!(!dir.path().join("1.bin").exists());
}

#[test]
fn fork_client_round_trip() {
    // Pre-recorded server output stands in for a pipe.
    let mut fs = ForkServer::new(lock_harness());
    let mut tx = Vec::new();
    fs.serve(Cursor::new(framed(&[&LOCK_CODE, &[0]])), &mut tx).unwrap();
    let mut sent = Vec::new();
    let mut client = ForkClient::connect(Cursor::new(tx), &mut sent).unwrap();
    assert_eq!(client.run(&LOCK_CODE).unwrap(), 0xF0);
    assert_eq!(client.run(&[0]).unwrap(), 0);
    drop(client);
    assert_eq!(sent, framed(&[&LOCK_CODE, &[0]]));
    assert!(ForkClient::connect(Cursor::new(b"NOPE".to_vec()), Vec::new()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn havoc_respects_max_len(seed in any::<u64>(), parent in proptest::collection::vec(any::<u8>(), 1..64)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cur = parent;
        for _ in 0..160 {
            cur = havoc(&cur, Some(&[0xAA; 300]), DEFAULT_MAX_LEN, &mut rng);
            prop_assert!(!cur.is_empty() && cur.len() <= DEFAULT_MAX_LEN);
        }
    }

    #[test]
    fn trimming_preserves_signature(input in proptest::collection::vec(any::<u8>(), 5..48)) {
        let mut h = lock_harness();
        let before = signature(&mut h, &input).unwrap();
        let out = trim(&mut h, &input).unwrap();
        prop_assert!(out.len() <= input.len());
        prop_assert_eq!(signature(&mut h, &out).unwrap(), before);
    }

    #[test]
    fn geo_mean_lies_between_min_and_max(m in proptest::collection::vec(1u8..=255, 1..200)) {
        let g = geo_mean(&m);
        let lo = *m.iter().min().unwrap() as f64;
        let hi = *m.iter().max().unwrap() as f64;
        prop_assert!(g >= lo * (1.0 - 1e-15) && g <= hi * (1.0 + 1e-15));
        prop_assert!(g <= arith_mean(&m) * (1.0 + 1e-15));
    }
}
