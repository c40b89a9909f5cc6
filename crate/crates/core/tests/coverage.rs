// SPDX-License-Identifier: Apache-2.0
mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{design, id};
use proptest::prelude::*;
use serde_json::Value;
use vgf_core::coverage::{
    compress_values, compress_values_with, vectorize_values, Compression, CompressionOptions, CoverageError, CoverageMap, Monitor, TrackedSignal, MAP_SIZE,
};
use vgf_core::hdl::SignalId;
use vgf_core::sim::{new_sim, SimMode};

const GOLDEN: &str = include_str!("golden/hashes.json");

/// The Appendix-style fixture: `a` and `b` follow `x`, optionally with `b`
/// one timestep late.
const UNDELAYED: &str = "module l(input x, output signal_a, output signal_b);
    assign signal_a = x;
    assign signal_b = x;
endmodule";

const DELAYED: &str = "module l(input x, output signal_a, output signal_b);
    assign signal_a = x;
    #1 assign signal_b = x;
endmodule";

const ONLY_A: &str = "module l(input x, output signal_a, output signal_b);
    assign signal_a = x;
    assign signal_b = 1'b0;
endmodule";

fn num(v: &Value) -> u128 {
    let s = v.as_str().unwrap();
    u128::from_str_radix(s.trim_start_matches("0x"), 16).unwrap()
}

fn tracked(code: u32, width: u32) -> TrackedSignal {
    TrackedSignal {
        code,
        signal: SignalId(0),
        width,
        weight: 1,
    }
}

#[test]
fn compress_values_matches_reference_blake2b() {
    let g: Value = serde_json::from_str(GOLDEN).unwrap();
    let cases = g["compress"].as_array().unwrap();
    assert!(cases.len() > 60);
    for c in cases {
        let t = tracked(c["code"].as_u64().unwrap() as u32, c["width"].as_u64().unwrap() as u32);
        let (prev, next) = (num(&c["prev"]), num(&c["next"]));
        assert_eq!(compress_values(&t, prev, next).unwrap() as u64, c["index"].as_u64().unwrap(), "{c}");
        assert_eq!(
            compress_values_with(&t, prev, next, true).unwrap() as u64,
            c["index_shift_prev_only"].as_u64().unwrap(),
            "{c}"
        );
    }
}

#[test]
fn vectorize_values_matches_reference_blake2b() {
    let g: Value = serde_json::from_str(GOLDEN).unwrap();
    for c in g["vectorize"].as_array().unwrap() {
        let lanes: Vec<(TrackedSignal, u128)> = c["lanes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|l| {
                (
                    tracked(l["code"].as_u64().unwrap() as u32, l["width"].as_u64().unwrap() as u32),
                    num(&l["value"]),
                )
            })
            .collect();
        assert_eq!(vectorize_values(&lanes) as u64, c["index"].as_u64().unwrap(), "{c}");
    }
}

#[test]
fn code_and_order_are_part_of_the_hash() {
    let (a, b) = (tracked(1, 8), tracked(2, 8));
    assert_eq!(compress_values(&a, 0, 1).unwrap(), compress_values(&a, 0, 1).unwrap());
    assert_ne!(compress_values(&a, 0, 1).unwrap(), compress_values(&b, 0, 1).unwrap());
    assert_ne!(vectorize_values(&[(a, 3), (b, 4)]), vectorize_values(&[(b, 4), (a, 3)]));
    let one_bit = tracked(9, 1);
    let reachable: BTreeSet<u16> = [0, 1].iter().map(|&v| vectorize_values(&[(one_bit, v)])).collect();
    assert!(reachable.len() <= 2);
}

#[test]
fn oversized_values_are_rejected() {
    let t = tracked(1, 4);
    assert_eq!(compress_values(&t, 0x10, 0), Err(CoverageError::WidthMismatch { width: 4, value: 0x10 }));
    assert!(compress_values(&t, 0, 0x1F).is_err());
}

#[test]
fn record_adds_weight_and_saturates() {
    let mut m = CoverageMap::new();
    m.record(7, 1);
    assert_eq!((m.bucket(7), m.populated()), (1, 1));
    for _ in 0..300 {
        m.record(7, 1);
    }
    assert_eq!(m.bucket(7), 255);
    let mut m = CoverageMap::new();
    m.record(9, 5);
    assert_eq!(m.bucket(9), 5);
    m.record(9, 5);
    assert_eq!(m.bucket(9), 10);
    assert_eq!(m.buckets().len(), MAP_SIZE);
}

#[test]
fn export_round_trips_the_raw_image() {
    let mut m = CoverageMap::new();
    m.record(0, 3);
    m.record(65535, 200);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("map.bin");
    m.export(&p).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(bytes.len(), MAP_SIZE);
    let back = CoverageMap::from_bytes(&bytes).unwrap();
    assert_eq!(back.nonzero(), vec![(0, 3), (65535, 200)]);
    assert!(CoverageMap::from_bytes(&bytes[1..]).is_none());
}

/// Populated buckets after driving `x` high and letting delays expire.
fn delayed_fixture(src: &str) -> Vec<(u16, u8)> {
    let d = design(src);
    let t = |n: &str| TrackedSignal::new(id(&d, n), 1, 1);
    let options = CompressionOptions {
        kind: Compression::VectorizeValues,
        ..CompressionOptions::default()
    };
    let mut mon = Monitor::new(vec![t("signal_a"), t("signal_b")], options, d.signals.len());
    let mut s = new_sim(d.clone(), SimMode::Accurate).unwrap();
    s.poke(id(&d, "x"), 1).unwrap();
    s.settle(&mut mon).unwrap();
    s.advance_time(3, &mut mon).unwrap();
    mon.map.nonzero()
}

#[test]
fn undelayed_fixture_hashes_one_vector_twice() {
    let b = delayed_fixture(UNDELAYED);
    assert_eq!(b.len(), 1, "{b:?}");
    assert_eq!(b[0].1, 2);
}

#[test]
fn delayed_fixture_populates_two_buckets() {
    let b = delayed_fixture(DELAYED);
    assert_eq!(b.len(), 2, "{b:?}");
    assert!(b.iter().all(|&(_, n)| n == 1));
}

#[test]
fn single_change_populates_one_bucket() {
    assert_eq!(delayed_fixture(ONLY_A).iter().map(|b| b.1).collect::<Vec<_>>(), [1]);
}

#[test]
fn lock_case_two_cycle_transitions_do_not_collide() {
    let (_, d, c) = common::bench("lock_case");
    let mut h = vgf_core::harness::Harness::new(d.clone(), c.clone(), SimMode::Accurate).unwrap();
    let tracked: BTreeMap<SignalId, u32> = c.tracked.iter().map(|&(s, _)| (s, d.signals[s.index()].width)).collect();
    let mut transitions = BTreeSet::new();
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            // Inputs are sampled one edge after they are driven.
            let (_, trace) = h.run_traced(&[a, b], 3).unwrap();
            for e in trace.iter().filter(|e| tracked.contains_key(&e.signal)) {
                transitions.insert((e.signal, e.prev, e.next));
            }
        }
    }
    // 0->1, 1->0 and 1->4 on the state register.
    assert_eq!(transitions.len(), 3, "{transitions:?}");
    // Every other FSM transition, read off the case arms.
    let state = id(&d, "state");
    for (p, n) in [(4, 0), (4, 7), (7, 0), (7, 5)] {
        transitions.insert((state, p, n));
    }
    transitions.insert((id(&d, "unlocked"), 0, 1));
    let mut seen: BTreeMap<u16, (SignalId, u128, u128)> = BTreeMap::new();
    for &(s, prev, next) in &transitions {
        let t = TrackedSignal::new(s, tracked[&s], 1);
        let i = compress_values(&t, prev, next).unwrap();
        if let Some(other) = seen.insert(i, (s, prev, next)) {
            panic!("bucket {i} shared by {other:?} and {:?}", (s, prev, next));
        }
    }
}

fn map_from(entries: &[(u16, u8)], commit: bool) -> CoverageMap {
    let mut m = CoverageMap::new();
    for &(i, w) in entries {
        m.record(i, w);
    }
    if commit {
        m.commit_virgin();
    }
    m
}

proptest! {
    #[test]
    fn merge_is_commutative_and_associative(
        a in prop::collection::vec((any::<u16>(), 1u8..=255), 0..40),
        b in prop::collection::vec((any::<u16>(), 1u8..=255), 0..40),
        c in prop::collection::vec((any::<u16>(), 1u8..=255), 0..40),
    ) {
        let (ma, mb, mc) = (map_from(&a, true), map_from(&b, true), map_from(&c, true));
        let mut ab = ma.clone();
        ab.merge(&mb);
        let mut ba = mb.clone();
        ba.merge(&ma);
        prop_assert_eq!(&ab, &ba);
        prop_assert_eq!(ab.nonzero(), ba.nonzero());
        prop_assert_eq!(ab.virgin_count(), ba.virgin_count());
        let mut ab_c = ab.clone();
        ab_c.merge(&mc);
        let mut bc = mb.clone();
        bc.merge(&mc);
        let mut a_bc = ma.clone();
        a_bc.merge(&bc);
        prop_assert_eq!(&ab_c, &a_bc);
        prop_assert_eq!(ab_c.virgin_count(), a_bc.virgin_count());
    }

    #[test]
    fn virgin_set_only_grows(runs in prop::collection::vec(prop::collection::vec((any::<u16>(), 1u8..=8), 0..20), 1..10)) {
        let mut m = CoverageMap::new();
        let mut last = 0;
        let mut ever = BTreeSet::new();
        for run in runs {
            m.begin_run();
            for &(i, w) in &run {
                m.record(i, w);
                ever.insert(i);
            }
            let fresh = m.count_new();
            prop_assert_eq!(m.commit_virgin(), fresh);
            prop_assert!(m.virgin_count() >= last);
            last = m.virgin_count();
            prop_assert_eq!(last, ever.len());
            prop_assert!(ever.iter().all(|&i| !m.is_virgin(i)));
        }
    }

    #[test]
    fn buckets_never_wrap(w in prop::collection::vec(any::<u8>(), 1..200)) {
        let mut m = CoverageMap::new();
        let mut total = 0u32;
        for &x in &w {
            m.record(3, x);
            total += x as u32;
            prop_assert_eq!(m.bucket(3) as u32, total.min(255));
        }
    }

    #[test]
    fn compress_is_deterministic(code in any::<u32>(), width in 1u32..=128, a in any::<u128>(), b in any::<u128>()) {
        let m = vgf_core::bits::mask(width);
        let t = tracked(code, width);
        prop_assert_eq!(compress_values(&t, a & m, b & m).unwrap(), compress_values(&t, a & m, b & m).unwrap());
    }
}
