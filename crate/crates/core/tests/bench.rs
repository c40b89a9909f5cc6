// SPDX-License-Identifier: Apache-2.0
mod common;

use vgf_core::bench::{bundled_benchmarks, run_oracle, OracleEntry, ORACLE_BOUND};
use vgf_core::harness::Harness;
use vgf_core::sim::SimMode;

#[test]
fn five_bundled_designs() {
    let names: Vec<_> = bundled_benchmarks().iter().map(|b| b.name).collect();
    assert_eq!(names, ["lock_case", "lock_micro", "async_fifo", "counter_trojan", "seq_trojan"]);
}

#[test]
fn records_match_benchmarks() {
    for b in bundled_benchmarks() {
        let r = b.record().unwrap();
        assert_eq!(r.name, b.name);
        assert_eq!(r.bound, ORACLE_BOUND);
        assert_eq!(r.alphabet, b.alphabet);
        for (mode, e) in [(SimMode::Accurate, &r.accurate), (SimMode::Fast, &r.fast)] {
            assert_eq!(e.input.is_some(), b.expected(mode).unwrap(), "{} {mode:?}", b.name);
        }
    }
}

#[test]
fn recorded_inputs_replay() {
    for b in bundled_benchmarks() {
        let (_, d, c) = common::bench(b.name);
        let r = b.record().unwrap();
        for (mode, e) in [(SimMode::Accurate, &r.accurate), (SimMode::Fast, &r.fast)] {
            let Some(input) = e.input_bytes() else { continue };
            let v = Harness::new(d.clone(), c.clone(), mode).unwrap().run(&input).unwrap();
            assert_eq!(v.property(), e.property.as_deref(), "{} {mode:?}", b.name);
        }
    }
}

/// Re-runs the search and compares with the frozen record.
#[test]
fn oracle_reproduces_records() {
    for b in bundled_benchmarks() {
        let r = b.record().unwrap();
        for (mode, e) in [(SimMode::Accurate, &r.accurate), (SimMode::Fast, &r.fast)] {
            let got = OracleEntry::from_result(&run_oracle(&b, mode).unwrap());
            assert_eq!(&got, e, "{} {mode:?}", b.name);
        }
    }
}

#[test]
fn lock_oracle_is_the_code() {
    let r = bundled_benchmarks()[0].record().unwrap();
    assert_eq!(r.accurate.input.as_deref(), Some("a55ac396"));
}
