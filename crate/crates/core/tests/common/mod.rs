// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::sync::Arc;

use vgf_core::bench::{find_benchmark, Benchmark};
use vgf_core::harness::{default_config, load_config, Harness, HarnessConfig};
use vgf_core::hdl::{parse_design, Design, SignalId, SourceText};
use vgf_core::sim::SimMode;

pub fn design(src: &str) -> Arc<Design> {
    Arc::new(parse_design(&SourceText::new(src, "<test>")).expect("fixture parses"))
}

pub fn bench(name: &str) -> (Benchmark, Arc<Design>, Arc<HarnessConfig>) {
    let b = find_benchmark(name).expect("bundled benchmark");
    let d = Arc::new(b.design().expect("bundled design parses"));
    let c = Arc::new(b.config(&d).expect("bundled config loads"));
    (b, d, c)
}

pub fn harness(d: &Arc<Design>, cfg: &str, mode: SimMode) -> Harness {
    let c = Arc::new(load_config(cfg, d).expect("fixture config loads"));
    Harness::new(d.clone(), c, mode).expect("harness")
}

pub fn default_harness(d: &Arc<Design>, mode: SimMode) -> Harness {
    Harness::new(d.clone(), Arc::new(default_config(d)), mode).expect("harness")
}

pub fn id(d: &Design, name: &str) -> SignalId {
    d.find_signal(name).unwrap_or_else(|| panic!("no signal {name}"))
}
