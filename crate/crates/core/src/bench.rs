// SPDX-License-Identifier: Apache-2.0
//! Bundled benchmark designs and their ground-truth oracle.
//!
//! The oracle is a breadth-first search over scheduling rounds with the
//! simulator state as the deduplication key. Each round enumerates every
//! alphabet byte for each byte the round consumes, so with zero in the
//! alphabet a search bounded at `n` bytes covers every sequence of length
//! at most `n` drawn from the alphabet.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitReader;
use crate::harness::{load_config, ConfigError, Harness, HarnessConfig, HarnessError, Outcome};
use crate::hdl::{parse_design, Design, ParseError, SourceText};
use crate::sim::{SimError, SimMode};

/// Maximum sequence length the bundled oracles search.
pub const ORACLE_BOUND: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedVerdict {
    pub mode: SimMode,
    /// Whether some input within the oracle bound fires the property.
    pub reachable: bool,
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub summary: &'static str,
    pub design_source: &'static str,
    pub config_source: &'static str,
    /// Recorded oracle result, `bench/<name>/oracle.json`.
    pub oracle_json: &'static str,
    /// Per-round byte values the oracle enumerates.
    pub alphabet: Vec<u8>,
    pub expected: Vec<ExpectedVerdict>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("benchmark {0}: rounds must consume whole bytes")]
    RoundWidth(String),
    #[error("bad oracle record: {0}")]
    Record(#[from] serde_json::Error),
}

impl Benchmark {
    pub fn design(&self) -> Result<Design, ParseError> {
        parse_design(&SourceText::new(self.design_source, format!("bench/{}/design.vgf.v", self.name)))
    }

    pub fn config(&self, design: &Design) -> Result<HarnessConfig, ConfigError> {
        load_config(self.config_source, design)
    }

    pub fn record(&self) -> Result<OracleRecord, BenchError> {
        Ok(serde_json::from_str(self.oracle_json)?)
    }

    pub fn expected(&self, mode: SimMode) -> Option<bool> {
        self.expected.iter().find(|e| e.mode == mode).map(|e| e.reachable)
    }
}

macro_rules! bundled {
    ($name:literal) => {
        (
            include_str!(concat!("../../../bench/", $name, "/design.vgf.v")),
            include_str!(concat!("../../../bench/", $name, "/harness.cfg")),
            include_str!(concat!("../../../bench/", $name, "/oracle.json")),
        )
    };
}

fn verdicts(accurate: bool, fast: bool) -> Vec<ExpectedVerdict> {
    vec![
        ExpectedVerdict {
            mode: SimMode::Accurate,
            reachable: accurate,
        },
        ExpectedVerdict {
            mode: SimMode::Fast,
            reachable: fast,
        },
    ]
}

/// The five bundled designs.
pub fn bundled_benchmarks() -> Vec<Benchmark> {
    let all_bytes: Vec<u8> = (0..=255).collect();
    let mk = |name, summary, (d, c, o): (&'static str, &'static str, &'static str), alphabet: Vec<u8>, exp| Benchmark {
        name,
        summary,
        design_source: d,
        config_source: c,
        oracle_json: o,
        alphabet,
        expected: exp,
    };
    vec![
        mk(
            "lock_case",
            "four-byte combination lock written as a case-statement FSM",
            bundled!("lock_case"),
            all_bytes.clone(),
            verdicts(true, true),
        ),
        mk(
            "lock_micro",
            "the same lock driven by a microcode ROM",
            bundled!("lock_micro"),
            all_bytes.clone(),
            verdicts(true, true),
        ),
        mk(
            "async_fifo",
            "dual-clock FIFO whose write pointer overtakes the read pointer",
            bundled!("async_fifo"),
            vec![0x00, 0x80],
            verdicts(true, false),
        ),
        mk(
            "counter_trojan",
            "cipher with a trigger armed fifteen clock edges after reset",
            bundled!("counter_trojan"),
            vec![0x00, 0x5A, 0xFF],
            verdicts(true, true),
        ),
        mk(
            "seq_trojan",
            "UART transmitter with a trigger armed by a two-byte sequence",
            bundled!("seq_trojan"),
            all_bytes,
            verdicts(true, true),
        ),
    ]
}

pub fn find_benchmark(name: &str) -> Option<Benchmark> {
    bundled_benchmarks().into_iter().find(|b| b.name == name)
}

/// Outcome of an oracle search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Shortest fault-triggering sequence, the lexicographically smallest
    /// among those of its length.
    pub input: Option<Vec<u8>>,
    pub property: Option<String>,
    /// Distinct states visited.
    pub states: usize,
    /// Deepest level fully explored.
    pub depth: usize,
}

/// `bench/<name>/oracle.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub name: String,
    pub bound: usize,
    pub alphabet: Vec<u8>,
    pub accurate: OracleEntry,
    pub fast: OracleEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleEntry {
    /// Hex-encoded shortest fault input, absent if none within the bound.
    pub input: Option<String>,
    pub property: Option<String>,
    pub states: usize,
}

impl OracleEntry {
    pub fn from_result(r: &OracleResult) -> Self {
        OracleEntry {
            input: r.input.as_ref().map(hex::encode),
            property: r.property.clone(),
            states: r.states,
        }
    }

    pub fn input_bytes(&self) -> Option<Vec<u8>> {
        self.input.as_deref().map(|h| hex::decode(h).expect("oracle record holds valid hex"))
    }
}

/// Level-order search from the post-reset state: each level applies one
/// round, for every combination of alphabet bytes that round consumes, to
/// every state first reached at the previous level. Prefixes longer than
/// `bound` bytes are not expanded. Trailing zero bytes are dropped from the
/// reported input since the reader pads with zeros anyway.
pub fn oracle_search(design: Arc<Design>, config: Arc<HarnessConfig>, mode: SimMode, alphabet: &[u8], bound: usize) -> Result<OracleResult, BenchError> {
    if config.domains.iter().any(|d| d.total_width() % 8 != 0) {
        return Err(BenchError::RoundWidth(design.name.clone()));
    }
    let mut h = Harness::new(design, config, mode)?;
    h.apply_reset()?;
    let mut seen: HashSet<Vec<u128>> = HashSet::new();
    seen.insert(h.state_key());
    let mut frontier = vec![(Vec::<u8>::new(), h.save_state())];
    let mut alpha = alphabet.to_vec();
    alpha.sort_unstable();
    alpha.dedup();
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for (prefix, st) in &frontier {
            h.load_state(st);
            let k = (h.next_round_bits() / 8) as usize;
            // Bytes past the bound read as zero padding.
            let free = k.min(bound - prefix.len());
            let combos = alpha.len().pow(free as u32);
            for idx in 0..combos {
                let mut chunk = vec![0u8; free];
                let mut rest = idx;
                for slot in chunk.iter_mut().rev() {
                    *slot = alpha[rest % alpha.len()];
                    rest /= alpha.len();
                }
                h.load_state(st);
                let mut reader = BitReader::new(&chunk);
                let mut input = prefix.clone();
                input.extend_from_slice(&chunk);
                if let Some(Outcome::Fault { property, .. }) = h.schedule_input(&mut reader)? {
                    while input.last() == Some(&0) {
                        input.pop();
                    }
                    return Ok(OracleResult {
                        input: Some(input),
                        property: Some(property),
                        states: seen.len(),
                        depth,
                    });
                }
                if seen.insert(h.state_key()) {
                    next.push((input, h.save_state()));
                }
            }
        }
        frontier = next;
    }
    Ok(OracleResult {
        input: None,
        property: None,
        states: seen.len(),
        depth,
    })
}

/// Runs the oracle for one benchmark and mode at [`ORACLE_BOUND`].
pub fn run_oracle(b: &Benchmark, mode: SimMode) -> Result<OracleResult, BenchError> {
    let d = Arc::new(b.design()?);
    let c = Arc::new(b.config(&d)?);
    oracle_search(d, c, mode, &b.alphabet, ORACLE_BOUND)
}
