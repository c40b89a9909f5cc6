// SPDX-License-Identifier: Apache-2.0
//! Harness around a simulator: virtual PLL and reset controller, round-robin
//! input scheduling, coverage monitoring and property checking.

pub mod clock;
pub mod config;

use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitReader;
use crate::coverage::{Monitor, TrackedSignal};
use crate::hdl::{Design, SignalId};
use crate::sim::{ChangeEvent, ChangeSink, SimError, SimMode, SimState, Simulator};

pub use clock::{ClockSpec, Duty};
pub use config::{default_config, load_config, ConfigError, HarnessConfig, InputDomain, ResetSpec, ResetStyle};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Outcome {
    Clean,
    Fault {
        property: String,
        /// Position of the property in the configured property list.
        slot: usize,
        time: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub outcome: Outcome,
    pub events_observed: u64,
    /// Scheduling rounds, with the reset phase counted as one.
    pub sim_cycles: u64,
}

impl RunVerdict {
    pub fn is_fault(&self) -> bool {
        matches!(self.outcome, Outcome::Fault { .. })
    }

    pub fn property(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Fault { property, .. } => Some(property),
            Outcome::Clean => None,
        }
    }
}

struct Tee<'a> {
    monitor: &'a mut Monitor,
    trace: Option<&'a mut Vec<ChangeEvent>>,
}

impl ChangeSink for Tee<'_> {
    fn on_change(&mut self, event: &ChangeEvent, values: &[u128]) {
        self.monitor.observe(event, values);
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(*event);
        }
    }
}

#[derive(Clone)]
pub struct Harness {
    design: Arc<Design>,
    config: Arc<HarnessConfig>,
    sim: Simulator,
    pub monitor: Monitor,
    round_length: u64,
    tracked_ids: Vec<SignalId>,
    fast_inputs: Vec<(SignalId, u128)>,
    fast_events: Vec<ChangeEvent>,
    trace: Option<Vec<ChangeEvent>>,
    /// State right after reset; the reset sequence is input-independent.
    reset_state: Option<SimState>,
    memo: Option<Box<RoundMemo>>,
    memo_key: Vec<u128>,
}

/// Fast-mode rounds are a pure function of the settled signal values and
/// the applied inputs, so their results are cached up to a size bound.
#[derive(Default, Clone)]
struct RoundMemo {
    map: FxHashMap<Box<[u128]>, MemoRound>,
    cap: usize,
    hits: u64,
}

#[derive(Clone)]
struct MemoRound {
    values: Box<[u128]>,
    events: Box<[(SignalId, u128, u128)]>,
}

/// Memory bound for one harness's round cache.
const MEMO_BYTES: usize = 32 << 20;

impl std::fmt::Debug for Harness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Harness")
            .field("design", &self.design.name)
            .field("mode", &self.sim.mode())
            .finish()
    }
}

impl Harness {
    pub fn new(design: Arc<Design>, config: Arc<HarnessConfig>, mode: SimMode) -> Result<Self, HarnessError> {
        let mut sim = Simulator::new(design.clone(), mode)?;
        for &(s, v) in &config.init {
            sim.set_initial(s, v)?;
        }
        if !config.clocks.is_empty() {
            let mut fast: Vec<SignalId> = Vec::new();
            for c in &config.clocks {
                fast.push(c.signal);
                fast.extend(c.differential);
            }
            sim.set_fast_clocks(&fast);
        }
        let tracked: Vec<TrackedSignal> = config
            .tracked
            .iter()
            .map(|&(s, w)| TrackedSignal::new(s, design.signals[s.index()].width, w))
            .collect();
        let tracked_ids: Vec<SignalId> = tracked.iter().map(|t| t.signal).collect();
        sim.set_observed(&tracked_ids);
        let monitor = Monitor::new(tracked, config.compression, design.signals.len());
        Ok(Harness {
            round_length: config.round_length(),
            design,
            config,
            sim,
            monitor,
            tracked_ids,
            fast_inputs: Vec::new(),
            fast_events: Vec::new(),
            trace: None,
            reset_state: None,
            memo: None,
            memo_key: Vec::new(),
        })
    }

    pub fn design(&self) -> &Arc<Design> {
        &self.design
    }

    /// Caches fast-mode round results. No effect in accurate mode.
    pub fn with_round_memo(mut self) -> Self {
        if self.sim.mode() == SimMode::Fast {
            let per_entry = 2 * self.design.signals.len() * 16 + 128;
            self.memo = Some(Box::new(RoundMemo {
                cap: (MEMO_BYTES / per_entry).max(1),
                ..RoundMemo::default()
            }));
        }
        self
    }

    /// Fast rounds answered from the cache so far.
    pub fn memo_hits(&self) -> u64 {
        self.memo.as_ref().map_or(0, |m| m.hits)
    }

    pub fn config(&self) -> &Arc<HarnessConfig> {
        &self.config
    }

    pub fn sim(&self) -> &Simulator {
        &self.sim
    }

    pub fn mode(&self) -> SimMode {
        self.sim.mode()
    }

    /// Timesteps per accurate-mode round.
    pub fn round_length(&self) -> u64 {
        self.round_length
    }

    /// Timesteps after which every clock waveform repeats.
    pub fn hyperperiod(&self) -> u64 {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        self.config.clocks.iter().fold(1, |l, c| l / gcd(l, c.period) * c.period)
    }

    pub fn save_state(&self) -> SimState {
        self.sim.save_state()
    }

    pub fn load_state(&mut self, st: &SimState) {
        self.sim.load_state(st);
    }

    /// Deduplication key for the current state at a round boundary.
    pub fn state_key(&self) -> Vec<u128> {
        match self.sim.mode() {
            SimMode::Accurate => self.sim.state_key(self.hyperperiod()),
            SimMode::Fast => self.sim.state_key(1),
        }
    }

    fn sink(&mut self) -> (&mut Simulator, Tee<'_>) {
        (
            &mut self.sim,
            Tee {
                monitor: &mut self.monitor,
                trace: self.trace.as_mut(),
            },
        )
    }

    fn poke_if_changed(&mut self, s: SignalId, v: u128) -> Result<(), SimError> {
        if self.sim.value(s) != v {
            self.sim.poke(s, v)?;
        }
        Ok(())
    }

    fn drive_clocks(&mut self, t: u64) -> Result<(), SimError> {
        let config = self.config.clone();
        for c in &config.clocks {
            self.poke_if_changed(c.signal, c.level(t) as u128)?;
            if let Some(d) = c.differential {
                self.poke_if_changed(d, c.differential_level(t) as u128)?;
            }
            if let Some(s) = c.stable {
                self.poke_if_changed(s, c.stable_level(t) as u128)?;
            }
        }
        Ok(())
    }

    fn drive_resets(&mut self, asserted: bool) -> Result<(), SimError> {
        let config = self.config.clone();
        for r in &config.resets {
            self.poke_if_changed(r.signal, r.level(asserted))?;
        }
        Ok(())
    }

    fn settle(&mut self) -> Result<(), SimError> {
        let (sim, mut tee) = self.sink();
        sim.settle(&mut tee)
    }

    /// Holds every reset active for one period of the slowest clock while
    /// the clocks run, then releases them. Coverage is suppressed.
    pub fn apply_reset(&mut self) -> Result<(), SimError> {
        if self.trace.is_none() {
            if let Some(st) = &self.reset_state {
                self.sim.load_state(st);
                return Ok(());
            }
        }
        self.sim.restore_initial();
        self.monitor.enabled = false;
        let r = match self.sim.mode() {
            SimMode::Accurate => self.reset_accurate(),
            SimMode::Fast => self.reset_fast(),
        };
        self.monitor.enabled = true;
        if r.is_ok() && self.reset_state.is_none() {
            self.reset_state = Some(self.sim.save_state());
        }
        r
    }

    fn reset_accurate(&mut self) -> Result<(), SimError> {
        self.drive_resets(true)?;
        self.settle()?;
        self.drive_clocks(0)?;
        self.settle()?;
        for t in 1..self.round_length {
            self.sim.step_time();
            debug_assert_eq!(self.sim.time(), t);
            self.drive_clocks(t)?;
            self.settle()?;
        }
        self.sim.step_time();
        self.drive_resets(false)?;
        self.settle()
    }

    fn reset_fast(&mut self) -> Result<(), SimError> {
        let config = self.config.clone();
        let mut inputs = Vec::new();
        for r in &config.resets {
            inputs.push((r.signal, r.level(true)));
        }
        self.fast_events.clear();
        self.sim.fast_eval_into(&inputs, &mut self.fast_events)?;
        if let Some(t) = self.trace.as_mut() {
            t.extend_from_slice(&self.fast_events);
        }
        Ok(())
    }

    fn check(&self) -> Option<Outcome> {
        self.config.properties.iter().enumerate().find_map(|(slot, &i)| {
            self.sim.assertion_value(i).then(|| Outcome::Fault {
                property: self.design.assertions[i].name.clone(),
                slot,
                time: self.sim.time(),
            })
        })
    }

    /// Slices one domain's worth of bits, MSB-first in config order.
    fn take_domain(reader: &mut BitReader<'_>, domain: &InputDomain, out: &mut Vec<(SignalId, u128)>) {
        for &(s, w) in &domain.inputs {
            out.push((s, reader.take(w)));
        }
    }

    /// One accurate-mode timestep at absolute time `t`.
    fn accurate_step(&mut self, t: u64, reader: &mut BitReader<'_>) -> Result<Option<Outcome>, SimError> {
        if self.sim.time() < t {
            self.sim.step_time();
        }
        self.drive_clocks(t)?;
        self.settle()?;
        let config = self.config.clone();
        let mut driven = false;
        let mut vals = std::mem::take(&mut self.fast_inputs);
        for d in &config.domains {
            let ready = match d.clock {
                Some(c) => config.clocks[c].rises_at(t),
                None => true,
            };
            if ready {
                vals.clear();
                Self::take_domain(reader, d, &mut vals);
                for &(s, v) in &vals {
                    self.poke_if_changed(s, v)?;
                }
                driven = true;
            }
        }
        self.fast_inputs = vals;
        if driven {
            self.settle()?;
        }
        Ok(self.check())
    }

    /// Input bits the next [`Harness::schedule_input`] call consumes if no
    /// property fires first.
    pub fn next_round_bits(&self) -> u32 {
        match self.sim.mode() {
            SimMode::Fast => self.config.round_width(),
            SimMode::Accurate => {
                let start = self.sim.time();
                let mut bits = 0;
                for t in start..start + self.round_length {
                    for d in &self.config.domains {
                        let ready = match d.clock {
                            Some(c) => self.config.clocks[c].rises_at(t),
                            None => true,
                        };
                        if ready {
                            bits += d.total_width();
                        }
                    }
                }
                bits
            }
        }
    }

    /// One scheduling round: every ready domain consumes its total width
    /// from the head of `reader`.
    pub fn schedule_input(&mut self, reader: &mut BitReader<'_>) -> Result<Option<Outcome>, SimError> {
        match self.sim.mode() {
            SimMode::Accurate => {
                let start = self.sim.time();
                for k in 0..self.round_length {
                    if let Some(f) = self.accurate_step(start + k, reader)? {
                        return Ok(Some(f));
                    }
                }
                // Leave the simulator at the first timestep of the next round.
                self.sim.step_time();
                Ok(None)
            }
            SimMode::Fast => {
                let config = self.config.clone();
                let mut inputs = std::mem::take(&mut self.fast_inputs);
                inputs.clear();
                for d in &config.domains {
                    Self::take_domain(reader, d, &mut inputs);
                }
                for r in &config.resets {
                    inputs.push((r.signal, r.level(false)));
                }
                for c in &config.clocks {
                    if let Some(s) = c.stable {
                        inputs.push((s, 1));
                    }
                }
                self.fast_events.clear();
                let res = self.fast_round(&inputs);
                self.fast_inputs = inputs;
                res?;
                let values = self.sim.values();
                for ev in &self.fast_events {
                    self.monitor.observe(ev, values);
                }
                if let Some(t) = self.trace.as_mut() {
                    t.extend_from_slice(&self.fast_events);
                }
                Ok(self.check())
            }
        }
    }

    fn fast_round(&mut self, inputs: &[(SignalId, u128)]) -> Result<(), SimError> {
        let Some(mut memo) = self.memo.take() else {
            return self.sim.fast_eval_into(inputs, &mut self.fast_events);
        };
        let res = self.fast_round_memo(&mut memo, inputs);
        self.memo = Some(memo);
        res
    }

    fn fast_round_memo(&mut self, memo: &mut RoundMemo, inputs: &[(SignalId, u128)]) -> Result<(), SimError> {
        if self.sim.pending_len() != 0 {
            return self.sim.fast_eval_into(inputs, &mut self.fast_events);
        }
        let key = &mut self.memo_key;
        key.clear();
        key.extend_from_slice(self.sim.values());
        key.extend(inputs.iter().map(|&(_, v)| v));
        if let Some(hit) = memo.map.get(key.as_slice()) {
            self.sim.load_fast_round(&hit.values)?;
            let time = self.sim.time();
            self.fast_events.extend(hit.events.iter().map(|&(signal, prev, next)| ChangeEvent {
                signal,
                prev,
                next,
                time,
                delta: 0,
            }));
            memo.hits += 1;
            return Ok(());
        }
        self.sim.fast_eval_into(inputs, &mut self.fast_events)?;
        if memo.map.len() < memo.cap {
            let round = MemoRound {
                values: self.sim.values().into(),
                events: self.fast_events.iter().map(|e| (e.signal, e.prev, e.next)).collect(),
            };
            memo.map.insert(self.memo_key.as_slice().into(), round);
        }
        Ok(())
    }

    /// Resets the design and runs rounds until a property fires or the
    /// input is exhausted and `max_cycles` rounds have run. The coverage
    /// map holds this run's buckets afterwards.
    pub fn run_testcase(&mut self, input: &[u8], max_cycles: u64) -> Result<RunVerdict, SimError> {
        self.monitor.map.begin_run();
        self.monitor.events = 0;
        self.apply_reset()?;
        let mut reader = BitReader::new(input);
        let mut rounds = 0u64;
        let outcome = loop {
            if reader.exhausted() && rounds >= max_cycles {
                break Outcome::Clean;
            }
            rounds += 1;
            if let Some(f) = self.schedule_input(&mut reader)? {
                break f;
            }
        };
        Ok(RunVerdict {
            outcome,
            events_observed: self.monitor.events,
            sim_cycles: rounds + 1,
        })
    }

    /// Runs with the configured cycle budget.
    pub fn run(&mut self, input: &[u8]) -> Result<RunVerdict, SimError> {
        let max = self.config.max_cycles;
        self.run_testcase(input, max)
    }

    /// Like [`Harness::run_testcase`] but observing every signal and
    /// returning the full change trace.
    pub fn run_traced(&mut self, input: &[u8], max_cycles: u64) -> Result<(RunVerdict, Vec<ChangeEvent>), SimError> {
        let all: Vec<SignalId> = self.design.signals.iter().map(|s| s.id).collect();
        self.sim.set_observed(&all);
        self.trace = Some(Vec::new());
        let r = self.run_testcase(input, max_cycles);
        let trace = self.trace.take().unwrap_or_default();
        let ids = std::mem::take(&mut self.tracked_ids);
        self.sim.set_observed(&ids);
        self.tracked_ids = ids;
        Ok((r?, trace))
    }
}

/// Formats a trace as `time.delta name prev->next` lines with hex values.
pub fn format_trace(design: &Design, trace: &[ChangeEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        let name = &design.signals[e.signal.index()].name;
        out.push_str(&format!("{}.{} {} {:x}->{:x}\n", e.time, e.delta, name, e.prev, e.next));
    }
    out
}

/// Replays an input file in accurate or fast mode and returns the verdict
/// with its full change trace.
pub fn replay(
    design: Arc<Design>,
    config: Arc<HarnessConfig>,
    mode: SimMode,
    input_file: &std::path::Path,
) -> Result<(RunVerdict, Vec<ChangeEvent>), HarnessError> {
    let input = std::fs::read(input_file)?;
    let mut h = Harness::new(design, config.clone(), mode)?;
    Ok(h.run_traced(&input, config.max_cycles)?)
}
