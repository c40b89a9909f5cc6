// SPDX-License-Identifier: Apache-2.0
//! Event-driven two-state simulator with delta cycles and delayed assignments.
//!
//! Accurate mode reports every committed transition of an observed signal
//! per delta cycle. Fast mode collapses all clocks into a single evaluation
//! tick and reports only the snapshot difference across that tick.

mod compile;
mod exec;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bits::{mask, Bits};
use crate::hdl::{Design, Edge, ProcessKind, SignalId, SignalKind};

use compile::{Program, Scratch};
use exec::Update;

/// Delta cycles allowed within one settle before reporting a loop.
pub const DELTA_LIMIT: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Accurate,
    Fast,
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Accurate => "accurate",
            SimMode::Fast => "fast",
        })
    }
}

impl std::str::FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "accurate" => Ok(SimMode::Accurate),
            "fast" => Ok(SimMode::Fast),
            _ => Err(format!("unknown mode '{s}' (expected accurate or fast)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("signal '{0}' is not an input")]
    NotAnInput(String),
    #[error("value {value:#x} does not fit signal '{signal}' of width {width}")]
    WidthMismatch { signal: String, width: u32, value: u128 },
    #[error("combinational loop: no fixpoint after {limit} delta cycles at time {time}")]
    CombinationalLoop { time: u64, limit: u32 },
    #[error("signal '{0}' is not a clock input")]
    UnknownClock(String),
    #[error("operation requires {expected} mode")]
    ModeMismatch { expected: SimMode },
    #[error("unknown signal id {0}")]
    UnknownSignal(u32),
}

/// One committed value change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChangeEvent {
    pub signal: SignalId,
    pub prev: u128,
    pub next: u128,
    pub time: u64,
    pub delta: u32,
}

/// Receiver for change events. `values` holds every signal's value right
/// after the delta cycle that produced the event.
pub trait ChangeSink {
    fn on_change(&mut self, event: &ChangeEvent, values: &[u128]);
}

/// Sink that drops everything.
pub struct NullSink;

impl ChangeSink for NullSink {
    fn on_change(&mut self, _: &ChangeEvent, _: &[u128]) {}
}

impl ChangeSink for Vec<ChangeEvent> {
    fn on_change(&mut self, event: &ChangeEvent, _: &[u128]) {
        self.push(*event);
    }
}

/// Values of a signal subset at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub values: Vec<(SignalId, u128)>,
    pub time: u64,
}

impl Snapshot {
    /// Events for every signal whose value differs in `after`, with delta 0.
    pub fn diff(&self, after: &Snapshot) -> Vec<ChangeEvent> {
        self.values
            .iter()
            .zip(&after.values)
            .filter(|(a, b)| a.1 != b.1)
            .map(|(a, b)| ChangeEvent {
                signal: a.0,
                prev: a.1,
                next: b.1,
                time: after.time,
                delta: 0,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
enum Fanout {
    /// Position in the levelized order.
    Comb(u32),
    Seq(u32, Edge),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Pending {
    time: u64,
    seq: u64,
    update: Update,
}

/// Complete simulator state at a settled point, for rewinding.
#[derive(Debug, Clone)]
pub struct SimState {
    values: Vec<u128>,
    time: u64,
    seq: u64,
    pending: BinaryHeap<Reverse<Pending>>,
}

impl SimState {
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn values(&self) -> &[u128] {
        &self.values
    }
}

#[derive(Clone)]
pub struct Simulator {
    design: Arc<Design>,
    mode: SimMode,
    values: Vec<u128>,
    initial: Vec<u128>,
    comb_readers: Vec<Vec<u32>>,
    seq_triggers: Vec<Vec<(u32, Edge)>>,
    observed: Vec<bool>,
    fast_clocks: Vec<SignalId>,
    time: u64,
    delta: u32,
    seq: u64,
    pending: BinaryHeap<Reverse<Pending>>,
    updates: Vec<Update>,
    next_updates: Vec<Update>,
    dirty: Vec<bool>,
    dirty_list: Vec<u32>,
    change_slot: Vec<u32>,
    changes: Vec<(SignalId, u128)>,
    fast_first: Vec<u32>,
    fast_changed: Vec<(SignalId, u128)>,
    programs: Arc<Vec<Program>>,
    scratch: Scratch,
    delayed: Vec<(u32, Update)>,
    /// Combinational processes in dependency order, when acyclic.
    comb_order: Option<Vec<u32>>,
    comb_dirty: Vec<bool>,
    /// Per-signal fanout for the levelized path, flattened.
    fanout_start: Arc<Vec<u32>>,
    fanout: Arc<Vec<Fanout>>,
    comb_buf: Vec<Update>,
}

impl fmt::Debug for Simulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulator")
            .field("design", &self.design.name)
            .field("mode", &self.mode)
            .field("time", &self.time)
            .finish()
    }
}

/// Builds a simulator; registers take their init values and combinational
/// logic settles silently, delays ignored.
pub fn new_sim(design: Arc<Design>, mode: SimMode) -> Result<Simulator, SimError> {
    Simulator::new(design, mode)
}

impl Simulator {
    pub fn new(design: Arc<Design>, mode: SimMode) -> Result<Self, SimError> {
        let n = design.signals.len();
        let mut comb_readers = vec![Vec::new(); n];
        let mut seq_triggers = vec![Vec::new(); n];
        for (i, p) in design.processes.iter().enumerate() {
            match p.kind {
                ProcessKind::Combinational => {
                    for s in p.reads() {
                        comb_readers[s.index()].push(i as u32);
                    }
                }
                ProcessKind::Sequential => {
                    for t in &p.triggers {
                        seq_triggers[t.signal.index()].push((i as u32, t.edge));
                    }
                }
            }
        }
        let mut fast_clocks: Vec<SignalId> = design
            .processes
            .iter()
            .filter_map(|p| p.clock())
            .map(|t| t.signal)
            .filter(|s| design.signals[s.index()].kind == SignalKind::Input)
            .collect();
        fast_clocks.sort();
        fast_clocks.dedup();
        let values: Vec<u128> = design.signals.iter().map(|s| s.init.value()).collect();
        let np = design.processes.len();
        let comb_order = comb_order(&design, &comb_readers);
        let mut comb_pos = vec![u32::MAX; np];
        if let Some(order) = &comb_order {
            for (k, &p) in order.iter().enumerate() {
                comb_pos[p as usize] = k as u32;
            }
        }
        let comb_dirty = vec![false; comb_order.as_ref().map_or(0, Vec::len)];
        let mut fanout_start = Vec::with_capacity(n + 1);
        let mut fanout = Vec::new();
        for i in 0..n {
            fanout_start.push(fanout.len() as u32);
            if comb_order.is_some() {
                fanout.extend(comb_readers[i].iter().map(|&p| Fanout::Comb(comb_pos[p as usize])));
            }
            fanout.extend(seq_triggers[i].iter().map(|&(p, e)| Fanout::Seq(p, e)));
        }
        fanout_start.push(fanout.len() as u32);
        let mut sim = Simulator {
            mode,
            initial: values.clone(),
            values,
            comb_readers,
            seq_triggers,
            observed: vec![true; n],
            fast_clocks,
            time: 0,
            delta: 0,
            seq: 0,
            pending: BinaryHeap::new(),
            updates: Vec::new(),
            next_updates: Vec::new(),
            dirty: vec![false; np],
            dirty_list: Vec::new(),
            change_slot: vec![u32::MAX; n],
            changes: Vec::new(),
            fast_first: vec![u32::MAX; n],
            fast_changed: Vec::new(),
            programs: Arc::new(design.processes.iter().map(Program::compile).collect()),
            scratch: Scratch::default(),
            delayed: Vec::new(),
            comb_order,
            comb_dirty,
            fanout_start: Arc::new(fanout_start),
            fanout: Arc::new(fanout),
            comb_buf: Vec::new(),
            design,
        };
        for (i, p) in sim.design.processes.iter().enumerate() {
            if p.kind == ProcessKind::Combinational {
                sim.dirty[i] = true;
                sim.dirty_list.push(i as u32);
            }
        }
        sim.run_dirty(true);
        sim.settle_inner(&mut NullSink, false, true)?;
        sim.delta = 0;
        sim.initial = sim.values.clone();
        Ok(sim)
    }

    pub fn design(&self) -> &Arc<Design> {
        &self.design
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// Current value of every signal, indexed by `SignalId`.
    pub fn values(&self) -> &[u128] {
        &self.values
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Pending delayed updates as `(fire_time, signal, value_mask, value)`,
    /// in firing order.
    pub fn pending_events(&self) -> Vec<(u64, SignalId, u128, u128)> {
        let mut v: Vec<&Pending> = self.pending.iter().map(|r| &r.0).collect();
        v.sort();
        v.iter().map(|p| (p.time, p.update.signal, p.update.mask, p.update.value)).collect()
    }

    /// Restricts change reporting to `signals`.
    pub fn set_observed(&mut self, signals: &[SignalId]) {
        self.observed.iter_mut().for_each(|o| *o = false);
        for s in signals {
            if let Some(o) = self.observed.get_mut(s.index()) {
                *o = true;
            }
        }
    }

    pub fn is_observed(&self, s: SignalId) -> bool {
        self.observed.get(s.index()).copied().unwrap_or(false)
    }

    /// Clocks ticked together by [`Simulator::fast_eval`].
    pub fn set_fast_clocks(&mut self, clocks: &[SignalId]) {
        self.fast_clocks = clocks.to_vec();
    }

    pub fn fast_clocks(&self) -> &[SignalId] {
        &self.fast_clocks
    }

    fn decl(&self, s: SignalId) -> Result<&crate::hdl::SignalDecl, SimError> {
        self.design.signal(s).ok_or(SimError::UnknownSignal(s.0))
    }

    pub fn read(&self, s: SignalId) -> Result<Bits, SimError> {
        let d = self.decl(s)?;
        Ok(Bits::truncating(self.values[s.index()], d.width))
    }

    /// Raw value of a signal; panics on an unknown id.
    pub fn value(&self, s: SignalId) -> u128 {
        self.values[s.index()]
    }

    pub fn snapshot(&self, signals: &[SignalId]) -> Snapshot {
        Snapshot {
            values: signals.iter().map(|s| (*s, self.values[s.index()])).collect(),
            time: self.time,
        }
    }

    /// Captures the current state. Only meaningful once settled.
    pub fn save_state(&self) -> SimState {
        SimState {
            values: self.values.clone(),
            time: self.time,
            seq: self.seq,
            pending: self.pending.clone(),
        }
    }

    /// Canonical encoding of the state for deduplication: signal values,
    /// the time modulo `period`, and pending events relative to now.
    pub fn state_key(&self, period: u64) -> Vec<u128> {
        let mut key = self.values.clone();
        key.push((self.time % period.max(1)) as u128);
        let mut pend: Vec<&Pending> = self.pending.iter().map(|Reverse(p)| p).collect();
        pend.sort();
        for p in pend {
            key.extend([(p.time - self.time) as u128, p.update.signal.0 as u128, p.update.mask, p.update.value]);
        }
        key
    }

    /// Rewinds to a state taken from a simulator of the same design.
    pub fn load_state(&mut self, st: &SimState) {
        self.restore_initial();
        self.values.copy_from_slice(&st.values);
        self.time = st.time;
        self.seq = st.seq;
        self.pending.clone_from(&st.pending);
    }

    /// Back to the power-on state at time 0 with nothing pending.
    pub fn restore_initial(&mut self) {
        self.values.copy_from_slice(&self.initial);
        self.time = 0;
        self.delta = 0;
        self.seq = 0;
        self.pending.clear();
        self.updates.clear();
        self.dirty_list.clear();
        self.dirty.iter_mut().for_each(|d| *d = false);
        self.comb_dirty.iter_mut().for_each(|d| *d = false);
    }

    /// Overrides the power-on value of a register or input.
    pub fn set_initial(&mut self, s: SignalId, value: u128) -> Result<(), SimError> {
        let d = self.decl(s)?;
        if value & !mask(d.width) != 0 {
            return Err(SimError::WidthMismatch {
                signal: d.name.clone(),
                width: d.width,
                value,
            });
        }
        self.restore_initial();
        self.values[s.index()] = value;
        for &p in &self.comb_readers[s.index()] {
            if !self.dirty[p as usize] {
                self.dirty[p as usize] = true;
                self.dirty_list.push(p);
            }
        }
        self.run_dirty(true);
        self.settle_inner(&mut NullSink, false, true)?;
        self.delta = 0;
        self.initial.copy_from_slice(&self.values);
        Ok(())
    }

    /// Stages an input value for the next settle.
    pub fn poke(&mut self, s: SignalId, value: u128) -> Result<(), SimError> {
        let d = self.decl(s)?;
        if d.kind != SignalKind::Input {
            return Err(SimError::NotAnInput(d.name.clone()));
        }
        if value & !mask(d.width) != 0 {
            return Err(SimError::WidthMismatch {
                signal: d.name.clone(),
                width: d.width,
                value,
            });
        }
        self.updates.push(Update::full(s, value));
        Ok(())
    }

    /// Runs delta cycles until nothing changes.
    pub fn settle(&mut self, sink: &mut impl ChangeSink) -> Result<(), SimError> {
        let emit = self.mode == SimMode::Accurate;
        let zero_delay = self.mode == SimMode::Fast;
        self.settle_inner(sink, emit, zero_delay)
    }

    /// Drives a clock input to the requested edge and settles.
    pub fn clock_edge(&mut self, clock: SignalId, edge: Edge, sink: &mut impl ChangeSink) -> Result<(), SimError> {
        let d = self.decl(clock)?;
        if d.kind != SignalKind::Input || self.seq_triggers[clock.index()].is_empty() {
            return Err(SimError::UnknownClock(d.name.clone()));
        }
        let target = match edge {
            Edge::Rising => 1,
            Edge::Falling => 0,
        };
        if self.values[clock.index()] & 1 == target {
            self.updates.push(Update::full(clock, target ^ 1));
            self.settle(sink)?;
        }
        self.updates.push(Update::full(clock, target));
        self.settle(sink)
    }

    /// Advances time tick by tick, committing due delayed updates and
    /// settling at each tick.
    pub fn advance_time(&mut self, ticks: u64, sink: &mut impl ChangeSink) -> Result<(), SimError> {
        for _ in 0..ticks {
            self.step_time();
            self.settle(sink)?;
        }
        Ok(())
    }

    /// Moves to the next timestep and stages every update due then, without
    /// settling. Callers poke further values and then settle.
    pub fn step_time(&mut self) {
        self.time += 1;
        self.delta = 0;
        while let Some(Reverse(p)) = self.pending.peek() {
            if p.time > self.time {
                break;
            }
            let Reverse(p) = self.pending.pop().expect("peeked");
            self.updates.push(p.update);
        }
    }

    /// One collapsed evaluation tick: applies `inputs`, drops every fast
    /// clock low and then raises them together, settles, and returns the
    /// observed-signal difference against the state before the call.
    pub fn fast_eval(&mut self, inputs: &[(SignalId, u128)]) -> Result<Vec<ChangeEvent>, SimError> {
        let mut out = Vec::new();
        self.fast_eval_into(inputs, &mut out)?;
        Ok(out)
    }

    pub fn fast_eval_into(&mut self, inputs: &[(SignalId, u128)], out: &mut Vec<ChangeEvent>) -> Result<(), SimError> {
        if self.mode != SimMode::Fast {
            return Err(SimError::ModeMismatch { expected: SimMode::Fast });
        }
        self.time += 1;
        self.delta = 0;
        for &(s, v) in inputs {
            self.poke(s, v)?;
        }
        for i in 0..self.fast_clocks.len() {
            let c = self.fast_clocks[i];
            self.updates.push(Update::full(c, 0));
        }
        self.settle_inner(&mut NullSink, false, true)?;
        for i in 0..self.fast_clocks.len() {
            let c = self.fast_clocks[i];
            self.updates.push(Update::full(c, 1));
        }
        self.settle_inner(&mut NullSink, false, true)?;
        self.fast_changed.sort_unstable_by_key(|c| c.0);
        for &(s, prev) in &self.fast_changed {
            self.fast_first[s.index()] = u32::MAX;
            let next = self.values[s.index()];
            if next != prev {
                out.push(ChangeEvent {
                    signal: s,
                    prev,
                    next,
                    time: self.time,
                    delta: 0,
                });
            }
        }
        self.fast_changed.clear();
        Ok(())
    }

    /// Completes a fast-mode evaluation whose outcome is already known:
    /// advances time by one and installs the settled `values`.
    pub fn load_fast_round(&mut self, values: &[u128]) -> Result<(), SimError> {
        if self.mode != SimMode::Fast {
            return Err(SimError::ModeMismatch { expected: SimMode::Fast });
        }
        self.time += 1;
        self.delta = 0;
        self.values.copy_from_slice(values);
        Ok(())
    }

    fn settle_inner(&mut self, sink: &mut impl ChangeSink, emit: bool, zero_delay: bool) -> Result<(), SimError> {
        if zero_delay && !emit && self.mode == SimMode::Fast && self.comb_order.is_some() {
            return self.settle_levelized();
        }
        let mut rounds = 0u32;
        while !self.updates.is_empty() {
            rounds += 1;
            if rounds > DELTA_LIMIT {
                self.updates.clear();
                return Err(SimError::CombinationalLoop {
                    time: self.time,
                    limit: DELTA_LIMIT,
                });
            }
            self.commit(sink, emit);
            self.run_dirty(zero_delay);
            self.delta += 1;
        }
        Ok(())
    }

    /// Fast-mode settle: triggered sequential processes read the state
    /// left by the previous commit, then combinational logic is evaluated
    /// once in dependency order.
    fn settle_levelized(&mut self) -> Result<(), SimError> {
        let mut rounds = 0u32;
        let mut seq_updates = std::mem::take(&mut self.next_updates);
        loop {
            let mut ups = std::mem::take(&mut self.updates);
            for u in ups.drain(..) {
                self.apply_fast(u);
            }
            self.updates = ups;
            if !self.dirty_list.is_empty() {
                let mut list = std::mem::take(&mut self.dirty_list);
                list.sort_unstable();
                for &p in &list {
                    self.dirty[p as usize] = false;
                    self.programs[p as usize].run(&self.values, &self.design.roms, &mut self.scratch, &mut seq_updates, &mut self.delayed, true);
                }
                list.clear();
                self.dirty_list = list;
            }
            self.comb_pass()?;
            self.updates.append(&mut seq_updates);
            if self.updates.is_empty() && self.dirty_list.is_empty() {
                break;
            }
            rounds += 1;
            if rounds > DELTA_LIMIT {
                self.updates.clear();
                self.next_updates = seq_updates;
                return Err(SimError::CombinationalLoop {
                    time: self.time,
                    limit: DELTA_LIMIT,
                });
            }
        }
        self.next_updates = seq_updates;
        Ok(())
    }

    fn comb_pass(&mut self) -> Result<(), SimError> {
        let order = self.comb_order.take().expect("levelized order");
        let mut buf = std::mem::take(&mut self.comb_buf);
        let mut result = Ok(());
        'scan: for (pos, &p) in order.iter().enumerate() {
            let mut runs = 0u32;
            while self.comb_dirty[pos] {
                self.comb_dirty[pos] = false;
                runs += 1;
                if runs > DELTA_LIMIT {
                    result = Err(SimError::CombinationalLoop {
                        time: self.time,
                        limit: DELTA_LIMIT,
                    });
                    break 'scan;
                }
                self.programs[p as usize].run(&self.values, &self.design.roms, &mut self.scratch, &mut buf, &mut self.delayed, true);
                for u in buf.drain(..) {
                    self.apply_fast(u);
                }
            }
        }
        self.comb_order = Some(order);
        self.comb_buf = buf;
        result
    }

    #[inline]
    fn apply_fast(&mut self, u: Update) {
        let i = u.signal.index();
        let prev = self.values[i];
        let next = (prev & !u.mask) | (u.value & u.mask);
        if next == prev {
            return;
        }
        self.values[i] = next;
        if self.observed[i] && self.fast_first[i] == u32::MAX {
            self.fast_first[i] = self.fast_changed.len() as u32;
            self.fast_changed.push((u.signal, prev));
        }
        let (a, b) = (self.fanout_start[i] as usize, self.fanout_start[i + 1] as usize);
        for f in &self.fanout[a..b] {
            match *f {
                Fanout::Comb(pos) => self.comb_dirty[pos as usize] = true,
                Fanout::Seq(p, edge) => {
                    let fired = match edge {
                        Edge::Rising => prev & 1 == 0 && next & 1 == 1,
                        Edge::Falling => prev & 1 == 1 && next & 1 == 0,
                    };
                    if fired && !self.dirty[p as usize] {
                        self.dirty[p as usize] = true;
                        self.dirty_list.push(p);
                    }
                }
            }
        }
    }

    fn commit(&mut self, sink: &mut impl ChangeSink, emit: bool) {
        let mut updates = std::mem::take(&mut self.updates);
        for u in updates.drain(..) {
            let i = u.signal.index();
            let cur = self.values[i];
            let next = (cur & !u.mask) | (u.value & u.mask);
            if next == cur {
                continue;
            }
            if self.change_slot[i] == u32::MAX {
                self.change_slot[i] = self.changes.len() as u32;
                self.changes.push((u.signal, cur));
            }
            self.values[i] = next;
        }
        self.updates = updates;
        if self.changes.len() > 1 {
            self.changes.sort_unstable_by_key(|c| c.0);
        }
        let track_fast = self.mode == SimMode::Fast;
        for k in 0..self.changes.len() {
            let (s, prev) = self.changes[k];
            let i = s.index();
            self.change_slot[i] = u32::MAX;
            let next = self.values[i];
            if next == prev {
                continue;
            }
            if self.observed[i] {
                if emit {
                    let ev = ChangeEvent {
                        signal: s,
                        prev,
                        next,
                        time: self.time,
                        delta: self.delta,
                    };
                    sink.on_change(&ev, &self.values);
                }
                if track_fast && self.fast_first[i] == u32::MAX {
                    self.fast_first[i] = self.fast_changed.len() as u32;
                    self.fast_changed.push((s, prev));
                }
            }
            for &p in &self.comb_readers[i] {
                if !self.dirty[p as usize] {
                    self.dirty[p as usize] = true;
                    self.dirty_list.push(p);
                }
            }
            for &(p, edge) in &self.seq_triggers[i] {
                let fired = match edge {
                    Edge::Rising => prev & 1 == 0 && next & 1 == 1,
                    Edge::Falling => prev & 1 == 1 && next & 1 == 0,
                };
                if fired && !self.dirty[p as usize] {
                    self.dirty[p as usize] = true;
                    self.dirty_list.push(p);
                }
            }
        }
        self.changes.clear();
    }

    fn run_dirty(&mut self, zero_delay: bool) {
        if self.dirty_list.is_empty() {
            return;
        }
        let mut list = std::mem::take(&mut self.dirty_list);
        list.sort_unstable();
        let mut updates = std::mem::take(&mut self.next_updates);
        for &p in &list {
            self.dirty[p as usize] = false;
            self.programs[p as usize].run(&self.values, &self.design.roms, &mut self.scratch, &mut updates, &mut self.delayed, zero_delay);
        }
        list.clear();
        self.dirty_list = list;
        for (delay, u) in self.delayed.drain(..) {
            self.seq += 1;
            self.pending.push(Reverse(Pending {
                time: self.time + delay as u64,
                seq: self.seq,
                update: u,
            }));
        }
        self.updates.append(&mut updates);
        self.next_updates = updates;
    }

    /// Value of every assertion, in declaration order.
    pub fn assertion_value(&self, index: usize) -> bool {
        let a = &self.design.assertions[index];
        crate::hdl::eval::eval(&a.expr, &exec::Committed(&self.values), &self.design.roms) & 1 == 1
    }

    /// Index of the first assertion currently evaluating to 1.
    pub fn first_firing(&self, among: &[usize]) -> Option<usize> {
        among.iter().copied().find(|&i| self.assertion_value(i))
    }
}

/// Topological order of combinational processes over driver-to-reader
/// edges, lowest index first among ready processes. `None` on a cycle.
fn comb_order(design: &Design, comb_readers: &[Vec<u32>]) -> Option<Vec<u32>> {
    let np = design.processes.len();
    let mut indeg = vec![0u32; np];
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); np];
    for (i, p) in design.processes.iter().enumerate() {
        if p.kind != ProcessKind::Combinational {
            continue;
        }
        let mut out: Vec<u32> = p
            .driven()
            .iter()
            .flat_map(|s| comb_readers[s.index()].iter().copied())
            .filter(|&q| q as usize != i)
            .collect();
        out.sort_unstable();
        out.dedup();
        for &q in &out {
            indeg[q as usize] += 1;
        }
        succ[i] = out;
    }
    let mut ready: BinaryHeap<Reverse<u32>> = design
        .processes
        .iter()
        .enumerate()
        .filter(|(i, p)| p.kind == ProcessKind::Combinational && indeg[*i] == 0)
        .map(|(i, _)| Reverse(i as u32))
        .collect();
    let mut order = Vec::new();
    while let Some(Reverse(p)) = ready.pop() {
        order.push(p);
        for &q in &succ[p as usize] {
            indeg[q as usize] -= 1;
            if indeg[q as usize] == 0 {
                ready.push(Reverse(q));
            }
        }
    }
    let combs = design.processes.iter().filter(|p| p.kind == ProcessKind::Combinational).count();
    (order.len() == combs).then_some(order)
}
