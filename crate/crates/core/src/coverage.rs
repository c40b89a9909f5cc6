// SPDX-License-Identifier: Apache-2.0
//! Value-transition coverage: compression of signal changes into a map of
//! 2^16 saturating 8-bit buckets.

use std::collections::HashMap;
use std::io;
use std::path::Path;

use blake2::digest::{Update as _, VariableOutput};
use blake2::Blake2bVar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::mask;
use crate::hdl::SignalId;
use crate::sim::{ChangeEvent, ChangeSink};

pub const MAP_SIZE: usize = 1 << 16;
const VIRGIN_WORDS: usize = MAP_SIZE / 64;
const CACHE_SIZE: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("value {value:#x} wider than {width} bits")]
    WidthMismatch { width: u32, value: u128 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Compression {
    #[default]
    CompressValues,
    VectorizeValues,
}

impl std::str::FromStr for Compression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "compress_values" => Ok(Compression::CompressValues),
            "vectorize_values" => Ok(Compression::VectorizeValues),
            _ => Err(format!("unknown compression '{s}'")),
        }
    }
}

impl std::fmt::Display for Compression {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Compression::CompressValues => "compress_values",
            Compression::VectorizeValues => "vectorize_values",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionOptions {
    pub kind: Compression,
    /// Halve only the previous value instead of the whole `{c, prev}` word.
    pub shift_prev_only: bool,
    /// Increment buckets by the signal weight rather than by one.
    pub weighted: bool,
}

impl Default for CompressionOptions {
    fn default() -> Self {
        CompressionOptions {
            kind: Compression::CompressValues,
            shift_prev_only: false,
            weighted: true,
        }
    }
}

/// A monitored signal with its identification code and weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackedSignal {
    pub code: u32,
    pub signal: SignalId,
    pub width: u32,
    pub weight: u8,
}

impl TrackedSignal {
    /// Uses the signal id as identification code.
    pub fn new(signal: SignalId, width: u32, weight: u8) -> Self {
        TrackedSignal {
            code: signal.0,
            signal,
            width,
            weight,
        }
    }
}

fn digest16(bytes: &[u8]) -> u16 {
    let mut h = Blake2bVar::new(2).expect("2 is a valid BLAKE2b output size");
    h.update(bytes);
    let mut out = [0u8; 2];
    h.finalize_variable(&mut out).expect("output buffer matches");
    u16::from_le_bytes(out)
}

/// The 20-byte lane `{c, value}`: code as 32 bits then value as 128 bits,
/// both big-endian.
fn lane(code: u32, value: u128) -> Lane {
    Lane { hi: code, lo: value }
}

/// A 160-bit word as 32 high bits and 128 low bits.
#[derive(Clone, Copy)]
struct Lane {
    hi: u32,
    lo: u128,
}

impl Lane {
    fn shr1(self) -> Self {
        Lane {
            hi: self.hi >> 1,
            lo: (self.lo >> 1) | ((self.hi as u128 & 1) << 127),
        }
    }

    fn xor(self, o: Self) -> Self {
        Lane {
            hi: self.hi ^ o.hi,
            lo: self.lo ^ o.lo,
        }
    }

    fn bytes(self) -> [u8; 20] {
        let mut b = [0u8; 20];
        b[..4].copy_from_slice(&self.hi.to_be_bytes());
        b[4..].copy_from_slice(&self.lo.to_be_bytes());
        b
    }
}

fn check(width: u32, value: u128) -> Result<(), CoverageError> {
    if value & !mask(width) != 0 {
        Err(CoverageError::WidthMismatch { width, value })
    } else {
        Ok(())
    }
}

/// Bucket for the transition `prev -> next` of `t`:
/// `H({c, next} ^ ({c, prev} >> 1))`.
pub fn compress_values(t: &TrackedSignal, prev: u128, next: u128) -> Result<u16, CoverageError> {
    compress_values_with(t, prev, next, false)
}

/// As [`compress_values`]; with `shift_prev_only` the halving applies to
/// the previous value alone.
pub fn compress_values_with(t: &TrackedSignal, prev: u128, next: u128, shift_prev_only: bool) -> Result<u16, CoverageError> {
    check(t.width, prev)?;
    check(t.width, next)?;
    Ok(compress_raw(t.code, prev, next, shift_prev_only))
}

fn compress_raw(code: u32, prev: u128, next: u128, shift_prev_only: bool) -> u16 {
    let a = lane(code, next);
    let b = if shift_prev_only { lane(code, prev >> 1) } else { lane(code, prev).shr1() };
    digest16(&a.xor(b).bytes())
}

/// Bucket for the current values of all tracked signals, hashed as the
/// concatenation of `{c, value}` lanes in list order.
pub fn vectorize_values(tracked_now: &[(TrackedSignal, u128)]) -> u16 {
    let mut buf = Vec::with_capacity(tracked_now.len() * 20);
    for (t, v) in tracked_now {
        buf.extend_from_slice(&lane(t.code, *v).bytes());
    }
    digest16(&buf)
}

/// Coverage of one run plus the campaign-wide virgin set.
#[derive(Clone)]
pub struct CoverageMap {
    buckets: Box<[u8]>,
    touched: Vec<u16>,
    virgin: Box<[u64]>,
    virgin_count: usize,
}

impl Default for CoverageMap {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for CoverageMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoverageMap")
            .field("populated", &self.populated())
            .field("virgin", &self.virgin_count)
            .finish()
    }
}

impl PartialEq for CoverageMap {
    fn eq(&self, other: &Self) -> bool {
        self.buckets == other.buckets && self.virgin == other.virgin
    }
}

impl CoverageMap {
    pub fn new() -> Self {
        CoverageMap {
            buckets: vec![0u8; MAP_SIZE].into_boxed_slice(),
            touched: Vec::new(),
            virgin: vec![0u64; VIRGIN_WORDS].into_boxed_slice(),
            virgin_count: 0,
        }
    }

    /// Adds `weight` to bucket `index`, saturating at 255.
    #[inline]
    pub fn record(&mut self, index: u16, weight: u8) {
        let b = &mut self.buckets[index as usize];
        if *b == 0 && weight > 0 {
            self.touched.push(index);
        }
        *b = b.saturating_add(weight);
    }

    pub fn bucket(&self, index: u16) -> u8 {
        self.buckets[index as usize]
    }

    pub fn buckets(&self) -> &[u8] {
        &self.buckets
    }

    /// Number of nonzero buckets.
    pub fn populated(&self) -> usize {
        self.touched.len()
    }

    /// Nonzero `(index, value)` pairs in ascending index order.
    pub fn nonzero(&self) -> Vec<(u16, u8)> {
        let mut idx = self.touched.clone();
        idx.sort_unstable();
        idx.into_iter().map(|i| (i, self.buckets[i as usize])).collect()
    }

    /// Unsorted indices of nonzero buckets.
    pub fn touched(&self) -> &[u16] {
        &self.touched
    }

    /// Clears the run buckets; the virgin set is kept.
    pub fn begin_run(&mut self) {
        for &i in &self.touched {
            self.buckets[i as usize] = 0;
        }
        self.touched.clear();
    }

    pub fn is_virgin(&self, index: u16) -> bool {
        self.virgin[index as usize / 64] & (1 << (index % 64)) == 0
    }

    /// Number of run buckets not yet in the virgin set.
    pub fn count_new(&self) -> usize {
        self.touched.iter().filter(|&&i| self.is_virgin(i)).count()
    }

    /// Adds the run buckets to the virgin set; returns how many were new.
    pub fn commit_virgin(&mut self) -> usize {
        let mut new = 0;
        for &i in &self.touched {
            let w = &mut self.virgin[i as usize / 64];
            let bit = 1u64 << (i % 64);
            if *w & bit == 0 {
                *w |= bit;
                new += 1;
            }
        }
        self.virgin_count += new;
        new
    }

    /// Buckets ever populated across the campaign.
    pub fn virgin_count(&self) -> usize {
        self.virgin_count
    }

    /// Bucket-wise max and virgin-wise union.
    pub fn merge(&mut self, other: &CoverageMap) {
        for &i in &other.touched {
            let v = other.buckets[i as usize];
            let b = &mut self.buckets[i as usize];
            if *b == 0 {
                self.touched.push(i);
            }
            *b = (*b).max(v);
        }
        let mut count = 0;
        for (a, b) in self.virgin.iter_mut().zip(other.virgin.iter()) {
            *a |= *b;
            count += a.count_ones() as usize;
        }
        self.virgin_count = count;
    }

    /// Raw 65536-byte bucket image.
    pub fn export(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, &self.buckets[..])
    }

    /// Inverse of [`CoverageMap::export`]; the virgin set starts empty.
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != MAP_SIZE {
            return None;
        }
        let mut m = CoverageMap::new();
        for (i, &b) in bytes.iter().enumerate() {
            if b != 0 {
                m.buckets[i] = b;
                m.touched.push(i as u16);
            }
        }
        Some(m)
    }
}

#[derive(Clone, Copy)]
struct CacheEntry {
    code: u32,
    prev: u128,
    next: u128,
    index: u16,
    valid: bool,
}

const EMPTY: CacheEntry = CacheEntry {
    code: 0,
    prev: 0,
    next: 0,
    index: 0,
    valid: false,
};

/// Change sink feeding a [`CoverageMap`] from tracked-signal events.
#[derive(Clone)]
pub struct Monitor {
    pub map: CoverageMap,
    options: CompressionOptions,
    tracked: Vec<TrackedSignal>,
    slot: Vec<u32>,
    cache: Box<[CacheEntry]>,
    vector_cache: HashMap<Vec<u128>, u16>,
    vec_buf: Vec<u128>,
    pub events: u64,
    pub enabled: bool,
}

impl std::fmt::Debug for Monitor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Monitor")
            .field("tracked", &self.tracked)
            .field("options", &self.options)
            .field("events", &self.events)
            .finish()
    }
}

const VECTOR_CACHE_LIMIT: usize = 1 << 16;

impl Monitor {
    /// `signal_count` bounds the signal ids that may appear in events.
    pub fn new(tracked: Vec<TrackedSignal>, options: CompressionOptions, signal_count: usize) -> Self {
        let mut slot = vec![u32::MAX; signal_count];
        for (i, t) in tracked.iter().enumerate() {
            slot[t.signal.index()] = i as u32;
        }
        Monitor {
            map: CoverageMap::new(),
            options,
            tracked,
            slot,
            cache: vec![EMPTY; CACHE_SIZE].into_boxed_slice(),
            vector_cache: HashMap::new(),
            vec_buf: Vec::new(),
            events: 0,
            enabled: true,
        }
    }

    pub fn tracked(&self) -> &[TrackedSignal] {
        &self.tracked
    }

    pub fn tracked_ids(&self) -> Vec<SignalId> {
        self.tracked.iter().map(|t| t.signal).collect()
    }

    pub fn options(&self) -> CompressionOptions {
        self.options
    }

    fn compress_cached(&mut self, code: u32, prev: u128, next: u128) -> u16 {
        let h = (code as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ (prev as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
            ^ (next as u64).wrapping_mul(0x1656_67B1_9E37_79F9)
            ^ ((prev >> 64) as u64).rotate_left(17)
            ^ ((next >> 64) as u64).rotate_left(29);
        let slot = ((h ^ (h >> 29)) as usize) & (CACHE_SIZE - 1);
        let e = &self.cache[slot];
        if e.valid && e.code == code && e.prev == prev && e.next == next {
            return e.index;
        }
        let index = compress_raw(code, prev, next, self.options.shift_prev_only);
        self.cache[slot] = CacheEntry {
            code,
            prev,
            next,
            index,
            valid: true,
        };
        index
    }

    fn vector_index(&mut self, values: &[u128]) -> u16 {
        self.vec_buf.clear();
        self.vec_buf.extend(self.tracked.iter().map(|t| values[t.signal.index()]));
        if let Some(&i) = self.vector_cache.get(&self.vec_buf) {
            return i;
        }
        let mut buf = Vec::with_capacity(self.tracked.len() * 20);
        for (t, v) in self.tracked.iter().zip(&self.vec_buf) {
            buf.extend_from_slice(&lane(t.code, *v).bytes());
        }
        let i = digest16(&buf);
        if self.vector_cache.len() >= VECTOR_CACHE_LIMIT {
            self.vector_cache.clear();
        }
        self.vector_cache.insert(self.vec_buf.clone(), i);
        i
    }

    /// Records one event of a tracked signal.
    #[inline]
    pub fn observe(&mut self, event: &ChangeEvent, values: &[u128]) {
        let Some(&slot) = self.slot.get(event.signal.index()) else {
            return;
        };
        if slot == u32::MAX || !self.enabled {
            return;
        }
        let t = self.tracked[slot as usize];
        self.events += 1;
        let index = match self.options.kind {
            Compression::CompressValues => self.compress_cached(t.code, event.prev, event.next),
            Compression::VectorizeValues => self.vector_index(values),
        };
        let w = if self.options.weighted { t.weight } else { 1 };
        self.map.record(index, w);
    }
}

impl ChangeSink for Monitor {
    fn on_change(&mut self, event: &ChangeEvent, values: &[u128]) {
        self.observe(event, values);
    }
}
