// SPDX-License-Identifier: Apache-2.0
//! Testcase scores and the per-bucket champion rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Fitness {
    /// `|i| * t`, smaller is better.
    #[default]
    AflDefault,
    GeoMean,
    ArithMean,
    BucketCount,
    BucketTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Fitness {
    pub const ALL: [Fitness; 5] = [
        Fitness::AflDefault,
        Fitness::GeoMean,
        Fitness::ArithMean,
        Fitness::BucketCount,
        Fitness::BucketTotal,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Fitness::AflDefault => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    /// Whether `challenger` strictly beats `incumbent`.
    pub fn better(self, challenger: f64, incumbent: f64) -> bool {
        match self.direction() {
            Direction::Minimize => challenger < incumbent,
            Direction::Maximize => challenger > incumbent,
        }
    }

    /// Score of a run of `len` bytes taking `cycles`, whose run-delta map
    /// has the nonzero bucket values `buckets`.
    pub fn score(self, len: usize, cycles: u64, buckets: &[u8]) -> f64 {
        match self {
            Fitness::AflDefault => (len as u64 * cycles) as f64,
            Fitness::GeoMean => geo_mean(buckets),
            Fitness::ArithMean => arith_mean(buckets),
            Fitness::BucketCount => buckets.len() as f64,
            Fitness::BucketTotal => bucket_total(buckets) as f64,
        }
    }
}

impl fmt::Display for Fitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fitness::AflDefault => "default",
            Fitness::GeoMean => "geo",
            Fitness::ArithMean => "arith",
            Fitness::BucketCount => "count",
            Fitness::BucketTotal => "total",
        })
    }
}

impl FromStr for Fitness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "default" | "afl_default" => Ok(Fitness::AflDefault),
            "geo" | "geo_mean" => Ok(Fitness::GeoMean),
            "arith" | "arith_mean" => Ok(Fitness::ArithMean),
            "count" | "bucket_count" => Ok(Fitness::BucketCount),
            "total" | "bucket_total" => Ok(Fitness::BucketTotal),
            _ => Err(format!("unknown fitness '{s}' (expected default, geo, arith, count or total)")),
        }
    }
}

pub fn bucket_total(buckets: &[u8]) -> u64 {
    buckets.iter().map(|&b| b as u64).sum()
}

/// Mean of the nonzero bucket values; 0 for an empty map.
pub fn arith_mean(buckets: &[u8]) -> f64 {
    if buckets.is_empty() {
        0.0
    } else {
        bucket_total(buckets) as f64 / buckets.len() as f64
    }
}

/// Exact product `a * b` as an unevaluated sum `hi + lo`.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Double-double approximation of `a / g`.
fn dd_quot(a: f64, g: f64) -> (f64, f64) {
    let hi = a / g;
    let rem = (-hi).mul_add(g, a);
    (hi, rem / g)
}

/// Geometric mean of the nonzero bucket values; 0 for an empty map.
///
/// Starts from `exp(mean(ln a))` and applies Newton corrections with the
/// residual `prod(a_i / g)` evaluated in double-double arithmetic, which
/// brings the result within an ulp of the exact value.
pub fn geo_mean(buckets: &[u8]) -> f64 {
    if buckets.is_empty() {
        return 0.0;
    }
    let mut hist = [0u64; 256];
    for &b in buckets {
        hist[b as usize] += 1;
    }
    if hist[0] > 0 {
        return 0.0;
    }
    let n = buckets.len() as f64;
    let log_sum: f64 = (1..256).filter(|&v| hist[v] > 0).map(|v| hist[v] as f64 * (v as f64).ln()).sum();
    let mut g = (log_sum / n).exp();
    for _ in 0..2 {
        // q = prod(a_i / g) kept as (hi + lo) * 2^exp.
        let mut q = (1.0f64, 0.0f64);
        let mut exp: i64 = 0;
        for (v, &count) in hist.iter().enumerate().skip(1) {
            if count == 0 {
                continue;
            }
            let f = dd_quot(v as f64, g);
            for _ in 0..count {
                let hi = q.0 * f.0;
                let lo = two_prod(q.0, f.0).1 + q.0 * f.1 + q.1 * f.0;
                q = quick_two_sum(hi, lo);
                let e = ((q.0.to_bits() >> 52) & 0x7ff) as i64 - 1023;
                if e.abs() > 64 {
                    let s = f64::from_bits(((1023 - e) as u64) << 52);
                    q = (q.0 * s, q.1 * s);
                    exp += e;
                }
            }
        }
        let scaled = if exp == 0 {
            q
        } else if exp.abs() <= 1000 {
            let s = 2f64.powi(exp as i32);
            (q.0 * s, q.1 * s)
        } else {
            break;
        };
        let delta = ((scaled.0 - 1.0) + scaled.1) / n;
        if !delta.is_finite() {
            break;
        }
        // g * q^(1/n), with q^(1/n) - 1 ~ (q - 1)/n for q near 1.
        let corr = if delta.abs() < 1e-6 {
            delta
        } else {
            ((scaled.0 + scaled.1).ln() / n).exp_m1()
        };
        g = g.mul_add(corr, g);
    }
    g
}

/// Decision taken for one bucket by [`Champions::offer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChampionDecision {
    Installed,
    Replaced,
    Kept,
}

/// Best-scoring queue entry per bucket.
#[derive(Debug, Clone)]
pub struct Champions {
    fitness: Fitness,
    slots: Vec<Option<(usize, f64)>>,
    count: usize,
}

impl Champions {
    pub fn new(fitness: Fitness) -> Self {
        Champions {
            fitness,
            slots: vec![None; crate::coverage::MAP_SIZE],
            count: 0,
        }
    }

    pub fn fitness(&self) -> Fitness {
        self.fitness
    }

    /// Number of buckets with a champion.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, bucket: u16) -> Option<(usize, f64)> {
        self.slots[bucket as usize]
    }

    /// Offers `entry` with `score` for one bucket: unseen buckets install
    /// it; a strictly better score replaces the incumbent; ties keep it.
    pub fn offer(&mut self, bucket: u16, entry: usize, score: f64) -> (ChampionDecision, Option<usize>) {
        let slot = &mut self.slots[bucket as usize];
        match *slot {
            None => {
                *slot = Some((entry, score));
                self.count += 1;
                (ChampionDecision::Installed, None)
            }
            Some((old, s)) if self.fitness.better(score, s) => {
                *slot = Some((entry, score));
                (ChampionDecision::Replaced, Some(old))
            }
            Some(_) => (ChampionDecision::Kept, None),
        }
    }

    /// Overwrites the stored score of a bucket held by `entry`.
    pub fn rescore(&mut self, bucket: u16, entry: usize, score: f64) {
        if let Some((e, s)) = &mut self.slots[bucket as usize] {
            if *e == entry {
                *s = score;
            }
        }
    }
}
