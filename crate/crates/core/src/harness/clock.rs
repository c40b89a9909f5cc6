// SPDX-License-Identifier: Apache-2.0
//! Virtual PLL: clock waveforms derived from period, duty and phase.

use serde::{Deserialize, Serialize};

use crate::hdl::SignalId;

/// Duty cycle `num/den`, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Duty {
    pub num: u64,
    pub den: u64,
}

impl Duty {
    pub const HALF: Duty = Duty { num: 1, den: 2 };

    pub fn new(num: u64, den: u64) -> Option<Duty> {
        (den > 0 && num > 0 && num < den).then_some(Duty { num, den })
    }

    /// Parses `0.6`, `3/5` or `60%`.
    pub fn parse(s: &str) -> Option<Duty> {
        let s = s.trim();
        if let Some(p) = s.strip_suffix('%') {
            let d = Duty::parse(p)?;
            return Duty::new(d.num, d.den * 100);
        }
        if let Some((a, b)) = s.split_once('/') {
            return Duty::new(a.trim().parse().ok()?, b.trim().parse().ok()?);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        Duty::new(int.checked_mul(den)? + frac_v, den)
    }

    /// The complementary duty `1 - h`.
    pub fn complement(self) -> Duty {
        Duty {
            num: self.den - self.num,
            den: self.den,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub name: String,
    pub signal: SignalId,
    pub period: u64,
    pub duty: Duty,
    /// Timestep of a rising edge; the waveform is periodic in both directions.
    pub phase: u64,
    /// Inverted companion clock input, if any.
    pub differential: Option<SignalId>,
    /// Input raised once the clock has run `stable_after` timesteps.
    pub stable: Option<SignalId>,
    pub stable_after: u64,
}

impl ClockSpec {
    pub fn new(name: impl Into<String>, signal: SignalId, period: u64) -> Self {
        ClockSpec {
            name: name.into(),
            signal,
            period,
            duty: Duty::HALF,
            phase: 0,
            differential: None,
            stable: None,
            stable_after: period,
        }
    }

    /// `round(period * h)`, halves rounding up.
    pub fn high_time(&self) -> u64 {
        (2 * self.period * self.duty.num + self.duty.den) / (2 * self.duty.den)
    }

    fn offset(&self, t: u64) -> u64 {
        (t + self.period - self.phase % self.period) % self.period
    }

    /// Clock level at timestep `t`: high during `[phase, phase + H)` of
    /// every period.
    pub fn level(&self, t: u64) -> bool {
        self.offset(t) < self.high_time()
    }

    /// Whether the clock rises exactly at `t`.
    pub fn rises_at(&self, t: u64) -> bool {
        self.offset(t) == 0
    }

    /// Level of the differential companion: high time `P - H`, rising
    /// when the base clock falls.
    pub fn differential_level(&self, t: u64) -> bool {
        !self.level(t)
    }

    /// Companion's rising-edge offset relative to the base clock.
    pub fn differential_rise_offset(&self) -> u64 {
        self.high_time()
    }

    /// Phase difference between the pulse centres of the base clock and its
    /// companion, which is always half a period.
    pub fn differential_centre_shift(&self) -> f64 {
        let h = self.high_time() as f64;
        let p = self.period as f64;
        (h + (p - h) / 2.0) - h / 2.0
    }

    pub fn stable_level(&self, t: u64) -> bool {
        t >= self.stable_after
    }
}
