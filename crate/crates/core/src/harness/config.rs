// SPDX-License-Identifier: Apache-2.0
//! Line-oriented harness configuration: `section.key = value`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::clock::{ClockSpec, Duty};
use crate::coverage::{Compression, CompressionOptions};
use crate::hdl::{Design, SignalId, SignalKind};

pub const DEFAULT_MAX_CYCLES: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown signal '{name}'")]
    UnknownSignal { name: String, line: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetStyle {
    Synchronous,
    Asynchronous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSpec {
    pub name: String,
    pub signal: SignalId,
    pub active_high: bool,
    pub style: ResetStyle,
}

impl ResetSpec {
    pub fn level(&self, asserted: bool) -> u128 {
        (asserted == self.active_high) as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDomain {
    pub name: String,
    /// Index into [`HarnessConfig::clocks`]; `None` for asynchronous inputs.
    pub clock: Option<usize>,
    pub inputs: Vec<(SignalId, u32)>,
}

impl InputDomain {
    pub fn total_width(&self) -> u32 {
        self.inputs.iter().map(|(_, w)| w).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub clocks: Vec<ClockSpec>,
    pub resets: Vec<ResetSpec>,
    pub domains: Vec<InputDomain>,
    pub tracked: Vec<(SignalId, u8)>,
    /// Assertion indices into the design.
    pub properties: Vec<usize>,
    pub compression: CompressionOptions,
    pub init: Vec<(SignalId, u128)>,
    pub max_cycles: u64,
    pub warnings: Vec<String>,
}

impl HarnessConfig {
    /// Timesteps per scheduling round: the slowest clock period, or 1 when
    /// the design has no configured clocks.
    pub fn round_length(&self) -> u64 {
        self.clocks.iter().map(|c| c.period).max().unwrap_or(1)
    }

    /// Input bits consumed by one fast-mode round.
    pub fn round_width(&self) -> u32 {
        self.domains.iter().map(|d| d.total_width()).sum()
    }

    /// Replaces the tracked set.
    pub fn with_tracked(mut self, tracked: Vec<(SignalId, u8)>) -> Self {
        self.tracked = tracked;
        self.warnings.retain(|w| !w.starts_with("empty tracked set"));
        if self.tracked.is_empty() {
            self.warnings.push(EMPTY_TRACKED.to_string());
        }
        self
    }
}

const EMPTY_TRACKED: &str = "empty tracked set: coverage feedback disabled (blackbox fuzzing)";

/// Default configuration: every trigger input becomes a period-2 clock and
/// all other inputs form one domain on the first clock.
pub fn default_config(design: &Design) -> HarnessConfig {
    let clocks: Vec<ClockSpec> = design
        .processes
        .iter()
        .filter_map(|p| p.clock())
        .map(|t| t.signal)
        .filter(|s| design.signals[s.index()].kind == SignalKind::Input)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|s| ClockSpec::new(design.signals[s.index()].name.clone(), s, 2))
        .collect();
    let clock_ids: Vec<SignalId> = clocks.iter().map(|c| c.signal).collect();
    let inputs = design
        .inputs()
        .filter(|s| !clock_ids.contains(&s.id))
        .map(|s| (s.id, s.width))
        .collect::<Vec<_>>();
    let domains = if inputs.is_empty() {
        Vec::new()
    } else {
        vec![InputDomain {
            name: "default".into(),
            clock: if clocks.is_empty() { None } else { Some(0) },
            inputs,
        }]
    };
    HarnessConfig {
        clocks,
        resets: Vec::new(),
        domains,
        tracked: Vec::new(),
        properties: (0..design.assertions.len()).collect(),
        compression: CompressionOptions::default(),
        init: Vec::new(),
        max_cycles: DEFAULT_MAX_CYCLES,
        warnings: vec![EMPTY_TRACKED.to_string()],
    }
}

#[derive(Default)]
struct RawClock {
    period: Option<u64>,
    duty: Option<Duty>,
    phase: u64,
    differential: Option<String>,
    stable: Option<String>,
    stable_after: Option<u64>,
    line: usize,
}

struct RawReset {
    active_high: bool,
    style: ResetStyle,
    line: usize,
}

#[derive(Default)]
struct RawDomain {
    clock: Option<String>,
    inputs: Vec<String>,
    line: usize,
}

fn parse_num(s: &str, line: usize) -> Result<u128, ConfigError> {
    let t: String = s.trim().chars().filter(|&c| c != '_').collect();
    let r = if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u128::from_str_radix(h, 16)
    } else if let Some(b) = t.strip_prefix("0b") {
        u128::from_str_radix(b, 2)
    } else {
        t.parse()
    };
    r.map_err(|_| ConfigError::Parse {
        line,
        message: format!("expected a number, found '{s}'"),
    })
}

fn parse_u64(s: &str, line: usize) -> Result<u64, ConfigError> {
    let v = parse_num(s, line)?;
    u64::try_from(v).map_err(|_| ConfigError::Parse {
        line,
        message: format!("number '{s}' is too large"),
    })
}

fn parse_bool(s: &str, line: usize) -> Result<bool, ConfigError> {
    match s {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::Parse {
            line,
            message: format!("expected true or false, found '{s}'"),
        }),
    }
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn bad_key(line: usize, key: &str) -> ConfigError {
    ConfigError::Parse {
        line,
        message: format!("unknown key '{key}'"),
    }
}

/// Parses and validates a configuration against `design`.
pub fn load_config(text: &str, design: &Design) -> Result<HarnessConfig, ConfigError> {
    let mut clock_order: Vec<String> = Vec::new();
    let mut clocks: BTreeMap<String, RawClock> = BTreeMap::new();
    let mut reset_order: Vec<String> = Vec::new();
    let mut resets: BTreeMap<String, RawReset> = BTreeMap::new();
    let mut domain_order: Vec<String> = Vec::new();
    let mut domains: BTreeMap<String, RawDomain> = BTreeMap::new();
    let mut tracked: Vec<(String, u8, usize)> = Vec::new();
    let mut properties: Option<(Vec<String>, usize)> = None;
    let mut compression = CompressionOptions::default();
    let mut init: Vec<(String, u128, usize)> = Vec::new();
    let mut max_cycles = DEFAULT_MAX_CYCLES;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: "expected 'key = value'".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let (section, rest) = key.split_once('.').unwrap_or((key, ""));
        match section {
            "clock" | "reset" | "domain" => {
                let (name, field) = rest.rsplit_once('.').ok_or_else(|| ConfigError::Parse {
                    line,
                    message: format!("expected '{section}.<name>.<key>'"),
                })?;
                let name = name.to_string();
                match section {
                    "clock" => {
                        if !clocks.contains_key(&name) {
                            clock_order.push(name.clone());
                        }
                        let c = clocks.entry(name).or_insert_with(|| RawClock { line, ..Default::default() });
                        match field {
                            "period" => c.period = Some(parse_u64(value, line)?),
                            "duty" => {
                                c.duty = Some(Duty::parse(value).ok_or_else(|| ConfigError::Parse {
                                    line,
                                    message: format!("duty '{value}' must lie strictly between 0 and 1"),
                                })?)
                            }
                            "phase" => c.phase = parse_u64(value, line)?,
                            "differential" => c.differential = Some(value.to_string()),
                            "stable" => c.stable = Some(value.to_string()),
                            "stable_after" => c.stable_after = Some(parse_u64(value, line)?),
                            _ => return Err(bad_key(line, key)),
                        }
                    }
                    "reset" => {
                        if !resets.contains_key(&name) {
                            reset_order.push(name.clone());
                        }
                        let r = resets.entry(name).or_insert(RawReset {
                            active_high: true,
                            style: ResetStyle::Synchronous,
                            line,
                        });
                        match (field, value) {
                            ("active", "high") => r.active_high = true,
                            ("active", "low") => r.active_high = false,
                            ("style", "sync" | "synchronous") => r.style = ResetStyle::Synchronous,
                            ("style", "async" | "asynchronous") => r.style = ResetStyle::Asynchronous,
                            ("active" | "style", _) => {
                                return Err(ConfigError::Parse {
                                    line,
                                    message: format!("invalid value '{value}' for '{key}'"),
                                })
                            }
                            _ => return Err(bad_key(line, key)),
                        }
                    }
                    _ => {
                        if !domains.contains_key(&name) {
                            domain_order.push(name.clone());
                        }
                        let d = domains.entry(name).or_insert_with(|| RawDomain { line, ..Default::default() });
                        match field {
                            "clock" => d.clock = Some(value.to_string()),
                            "inputs" => d.inputs = list(value),
                            _ => return Err(bad_key(line, key)),
                        }
                    }
                }
            }
            "track" => {
                if rest.is_empty() {
                    for n in list(value) {
                        tracked.push((n, 1, line));
                    }
                } else {
                    let w = parse_u64(value, line)?;
                    if !(1..=255).contains(&w) {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("weight {w} outside 1..=255"),
                        });
                    }
                    tracked.push((rest.to_string(), w as u8, line));
                }
            }
            "property" if rest.is_empty() => properties = Some((list(value), line)),
            "compression" => match rest {
                "" => compression.kind = value.parse::<Compression>().map_err(|message| ConfigError::Parse { line, message })?,
                "shift" => {
                    compression.shift_prev_only = match value {
                        "concat" => false,
                        "prev" => true,
                        _ => {
                            return Err(ConfigError::Parse {
                                line,
                                message: format!("compression.shift must be 'concat' or 'prev', found '{value}'"),
                            })
                        }
                    }
                }
                "weighted" => compression.weighted = parse_bool(value, line)?,
                _ => return Err(bad_key(line, key)),
            },
            "init" if !rest.is_empty() => init.push((rest.to_string(), parse_num(value, line)?, line)),
            "run" => match rest {
                "max_cycles" => max_cycles = parse_u64(value, line)?,
                _ => return Err(bad_key(line, key)),
            },
            _ => return Err(bad_key(line, key)),
        }
    }

    let resolve = |name: &str, line: usize| -> Result<SignalId, ConfigError> {
        design
            .find_signal(name)
            .ok_or_else(|| ConfigError::UnknownSignal { name: name.to_string(), line })
    };
    let input = |name: &str, line: usize, what: &str| -> Result<SignalId, ConfigError> {
        let s = resolve(name, line)?;
        if design.signals[s.index()].kind != SignalKind::Input {
            return Err(ConfigError::Parse {
                line,
                message: format!("{what} '{name}' must be a design input"),
            });
        }
        Ok(s)
    };

    let mut reserved: Vec<SignalId> = Vec::new();
    let mut out_clocks = Vec::new();
    for name in &clock_order {
        let raw = &clocks[name];
        let line = raw.line;
        let signal = input(name, line, "clock")?;
        if design.signals[signal.index()].width != 1 {
            return Err(ConfigError::Parse {
                line,
                message: format!("clock '{name}' must be 1 bit wide"),
            });
        }
        let period = raw.period.ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("clock '{name}' needs a period"),
        })?;
        if period < 2 {
            return Err(ConfigError::Parse {
                line,
                message: format!("clock '{name}' period must be at least 2"),
            });
        }
        let mut spec = ClockSpec::new(name.clone(), signal, period);
        spec.duty = raw.duty.unwrap_or(Duty::HALF);
        spec.phase = raw.phase;
        let h = spec.high_time();
        if h < 1 || h >= period {
            return Err(ConfigError::Parse {
                line,
                message: format!("clock '{name}': high time {h} must lie in 1..{period}"),
            });
        }
        if let Some(d) = &raw.differential {
            spec.differential = Some(input(d, line, "differential clock")?);
        }
        if let Some(s) = &raw.stable {
            spec.stable = Some(input(s, line, "clock-stable signal")?);
        }
        spec.stable_after = raw.stable_after.unwrap_or(period);
        reserved.push(signal);
        reserved.extend(spec.differential);
        reserved.extend(spec.stable);
        out_clocks.push(spec);
    }

    let mut out_resets = Vec::new();
    for name in &reset_order {
        let raw = &resets[name];
        let signal = input(name, raw.line, "reset")?;
        reserved.push(signal);
        out_resets.push(ResetSpec {
            name: name.clone(),
            signal,
            active_high: raw.active_high,
            style: raw.style,
        });
    }
    {
        let mut seen = reserved.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid(
                "a signal is configured as more than one clock, reset or stable signal".into(),
            ));
        }
    }

    let mut assigned: Vec<SignalId> = Vec::new();
    let mut out_domains = Vec::new();
    for name in &domain_order {
        let raw = &domains[name];
        let clock = match &raw.clock {
            Some(c) => Some(out_clocks.iter().position(|k| &k.name == c).ok_or_else(|| ConfigError::Parse {
                line: raw.line,
                message: format!("domain '{name}' refers to unconfigured clock '{c}'"),
            })?),
            None => None,
        };
        let mut inputs = Vec::new();
        for n in &raw.inputs {
            let s = input(n, raw.line, "domain input")?;
            if reserved.contains(&s) {
                return Err(ConfigError::Parse {
                    line: raw.line,
                    message: format!("'{n}' is a clock or reset and cannot be a domain input"),
                });
            }
            if assigned.contains(&s) {
                return Err(ConfigError::Parse {
                    line: raw.line,
                    message: format!("input '{n}' belongs to more than one domain"),
                });
            }
            assigned.push(s);
            inputs.push((s, design.signals[s.index()].width));
        }
        out_domains.push(InputDomain {
            name: name.clone(),
            clock,
            inputs,
        });
    }
    let leftover: Vec<(SignalId, u32)> = design
        .inputs()
        .filter(|s| !reserved.contains(&s.id) && !assigned.contains(&s.id))
        .map(|s| (s.id, s.width))
        .collect();
    let mut warnings = Vec::new();
    if !leftover.is_empty() {
        if !out_domains.is_empty() {
            let names: Vec<&str> = leftover.iter().map(|(s, _)| design.signals[s.index()].name.as_str()).collect();
            warnings.push(format!("inputs without a domain are driven asynchronously: {}", names.join(", ")));
        }
        out_domains.insert(
            0,
            InputDomain {
                name: "async".into(),
                clock: None,
                inputs: leftover,
            },
        );
    }

    let mut out_tracked: Vec<(SignalId, u8)> = Vec::new();
    for (n, w, line) in &tracked {
        let s = resolve(n, *line)?;
        if let Some(t) = out_tracked.iter_mut().find(|t| t.0 == s) {
            t.1 = *w;
        } else {
            out_tracked.push((s, *w));
        }
    }
    if out_tracked.is_empty() {
        warnings.push(EMPTY_TRACKED.to_string());
    }

    let out_properties = match properties {
        Some((names, line)) => {
            let mut v = Vec::new();
            for n in names {
                v.push(design.find_assertion(&n).ok_or_else(|| ConfigError::Parse {
                    line,
                    message: format!("unknown property '{n}'"),
                })?);
            }
            v
        }
        None => (0..design.assertions.len()).collect(),
    };
    if out_properties.is_empty() {
        return Err(ConfigError::Invalid("at least one property is required".into()));
    }

    let mut out_init = Vec::new();
    for (n, v, line) in init {
        let s = resolve(&n, line)?;
        let d = &design.signals[s.index()];
        if d.kind != SignalKind::Register {
            return Err(ConfigError::Parse {
                line,
                message: format!("init target '{n}' is not a register"),
            });
        }
        if v & !crate::bits::mask(d.width) != 0 {
            return Err(ConfigError::Parse {
                line,
                message: format!("init value {v:#x} does not fit '{n}' of width {}", d.width),
            });
        }
        out_init.push((s, v));
    }

    Ok(HarnessConfig {
        clocks: out_clocks,
        resets: out_resets,
        domains: out_domains,
        tracked: out_tracked,
        properties: out_properties,
        compression,
        init: out_init,
        max_cycles,
        warnings,
    })
}
