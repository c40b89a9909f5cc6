// SPDX-License-Identifier: Apache-2.0
//! Data- and control-flow dependencies between signals, property distance,
//! and threshold-based selection of the tracked set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hdl::{Design, ReadRole, SignalId, SignalKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DepError {
    #[error("no signal is reachable from the property signals")]
    NoReachableSignals,
    #[error("unknown assertion '{0}'")]
    UnknownProperty(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Dfa,
    Cfa,
    Dcfa,
}

impl Analysis {
    pub const ALL: [Analysis; 3] = [Analysis::Dfa, Analysis::Cfa, Analysis::Dcfa];

    fn uses_dfa(self) -> bool {
        matches!(self, Analysis::Dfa | Analysis::Dcfa)
    }

    fn uses_cfa(self) -> bool {
        matches!(self, Analysis::Cfa | Analysis::Dcfa)
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Analysis::Dfa => "dfa",
            Analysis::Cfa => "cfa",
            Analysis::Dcfa => "dcfa",
        })
    }
}

impl FromStr for Analysis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dfa" => Ok(Analysis::Dfa),
            "cfa" => Ok(Analysis::Cfa),
            "dcfa" | "dfa+cfa" => Ok(Analysis::Dcfa),
            _ => Err(format!("unknown analysis '{s}' (expected dfa, cfa or dcfa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThresholdLevel {
    #[serde(rename = "max")]
    Max,
    #[serde(rename = "max/2")]
    Half,
    #[serde(rename = "max/4")]
    Quarter,
    #[serde(rename = "max/8")]
    Eighth,
    #[serde(rename = "min")]
    Min,
}

impl ThresholdLevel {
    /// Levels from the widest to the narrowest.
    pub const ALL: [ThresholdLevel; 5] = [
        ThresholdLevel::Max,
        ThresholdLevel::Half,
        ThresholdLevel::Quarter,
        ThresholdLevel::Eighth,
        ThresholdLevel::Min,
    ];
}

impl fmt::Display for ThresholdLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdLevel::Max => "max",
            ThresholdLevel::Half => "max/2",
            ThresholdLevel::Quarter => "max/4",
            ThresholdLevel::Eighth => "max/8",
            ThresholdLevel::Min => "min",
        })
    }
}

impl FromStr for ThresholdLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "max" => Ok(ThresholdLevel::Max),
            "max/2" | "max2" => Ok(ThresholdLevel::Half),
            "max/4" | "max4" => Ok(ThresholdLevel::Quarter),
            "max/8" | "max8" => Ok(ThresholdLevel::Eighth),
            "min" => Ok(ThresholdLevel::Min),
            _ => Err(format!("unknown threshold '{s}' (expected max, max/2, max/4, max/8 or min)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Threshold {
    pub level: ThresholdLevel,
    pub resolved: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: usize,
    pub dfa_edges: BTreeSet<(SignalId, SignalId)>,
    pub cfa_edges: BTreeSet<(SignalId, SignalId)>,
}

impl DependencyGraph {
    /// Sources of edges entering `dst` under `analysis`.
    pub fn predecessors(&self, analysis: Analysis) -> Vec<Vec<SignalId>> {
        let mut preds = vec![Vec::new(); self.nodes];
        if analysis.uses_dfa() {
            for &(s, d) in &self.dfa_edges {
                preds[d.index()].push(s);
            }
        }
        if analysis.uses_cfa() {
            for &(s, d) in &self.cfa_edges {
                preds[d.index()].push(s);
            }
        }
        for p in &mut preds {
            p.sort();
            p.dedup();
        }
        preds
    }
}

/// Collects dependency edges: right-hand-side reads give data-flow edges;
/// guard conditions, case labels, ROM indices and ternary selects give
/// control-flow edges.
pub fn build_graph(d: &Design) -> DependencyGraph {
    let mut dfa = BTreeSet::new();
    let mut cfa = BTreeSet::new();
    for p in &d.processes {
        let mut guards = Vec::new();
        for stmt in &p.body {
            stmt.visit_assigns(&mut guards, &mut |lv, value, gs| {
                let dst = lv.signal;
                value.visit_reads(&mut |s, role| {
                    if s != dst {
                        match role {
                            ReadRole::Data => dfa.insert((s, dst)),
                            ReadRole::Control => cfa.insert((s, dst)),
                        };
                    }
                });
                for g in gs {
                    g.visit_reads(&mut |s, _| {
                        if s != dst {
                            cfa.insert((s, dst));
                        }
                    });
                }
            });
        }
    }
    DependencyGraph {
        nodes: d.signals.len(),
        dfa_edges: dfa,
        cfa_edges: cfa,
    }
}

/// Signals read by the given assertions.
pub fn property_signals(d: &Design, properties: &[usize]) -> Vec<SignalId> {
    let mut out = BTreeSet::new();
    for &i in properties {
        out.extend(d.assertions[i].expr.signals());
    }
    out.into_iter().collect()
}

/// Resolves assertion names to indices.
pub fn property_indices(d: &Design, names: &[String]) -> Result<Vec<usize>, DepError> {
    names
        .iter()
        .map(|n| d.find_assertion(n).ok_or_else(|| DepError::UnknownProperty(n.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDistance {
    pub analysis: Analysis,
    /// Hop count to the nearest property signal; `None` when unreachable.
    pub pd: Vec<Option<u32>>,
    /// Signals treated as observable candidates (not design inputs).
    candidate: Vec<bool>,
    /// Whether any configured edge enters a property signal.
    connected: bool,
}

impl PropertyDistance {
    pub fn get(&self, s: SignalId) -> Option<u32> {
        self.pd.get(s.index()).copied().flatten()
    }

    /// False when no configured edge reaches the property signals from any
    /// other signal; selection is then empty at every threshold.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    fn candidates(&self) -> impl Iterator<Item = (SignalId, u32)> + '_ {
        self.pd
            .iter()
            .enumerate()
            .filter(|(i, _)| self.candidate[*i])
            .filter_map(|(i, p)| p.map(|p| (SignalId(i as u32), p)))
    }
}

/// Backward BFS from the property signals along the configured edges.
pub fn property_distance(g: &DependencyGraph, d: &Design, analysis: Analysis, properties: &[SignalId]) -> PropertyDistance {
    let preds = g.predecessors(analysis);
    let mut pd = vec![None; g.nodes];
    let mut queue = VecDeque::new();
    for &s in properties {
        if pd[s.index()].is_none() {
            pd[s.index()] = Some(0);
            queue.push_back(s);
        }
    }
    let connected = properties.iter().any(|s| preds[s.index()].iter().any(|p| !properties.contains(p)));
    while let Some(s) = queue.pop_front() {
        let next = pd[s.index()].expect("queued nodes have a distance") + 1;
        for &p in &preds[s.index()] {
            if pd[p.index()].is_none() {
                pd[p.index()] = Some(next);
                queue.push_back(p);
            }
        }
    }
    let candidate = d.signals.iter().map(|s| s.kind != SignalKind::Input).collect();
    PropertyDistance {
        analysis,
        pd,
        candidate,
        connected,
    }
}

/// Threshold from the extremes of the reachable non-input distances;
/// fractional levels use ceiling division.
pub fn resolve_threshold(pds: &PropertyDistance, level: ThresholdLevel) -> Result<Threshold, DepError> {
    let mut it = pds.candidates().map(|(_, p)| p);
    let first = it.next().ok_or(DepError::NoReachableSignals)?;
    let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.min(p), hi.max(p)));
    let resolved = match level {
        ThresholdLevel::Max => max,
        ThresholdLevel::Half => max.div_ceil(2),
        ThresholdLevel::Quarter => max.div_ceil(4),
        ThresholdLevel::Eighth => max.div_ceil(8),
        ThresholdLevel::Min => min,
    };
    Ok(Threshold {
        level,
        resolved: resolved.max(min),
    })
}

/// Reachable non-input signals with `pd <= tau`, weighted `tau - pd + 1`.
pub fn select_signals(pds: &PropertyDistance, tau: Threshold) -> Vec<(SignalId, u8)> {
    if !pds.connected {
        return Vec::new();
    }
    pds.candidates()
        .filter(|&(_, p)| p <= tau.resolved)
        .map(|(s, p)| (s, (tau.resolved - p + 1).min(255) as u8))
        .collect()
}

/// Full pipeline from assertion indices to a weighted selection.
pub fn analyze(d: &Design, properties: &[usize], analysis: Analysis, level: ThresholdLevel) -> Result<Selection, DepError> {
    let g = build_graph(d);
    let sources = property_signals(d, properties);
    let pds = property_distance(&g, d, analysis, &sources);
    let tau = resolve_threshold(&pds, level)?;
    let selected = select_signals(&pds, tau);
    Ok(Selection { pds, tau, selected })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub pds: PropertyDistance,
    pub tau: Threshold,
    pub selected: Vec<(SignalId, u8)>,
}
