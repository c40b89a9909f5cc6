// SPDX-License-Identifier: Apache-2.0
//! Campaign loop: queue scheduling, trimming, deterministic and havoc
//! stages, champion bookkeeping, fault recording and report assembly.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::det;
use super::fitness::{ChampionDecision, Champions, Fitness};
use super::mutate::{havoc, DEFAULT_MAX_LEN};
use super::trim::trim_by;
use crate::coverage::CoverageMap;
use crate::depgraph::{self, Analysis, DepError, ThresholdLevel};
use crate::harness::{Harness, HarnessConfig, HarnessError, Outcome};
use crate::hdl::Design;
use crate::sim::{SimError, SimMode};

pub const DEFAULT_HAVOC_ENERGY: usize = 256;
pub const DEFAULT_CRASH_CAP: usize = 16;
pub const SAMPLE_EVERY: u64 = 256;
const NON_FAVORED_PICK: f64 = 0.1;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Dep(#[from] DepError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid options: {0}")]
    Options(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOptions {
    pub fitness: Fitness,
    pub mode: SimMode,
    /// Replaces the configured tracked set with a dependency-analysis
    /// selection.
    pub selection: Option<(Analysis, ThresholdLevel)>,
    pub trimming: bool,
    pub deterministic: bool,
    pub seed: u64,
    pub exec_budget: u64,
    #[serde(skip)]
    pub time_budget: Option<Duration>,
    pub workers: usize,
    /// End the campaign at the first fault instead of running to budget.
    pub stop_on_fault: bool,
    pub max_len: usize,
    pub havoc_energy: usize,
    pub crash_cap: usize,
    pub initial_inputs: Vec<Vec<u8>>,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            fitness: Fitness::AflDefault,
            mode: SimMode::Accurate,
            selection: None,
            trimming: false,
            deterministic: false,
            seed: 0,
            exec_budget: 100_000,
            time_budget: None,
            workers: 1,
            stop_on_fault: false,
            max_len: DEFAULT_MAX_LEN,
            havoc_energy: DEFAULT_HAVOC_ENERGY,
            crash_cap: DEFAULT_CRASH_CAP,
            initial_inputs: vec![vec![0u8; 4]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignOutcome {
    FaultFound,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub worker: usize,
    pub execs: u64,
    pub buckets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub design: String,
    pub seed: u64,
    pub options: CampaignOptions,
    pub tracked: Vec<(String, u8)>,
    pub warnings: Vec<String>,
    pub execs_total: u64,
    /// Executions until each property first fired, `None` if it never did.
    pub first_fault_execs: BTreeMap<String, Option<u64>>,
    pub faults_total: u64,
    pub buckets_populated: usize,
    pub coverage_samples: Vec<Sample>,
    pub queue_len: usize,
    pub champions: usize,
    pub champion_replacements: u64,
    pub crashes: Vec<String>,
    pub outcome: CampaignOutcome,
}

impl CampaignReport {
    /// Executions until the first fault of any property.
    pub fn execs_to_fault(&self) -> Option<u64> {
        self.first_fault_execs.values().flatten().copied().min()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// splitmix64 of `seed` mixed with `worker`.
pub fn worker_seed(seed: u64, worker: u64) -> u64 {
    let mut z = seed ^ worker.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Entry {
    bytes: Vec<u8>,
    found_pass: Option<u64>,
    champion_of: usize,
    trimmed: bool,
    det_done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExecKind {
    Seed,
    Child,
    Probe,
}

struct WorkerResult {
    execs: u64,
    first_fault: BTreeMap<String, u64>,
    faults: u64,
    map: CoverageMap,
    samples: Vec<Sample>,
    crashes: Vec<(String, Vec<u8>)>,
    queue_len: usize,
    champions: usize,
    replacements: u64,
    stats: Vec<String>,
}

struct Worker<'o> {
    id: usize,
    h: Harness,
    opts: &'o CampaignOptions,
    rng: ChaCha8Rng,
    queue: Vec<Entry>,
    champs: Champions,
    execs: u64,
    budget: u64,
    deadline: Option<Instant>,
    stopped: bool,
    pass: u64,
    first_fault: BTreeMap<String, u64>,
    faults: u64,
    crashes: Vec<(String, Vec<u8>)>,
    crash_count: BTreeMap<String, usize>,
    samples: Vec<Sample>,
    replacements: u64,
    stats: Vec<String>,
    values: Vec<u8>,
}

impl<'o> Worker<'o> {
    fn exhausted(&mut self) -> bool {
        if self.stopped || self.execs >= self.budget {
            return true;
        }
        if let Some(d) = self.deadline {
            if self.execs.is_multiple_of(64) && Instant::now() >= d {
                self.stopped = true;
                return true;
            }
        }
        false
    }

    fn record_fault(&mut self, outcome: &Outcome, input: &[u8], new_coverage: bool) {
        let Outcome::Fault { property, .. } = outcome else {
            return;
        };
        self.faults += 1;
        let first = !self.first_fault.contains_key(property);
        if first {
            self.first_fault.insert(property.clone(), self.execs);
        }
        let count = self.crash_count.entry(property.clone()).or_insert(0);
        if (first || new_coverage) && *count < self.opts.crash_cap {
            *count += 1;
            self.crashes.push((property.clone(), input.to_vec()));
        }
        if self.opts.stop_on_fault {
            self.stopped = true;
        }
    }

    fn stat_line(&mut self) {
        self.stats.push(format!(
            "{{\"worker\":{},\"execs\":{},\"buckets_populated\":{},\"faults\":{},\"queue\":{}}}",
            self.id,
            self.execs,
            self.h.monitor.map.virgin_count(),
            self.faults,
            self.queue.len()
        ));
    }

    /// Runs one input; `None` once the budget is spent.
    fn exec(&mut self, input: Vec<u8>, kind: ExecKind) -> Result<Option<bool>, CampaignError> {
        if self.exhausted() {
            return Ok(None);
        }
        let v = self.h.run(&input)?;
        self.execs += 1;
        if self.execs.is_multiple_of(SAMPLE_EVERY) {
            self.samples.push(Sample {
                worker: self.id,
                execs: self.execs,
                buckets: self.h.monitor.map.virgin_count(),
            });
        }
        if kind == ExecKind::Probe {
            self.record_fault(&v.outcome, &input, false);
            return Ok(Some(false));
        }
        let new = self.h.monitor.map.commit_virgin();
        self.values.clear();
        let map = &self.h.monitor.map;
        self.values.extend(map.touched().iter().map(|&b| map.bucket(b)));
        let score = self.opts.fitness.score(input.len(), v.sim_cycles, &self.values);
        let idx = self.queue.len();
        let mut held = 0;
        for k in 0..map.touched().len() {
            let b = self.h.monitor.map.touched()[k];
            match self.champs.offer(b, idx, score) {
                (ChampionDecision::Installed, _) => held += 1,
                (ChampionDecision::Replaced, old) => {
                    held += 1;
                    self.replacements += 1;
                    if let Some(o) = old {
                        self.queue[o].champion_of -= 1;
                    }
                }
                (ChampionDecision::Kept, _) => {}
            }
        }
        let added = held > 0 || new > 0 || (kind == ExecKind::Seed && self.queue.is_empty());
        if added {
            self.queue.push(Entry {
                bytes: input.clone(),
                found_pass: (new > 0).then_some(self.pass),
                champion_of: held,
                trimmed: false,
                det_done: false,
            });
            self.stat_line();
        }
        self.record_fault(&v.outcome, &input, new > 0);
        Ok(Some(added))
    }

    fn trim_entry(&mut self, i: usize) -> Result<(), CampaignError> {
        let original = self.queue[i].bytes.clone();
        let mut err = None;
        let trimmed = trim_by(&original, |cand| {
            if err.is_some() || self.exhausted() {
                return None;
            }
            let r = self.h.run(cand);
            self.execs += 1;
            match r {
                Ok(v) => {
                    self.record_fault(&v.outcome, cand, false);
                    let mut b = self.h.monitor.map.touched().to_vec();
                    b.sort_unstable();
                    Some((b, v.property().map(str::to_string)))
                }
                Err(e) => {
                    err = Some(e);
                    None
                }
            }
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        self.queue[i].trimmed = true;
        if trimmed.len() < original.len() && !self.exhausted() {
            let v = self.h.run(&trimmed)?;
            self.execs += 1;
            self.values.clear();
            let map = &self.h.monitor.map;
            self.values.extend(map.touched().iter().map(|&b| map.bucket(b)));
            let score = self.opts.fitness.score(trimmed.len(), v.sim_cycles, &self.values);
            for k in 0..map.touched().len() {
                let b = self.h.monitor.map.touched()[k];
                self.champs.rescore(b, i, score);
            }
            self.queue[i].bytes = trimmed;
        }
        Ok(())
    }

    fn run(mut self) -> Result<WorkerResult, CampaignError> {
        for s in self.opts.initial_inputs.clone() {
            if self.exec(s, ExecKind::Seed)?.is_none() {
                break;
            }
        }
        if self.queue.is_empty() && !self.exhausted() {
            self.queue.push(Entry {
                bytes: vec![0u8; 4],
                found_pass: None,
                champion_of: 0,
                trimmed: false,
                det_done: false,
            });
        }
        'outer: while !self.exhausted() && !self.queue.is_empty() {
            let n = self.queue.len();
            for i in 0..n {
                if self.exhausted() {
                    break 'outer;
                }
                let favored = self.queue[i].champion_of > 0;
                if !favored && self.rng.gen::<f64>() >= NON_FAVORED_PICK {
                    continue;
                }
                if self.opts.trimming && !self.queue[i].trimmed {
                    self.trim_entry(i)?;
                }
                if self.opts.deterministic && !self.queue[i].det_done {
                    self.queue[i].det_done = true;
                    let parent = self.queue[i].bytes.clone();
                    for k in 0..det::stage_len(parent.len()) {
                        let child = det::child(&parent, k).expect("index below stage length");
                        if self.exec(child, ExecKind::Child)?.is_none() {
                            break 'outer;
                        }
                    }
                }
                let recent = self.queue[i].found_pass.is_some_and(|p| p + 1 >= self.pass);
                let energy = self.opts.havoc_energy * if recent { 2 } else { 1 };
                let parent = self.queue[i].bytes.clone();
                for _ in 0..energy {
                    let partner = if self.queue.len() > 1 {
                        let mut j = self.rng.gen_range(0..self.queue.len() - 1);
                        if j >= i {
                            j += 1;
                        }
                        Some(j)
                    } else {
                        None
                    };
                    let child = havoc(&parent, partner.map(|j| self.queue[j].bytes.as_slice()), self.opts.max_len, &mut self.rng);
                    if self.exec(child, ExecKind::Child)?.is_none() {
                        break 'outer;
                    }
                }
            }
            self.pass += 1;
        }
        Ok(WorkerResult {
            execs: self.execs,
            first_fault: self.first_fault,
            faults: self.faults,
            map: self.h.monitor.map.clone(),
            samples: self.samples,
            crashes: self.crashes,
            queue_len: self.queue.len(),
            champions: self.champs.len(),
            replacements: self.replacements,
            stats: self.stats,
        })
    }
}

/// Applies the option's dependency selection to `config`.
pub fn campaign_config(design: &Design, config: &HarnessConfig, opts: &CampaignOptions) -> Result<HarnessConfig, CampaignError> {
    let mut cfg = config.clone();
    if let Some((analysis, level)) = opts.selection {
        let selected = match depgraph::analyze(design, &config.properties, analysis, level) {
            Ok(s) => s.selected,
            Err(DepError::NoReachableSignals) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        cfg = cfg.with_tracked(selected);
    }
    Ok(cfg)
}

/// Runs a campaign. With `out`, crash artifacts go to
/// `out/crashes/<design>/<n>.bin`, per-update stats to `out/stats.jsonl`
/// and the report to `out/report.json`.
pub fn run_campaign(design: Arc<Design>, config: &HarnessConfig, opts: &CampaignOptions, out: Option<&Path>) -> Result<CampaignReport, CampaignError> {
    if opts.workers == 0 {
        return Err(CampaignError::Options("workers must be at least 1".into()));
    }
    let cfg = Arc::new(campaign_config(&design, config, opts)?);
    let deadline = opts.time_budget.map(|d| Instant::now() + d);
    let n = opts.workers as u64;
    let make = |w: usize| -> Result<Worker<'_>, CampaignError> {
        let budget = opts.exec_budget / n + u64::from((w as u64) < opts.exec_budget % n);
        Ok(Worker {
            id: w,
            h: Harness::new(design.clone(), cfg.clone(), opts.mode)?.with_round_memo(),
            opts,
            rng: ChaCha8Rng::seed_from_u64(worker_seed(opts.seed, w as u64)),
            queue: Vec::new(),
            champs: Champions::new(opts.fitness),
            execs: 0,
            budget,
            deadline,
            stopped: false,
            pass: 0,
            first_fault: BTreeMap::new(),
            faults: 0,
            crashes: Vec::new(),
            crash_count: BTreeMap::new(),
            samples: Vec::new(),
            replacements: 0,
            stats: Vec::new(),
            values: Vec::new(),
        })
    };
    let results: Vec<WorkerResult> = if opts.workers == 1 {
        vec![make(0)?.run()?]
    } else {
        let workers = (0..opts.workers).map(make).collect::<Result<Vec<_>, _>>()?;
        std::thread::scope(|s| {
            let handles: Vec<_> = workers.into_iter().map(|w| s.spawn(move || w.run())).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker thread panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?
    };

    let mut map = CoverageMap::new();
    let mut first: BTreeMap<String, Option<u64>> = cfg.properties.iter().map(|&i| (design.assertions[i].name.clone(), None)).collect();
    let mut report_samples = Vec::new();
    let mut stats = Vec::new();
    let mut seen = BTreeSet::new();
    let mut crash_files: Vec<(String, Vec<u8>)> = Vec::new();
    let (mut execs, mut faults, mut queue_len, mut champions, mut replacements) = (0, 0, 0, 0, 0);
    for (w, r) in results.into_iter().enumerate() {
        execs += r.execs;
        faults += r.faults;
        queue_len += r.queue_len;
        champions = champions.max(r.champions);
        replacements += r.replacements;
        map.merge(&r.map);
        for (p, k) in r.first_fault {
            // Position in a round-robin interleaving of the workers.
            let global = (k - 1) * n + w as u64 + 1;
            let slot = first.entry(p).or_insert(None);
            *slot = Some(slot.map_or(global, |g: u64| g.min(global)));
        }
        report_samples.extend(r.samples);
        stats.extend(r.stats);
        for (p, bytes) in r.crashes {
            if seen.insert((p.clone(), bytes.clone())) {
                crash_files.push((p, bytes));
            }
        }
    }
    let mut crashes = Vec::new();
    if let Some(dir) = out {
        let crash_dir: PathBuf = dir.join("crashes").join(&design.name);
        std::fs::create_dir_all(&crash_dir)?;
        for (k, (_, bytes)) in crash_files.iter().enumerate() {
            let p = crash_dir.join(format!("{k}.bin"));
            std::fs::write(&p, bytes)?;
        }
        let mut text = stats.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        std::fs::write(dir.join("stats.jsonl"), text)?;
    }
    for k in 0..crash_files.len() {
        crashes.push(format!("crashes/{}/{k}.bin", design.name));
    }
    let outcome = if first.values().any(Option::is_some) {
        CampaignOutcome::FaultFound
    } else {
        CampaignOutcome::BudgetExhausted
    };
    let report = CampaignReport {
        design: design.name.clone(),
        seed: opts.seed,
        options: opts.clone(),
        tracked: cfg.tracked.iter().map(|&(s, w)| (design.signals[s.index()].name.clone(), w)).collect(),
        warnings: cfg.warnings.clone(),
        execs_total: execs,
        first_fault_execs: first,
        faults_total: faults,
        buckets_populated: map.virgin_count(),
        coverage_samples: report_samples,
        queue_len,
        champions,
        champion_replacements: replacements,
        crashes,
        outcome,
    };
    if let Some(dir) = out {
        std::fs::write(dir.join("report.json"), report.to_json())?;
    }
    Ok(report)
}

/// Raw crash inputs in artifact order, for callers that want the bytes.
pub fn read_crashes(dir: &Path, design: &str) -> std::io::Result<Vec<Vec<u8>>> {
    let crash_dir = dir.join("crashes").join(design);
    let mut out = Vec::new();
    for k in 0.. {
        let p = crash_dir.join(format!("{k}.bin"));
        if !p.exists() {
            break;
        }
        out.push(std::fs::read(p)?);
    }
    Ok(out)
}
