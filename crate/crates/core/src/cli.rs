// SPDX-License-Identifier: Apache-2.0
//! Command-line front end. `run` takes argv and two writers so the whole
//! surface is testable in-process; the `vgf` binary is a thin wrapper.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{find_benchmark, BenchError};
use crate::coverage::Compression;
use crate::depgraph::{self, Analysis, DepError, ThresholdLevel};
use crate::fuzzer::{run_campaign, CampaignError, CampaignOptions, CampaignOutcome, Fitness, ForkServer, ProtocolError};
use crate::harness::{default_config, format_trace, load_config, replay, ConfigError, Harness, HarnessConfig, HarnessError, Outcome};
use crate::hdl::{parse_design, Design, ParseError, SourceText};
use crate::sim::{SimError, SimMode};

pub const EXIT_FAULT: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_FAULT: i32 = 2;

/// Seed fallback when `--seed` is absent.
pub const SEED_ENV: &str = "VGF_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dep(#[from] DepError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Parser)]
#[command(name = "vgf", version, about = "Value-guided fuzzing of hardware designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a fuzzing campaign.
    Fuzz(FuzzArgs),
    /// Re-run a saved input and print its verdict and change trace.
    Replay(ReplayArgs),
    /// Print the dependency-analysis signal selection.
    Analyze(AnalyzeArgs),
    /// Campaign matrix over analyses, thresholds and seeds as CSV.
    Sweep(SweepArgs),
    /// Serve framed run requests on stdin/stdout.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Clone)]
struct Target {
    /// Bundled benchmark name.
    #[arg(long, conflicts_with = "design")]
    bench: Option<String>,
    /// Design source file.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Harness configuration; defaults to `harness.cfg` next to the design.
    #[arg(long, requires = "design")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FuzzArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value = "default")]
    fitness: Fitness,
    #[arg(long)]
    analysis: Option<Analysis>,
    #[arg(long)]
    tau: Option<ThresholdLevel>,
    #[arg(long, default_value = "accurate")]
    mode: SimMode,
    #[arg(long, overrides_with = "no_trim")]
    trim: bool,
    #[arg(long)]
    no_trim: bool,
    #[arg(long, overrides_with = "no_det")]
    det: bool,
    #[arg(long)]
    no_det: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    execs: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    stop_on_fault: bool,
    /// Overrides the configured compression function.
    #[arg(long)]
    compression: Option<Compression>,
    /// Output directory for report.json, stats.jsonl and crashes/.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Input file, typically `crashes/<design>/<n>.bin`.
    input: PathBuf,
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value = "accurate")]
    mode: SimMode,
    /// Print only the verdict line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value = "dcfa")]
    analysis: Analysis,
    #[arg(long, default_value = "max")]
    tau: ThresholdLevel,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    target: Target,
    /// Comma-separated analyses.
    #[arg(long, default_value = "dfa,cfa,dcfa", value_delimiter = ',')]
    analysis: Vec<Analysis>,
    /// Comma-separated thresholds.
    #[arg(long, default_value = "max,max2,max4,max8,min", value_delimiter = ',')]
    tau: Vec<ThresholdLevel>,
    /// Comma-separated seeds.
    #[arg(long, default_value = "1,2,3,4,5", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    execs: u64,
    #[arg(long, default_value = "default")]
    fitness: Fitness,
    #[arg(long, default_value = "accurate")]
    mode: SimMode,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    compression: Option<Compression>,
    #[arg(long)]
    trim: bool,
    #[arg(long)]
    det: bool,
    /// CSV destination; stdout if absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    target: Target,
    #[arg(long, default_value = "accurate")]
    mode: SimMode,
    #[arg(long)]
    crash_dir: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let res = match cli.command {
        Command::Fuzz(a) => cmd_fuzz(a, out),
        Command::Replay(a) => cmd_replay(a, out),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Serve(a) => cmd_serve(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Resolves `--bench` or `--design`/`--config`, falling back to `hint` as
/// a benchmark name when neither is given.
fn load_target(t: &Target, hint: Option<&str>) -> Result<(Arc<Design>, HarnessConfig), CliError> {
    if let Some(path) = &t.design {
        let design = parse_design(&SourceText::new(&read(path)?, path.display().to_string()))?;
        let cfg_path = t.config.clone().or_else(|| {
            let p = path.with_file_name("harness.cfg");
            p.exists().then_some(p)
        });
        let config = match cfg_path {
            Some(p) => load_config(&read(&p)?, &design)?,
            None => default_config(&design),
        };
        return Ok((Arc::new(design), config));
    }
    let name = t
        .bench
        .as_deref()
        .or(hint)
        .ok_or_else(|| CliError::Usage("one of --bench or --design is required".into()))?;
    let b = find_benchmark(name).ok_or_else(|| CliError::Usage(format!("unknown benchmark '{name}'")))?;
    let design = b.design()?;
    let config = b.config(&design)?;
    Ok((Arc::new(design), config))
}

fn seed_or_env(seed: Option<u64>) -> Result<u64, CliError> {
    match seed {
        Some(s) => Ok(s),
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v} is not a seed"))),
            Err(_) => Ok(0),
        },
    }
}

fn cmd_fuzz(a: FuzzArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (design, mut config) = load_target(&a.target, None)?;
    if let Some(c) = a.compression {
        config.compression.kind = c;
    }
    let mut opts = CampaignOptions {
        fitness: a.fitness,
        mode: a.mode,
        selection: selection(a.analysis, a.tau),
        trimming: a.trim && !a.no_trim,
        deterministic: a.det && !a.no_det,
        seed: seed_or_env(a.seed)?,
        exec_budget: a.execs,
        workers: a.workers,
        stop_on_fault: a.stop_on_fault,
        ..CampaignOptions::default()
    };
    if let Some(m) = a.max_len {
        opts.max_len = m;
    }
    std::fs::create_dir_all(&a.out)?;
    let report = run_campaign(design, &config, &opts, Some(&a.out))?;
    match report.execs_to_fault() {
        Some(n) => writeln!(out, "fault after {n} execs ({} total)", report.execs_total)?,
        None => writeln!(out, "no fault in {} execs", report.execs_total)?,
    }
    writeln!(out, "report: {}", a.out.join("report.json").display())?;
    Ok(match report.outcome {
        CampaignOutcome::FaultFound => EXIT_FAULT,
        CampaignOutcome::BudgetExhausted => EXIT_NO_FAULT,
    })
}

fn selection(analysis: Option<Analysis>, tau: Option<ThresholdLevel>) -> Option<(Analysis, ThresholdLevel)> {
    match (analysis, tau) {
        (None, None) => None,
        (a, t) => Some((a.unwrap_or(Analysis::Dcfa), t.unwrap_or(ThresholdLevel::Max))),
    }
}

fn cmd_replay(a: ReplayArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if !a.input.is_file() {
        return Err(CliError::Usage(format!("{}: no such file", a.input.display())));
    }
    // crashes/<design>/<n>.bin names its benchmark.
    let hint = a.input.parent().and_then(|p| p.file_name()).and_then(|n| n.to_str()).map(str::to_owned);
    let (design, config) = load_target(&a.target, hint.as_deref())?;
    let (verdict, trace) = replay(design.clone(), Arc::new(config), a.mode, &a.input)?;
    if !a.quiet {
        write!(out, "{}", format_trace(&design, &trace))?;
    }
    Ok(match verdict.outcome {
        Outcome::Fault { property, time, .. } => {
            writeln!(out, "fault {property} at t={time} after {} cycles", verdict.sim_cycles)?;
            EXIT_FAULT
        }
        Outcome::Clean => {
            writeln!(out, "clean after {} cycles", verdict.sim_cycles)?;
            EXIT_NO_FAULT
        }
    })
}

/// Selection size for one analysis and level; 0 when no signal reaches a
/// property.
fn selected(design: &Design, config: &HarnessConfig, analysis: Analysis, tau: ThresholdLevel) -> Result<Vec<(String, u32, u8)>, CliError> {
    match depgraph::analyze(design, &config.properties, analysis, tau) {
        Ok(sel) => Ok(sel
            .selected
            .iter()
            .map(|&(s, w)| (design.signals[s.index()].name.clone(), sel.pds.get(s).unwrap_or(0), w))
            .collect()),
        Err(DepError::NoReachableSignals) => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

fn cmd_analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (design, config) = load_target(&a.target, None)?;
    let sel = selected(&design, &config, a.analysis, a.tau)?;
    writeln!(out, "# {} {} {}: {} signal(s)", design.name, a.analysis, a.tau, sel.len())?;
    for (name, pd, w) in sel {
        writeln!(out, "{name}\tpd={pd}\tweight={w}")?;
    }
    Ok(0)
}

fn median(v: &mut [u64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    })
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (design, mut config) = load_target(&a.target, None)?;
    if let Some(c) = a.compression {
        config.compression.kind = c;
    }
    let mut csv = String::from("bench,analysis,tau,seed,execs_to_fault,selected_count\n");
    let mut cells: BTreeMap<(Analysis, ThresholdLevel), Vec<u64>> = BTreeMap::new();
    for &analysis in &a.analysis {
        for &tau in &a.tau {
            let count = selected(&design, &config, analysis, tau)?.len();
            let found = cells.entry((analysis, tau)).or_default();
            for &seed in &a.seeds {
                // An empty selection is reported as not applicable rather
                // than run as a blackbox campaign.
                let e2f = if count == 0 {
                    None
                } else {
                    let mut opts = CampaignOptions {
                        fitness: a.fitness,
                        mode: a.mode,
                        selection: Some((analysis, tau)),
                        trimming: a.trim,
                        deterministic: a.det,
                        seed,
                        exec_budget: a.execs,
                        stop_on_fault: true,
                        ..CampaignOptions::default()
                    };
                    if let Some(m) = a.max_len {
                        opts.max_len = m;
                    }
                    run_campaign(design.clone(), &config, &opts, None)?.execs_to_fault()
                };
                if let Some(n) = e2f {
                    found.push(n);
                }
                let cell = e2f.map_or_else(|| "NA".to_string(), |n| n.to_string());
                csv.push_str(&format!("{},{analysis},{tau},{seed},{cell},{count}\n", design.name));
            }
        }
    }
    for ((analysis, tau), v) in cells.iter_mut() {
        let m = median(v).map_or_else(|| "NA".to_string(), |m| format!("{m}"));
        writeln!(err, "median {} {analysis} {tau}: {m} ({} of {} found)", design.name, v.len(), a.seeds.len())?;
    }
    match &a.csv {
        Some(p) => std::fs::write(p, csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(0)
}

fn cmd_serve(a: ServeArgs) -> Result<i32, CliError> {
    let (design, config) = load_target(&a.target, None)?;
    let h = Harness::new(design, Arc::new(config), a.mode)?;
    let mut server = ForkServer::new(h);
    if let Some(d) = a.crash_dir {
        server = server.with_crash_dir(d);
    }
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    server.serve(stdin.lock(), stdout.lock())?;
    Ok(0)
}
