//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed check or I/O error, 2 usage or
//! configuration error, 3 numerical failure (the run seed is printed).

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::aoi::{self, AoiConfig, ChainOracle, PolicyKind, Threshold};
use crate::config::{env_seed, parse_seed, ScenarioFile};
use crate::error::{ConfigError, SimError};
use crate::event::{EventConfig, EventPolicy};
use crate::protocol::golden;
use crate::sim::SimConfig;
use crate::sweep::{self, AoiSweepPlan, EventSweepPlan, SweepExport, TaskSweepPlan};
use crate::task::{self, QTable, Scheduler, TaskConfig};

#[derive(Debug, Parser)]
#[command(name = "contextsim", version, about = "Slotted-time simulator for context-aware IoT protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// AAoI of each scheduling policy over a grid of generation probabilities.
    AoiSweep(AoiSweepArgs),
    /// Blind vs context-aware event detection over a density sweep.
    EventSim(EventSimArgs),
    /// Task-aware vs baseline polling for remote state monitoring.
    TaskSim(TaskSimArgs),
    /// Checks golden protocol frames bit for bit.
    ProtoCheck {
        #[arg(long)]
        fixtures: PathBuf,
    },
    /// Compares the simulator against exact reference values.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file; its `[sim]` table and scenario block supply defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (decimal or 0x hex). Overrides CONTEXTSIM_SEED and the file.
    #[arg(long, value_parser = seed_arg)]
    pub seed: Option<u64>,
    /// Replications per point.
    #[arg(long)]
    pub reps: Option<u32>,
    /// Slots per run.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Directory for the CSV and JSON output.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AoiSweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// `start:end:step` or a comma-separated list.
    #[arg(long, default_value = "0.1:1.0:0.1")]
    pub p: String,
    /// Devices.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Channels.
    #[arg(long = "F")]
    pub f: Option<usize>,
    /// Erasure probability.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated subset of optimal, autonomous, threshold.
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<PolicyKind>,
    /// Largest threshold tried when tuning.
    #[arg(long, default_value_t = 90)]
    pub max_threshold: u64,
    /// Replications per threshold when tuning.
    #[arg(long, default_value_t = 3)]
    pub tune_reps: u32,
}

#[derive(Debug, Clone, Args)]
pub struct EventSimArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Device densities, `start:end:step` or a comma-separated list.
    #[arg(long, default_value = "50:250:50")]
    pub density: String,
    /// Comma-separated subset of blind, context.
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<EventPolicy>,
    /// Event arrival rate per slot.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Event radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Sensing radius.
    #[arg(long)]
    pub rs: Option<f64>,
    /// `on` or `off`.
    #[arg(long, value_parser = on_off)]
    pub qlearn: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct TaskSimArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated subset of taskaware, baseline.
    #[arg(long, value_delimiter = ',')]
    pub scheduler: Vec<Scheduler>,
    /// Devices.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Query probability per slot.
    #[arg(long)]
    pub q: Option<f64>,
    /// Training episodes for the task-aware agent.
    #[arg(long)]
    pub train_episodes: Option<u32>,
    /// Use this Q-table instead of training.
    #[arg(long)]
    pub load_qtable: Option<PathBuf>,
    /// Write the Q-table used by the task-aware scheduler here.
    #[arg(long)]
    pub save_qtable: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Single-device threshold AAoI: Markov chain vs simulation.
    AoiChain(ChainArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Devices; the chain covers exactly one.
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    /// Age threshold.
    #[arg(long)]
    pub threshold: Threshold,
    /// Generation probability.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Erasure probability.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Slots simulated for the comparison.
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: u64,
    #[arg(long, value_parser = seed_arg)]
    pub seed: Option<u64>,
}

fn seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

fn on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Check(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => CliError::Config(c),
            other => CliError::Sim(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Sim(SimError::Numerical { .. }) => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Sim(SimError::Numerical { seed, .. }) = &e {
                eprintln!("run seed: {seed}");
            }
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::AoiSweep(a) => aoi_sweep(a, out),
        Command::EventSim(a) => event_sim(a, out),
        Command::TaskSim(a) => task_sim(a, out),
        Command::ProtoCheck { fixtures } => proto_check(&fixtures, out),
        Command::Oracle(OracleCommand::AoiChain(a)) => aoi_chain(a, out),
    }
}

/// Scenario file (or defaults) with the run flags applied on top.
/// Seed precedence: `--seed`, then `CONTEXTSIM_SEED`, then the file.
fn load(run: &RunArgs) -> Result<ScenarioFile, CliError> {
    let mut file = match &run.config {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::default(),
    };
    file.apply_env()?;
    if let Some(s) = run.seed {
        file.sim.seed = s;
    }
    if let Some(r) = run.reps {
        file.sim.replications = r;
    }
    if let Some(h) = run.horizon {
        file.sim.horizon = h;
    }
    file.sim.validate()?;
    Ok(file)
}

fn grid(text: &str) -> Result<Vec<f64>, CliError> {
    sweep::parse_grid(text).map_err(CliError::Usage)
}

fn emit<P: serde::Serialize>(
    out: &mut dyn Write,
    dir: &Path,
    stem: &str,
    export: &SweepExport<P>,
) -> Result<(), CliError> {
    let (csv, json) = export.write(dir, stem).map_err(io_err(dir))?;
    let w = |r: io::Result<()>| r.map_err(io_err(Path::new("<stdout>")));
    w(write!(out, "{}", export.table.render_text()))?;
    w(writeln!(out, "wrote {} and {}", csv.display(), json.display()))
}

fn aoi_sweep(a: AoiSweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load(&a.run)?;
    let mut base = file.aoi.clone().unwrap_or_default();
    if let Some(n) = a.n {
        base.num_devices = n;
    }
    if let Some(f) = a.f {
        base.num_channels = f;
    }
    if let Some(e) = a.eps {
        base.epsilon = e;
    }
    base.validate()?;
    let mut plan = AoiSweepPlan::new(base, grid(&a.p)?, file.sim.clone());
    if !a.policy.is_empty() {
        plan.policies = a.policy.clone();
    }
    plan.grid = (0..=a.max_threshold).map(Threshold).collect();
    plan.tune_reps = a.tune_reps.max(1);
    let points = sweep::aoi_sweep(&plan)?;
    let export = SweepExport::new("aoi-sweep", &file.sim, sweep::aoi_table(&points), points);
    emit(out, &a.run.out, "aoi_sweep", &export)
}

fn event_sim(a: EventSimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load(&a.run)?;
    let mut base: EventConfig = file.event.clone().unwrap_or_default();
    if let Some(v) = a.lambda {
        base.lambda = v;
    }
    if let Some(v) = a.radius {
        base.radius = v;
    }
    if let Some(v) = a.rs {
        base.rs = v;
    }
    if let Some(v) = a.qlearn {
        base.qlearn = v;
    }
    base.validate()?;
    let policies = if a.policy.is_empty() {
        vec![EventPolicy::Blind, EventPolicy::Context]
    } else {
        a.policy.clone()
    };
    let plan = EventSweepPlan {
        base,
        densities: grid(&a.density)?,
        policies,
        sim: file.sim.clone(),
    };
    let points = sweep::event_sweep(&plan)?;
    let ratios = sweep::event_ratio_table(&points);
    let export = SweepExport::new("event-sim", &file.sim, sweep::event_table(&points), points);
    emit(out, &a.run.out, "event_sim", &export)?;
    if !ratios.rows.is_empty() {
        let path = a.run.out.join("event_ratios.csv");
        ratios.write_csv(&path).map_err(io_err(&path))?;
        write!(out, "context / blind\n{}", ratios.render_text()).map_err(io_err(Path::new("<stdout>")))?;
    }
    Ok(())
}

fn task_sim(a: TaskSimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load(&a.run)?;
    let mut base: TaskConfig = file.task.clone().unwrap_or_default();
    if let Some(n) = a.n {
        base.num_devices = n;
    }
    if let Some(q) = a.q {
        base.q = q;
    }
    if let Some(e) = a.train_episodes {
        base.train_episodes = e;
    }
    base.validate()?;
    let table = match &a.load_qtable {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            Some(QTable::from_text(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    let schedulers = if a.scheduler.is_empty() {
        vec![Scheduler::TaskAware, Scheduler::Baseline]
    } else {
        a.scheduler.clone()
    };
    if let Some(path) = &a.save_qtable {
        let t = match &table {
            Some(t) => t.clone(),
            None => (*task::trained_table(&base)?).clone(),
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        std::fs::write(path, t.to_text()).map_err(io_err(path))?;
    }
    let plan = TaskSweepPlan {
        base,
        schedulers,
        sim: file.sim.clone(),
        table,
    };
    let points = sweep::task_sweep(&plan)?;
    let export = SweepExport::new("task-sim", &file.sim, sweep::task_table(&points), points);
    emit(out, &a.run.out, "task_sim", &export)
}

fn proto_check(dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let results = golden::check_dir(dir).map_err(io_err(dir))?;
    if results.is_empty() {
        return Err(CliError::Check(format!("no *.json fixtures in {}", dir.display())));
    }
    let w = |r: io::Result<()>| r.map_err(io_err(Path::new("<stdout>")));
    let mut failed = 0;
    for r in &results {
        match &r.mismatch {
            None => w(writeln!(out, "ok    {}", r.name))?,
            Some(m) => {
                failed += 1;
                w(writeln!(out, "FAIL  {} ({}): {m}", r.name, r.path.display()))?;
            }
        }
    }
    w(writeln!(out, "{} fixtures, {failed} failed", results.len()))?;
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} golden frame(s) do not match")));
    }
    Ok(())
}

fn aoi_chain(a: ChainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.n != 1 {
        return Err(CliError::Usage("the chain oracle covers a single device (--N 1)".into()));
    }
    if a.threshold == Threshold::NEVER {
        return Err(CliError::Usage("the chain oracle needs a finite threshold".into()));
    }
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(SimConfig::default().seed),
    };
    let cfg = AoiConfig {
        policy: PolicyKind::Threshold,
        p: a.p,
        num_devices: 1,
        num_channels: 1,
        epsilon: a.eps,
        threshold: a.threshold,
        ..AoiConfig::default()
    };
    cfg.validate()?;
    if a.p * (1.0 - a.eps) <= 0.0 {
        return Err(CliError::Usage("p (1 - eps) must be positive, or no update is ever delivered".into()));
    }
    let exact = ChainOracle::new(a.p, a.eps, a.threshold.0).solve();
    let simulated = aoi::simulate(&cfg, seed, a.horizon)?.stats().aaoi().map_err(SimError::from)?;
    let rel = (simulated - exact.aaoi).abs() / exact.aaoi;
    writeln!(
        out,
        "threshold {} p {} eps {}: exact AAoI {:.6}, simulated {:.6} ({} slots, seed {seed}), relative error {:.4}%",
        a.threshold.0,
        a.p,
        a.eps,
        exact.aaoi,
        simulated,
        a.horizon,
        rel * 100.0
    )
    .map_err(io_err(Path::new("<stdout>")))
}
