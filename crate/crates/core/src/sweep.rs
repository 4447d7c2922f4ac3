//! Sweep orchestration and export.
//!
//! Every point of a sweep replicates with the same master seed, so run `i`
//! of every point and every policy uses `derive_seed(seed, i)`: comparisons
//! between policies are paired. Points run one after another; replications
//! within a point run on the rayon pool and are aggregated in index order.

use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoi::{tune_threshold, AoiConfig, PolicyKind, Threshold};
use crate::error::SimError;
use crate::event::{EventConfig, EventPolicy};
use crate::report::{round_sig9, Cell, MetricsReport, Table, SCHEMA_VERSION};
use crate::sim::{derive_seed, replicate, AggregateReport, ScenarioSpec, SimConfig};
use crate::task::{QTable, Scheduler, TaskConfig};

pub const AOI_COLUMNS: [&str; 6] = ["p", "policy", "AAoI", "PAoI", "ci_low", "ci_high"];
pub const EVENT_COLUMNS: [&str; 8] = [
    "density",
    "policy",
    "detect_prob",
    "mean_latency_ms",
    "mttf10_s",
    "mttf25_s",
    "mttf50_s",
    "overhead_bits",
];
pub const EVENT_RATIO_COLUMNS: [&str; 5] = ["density", "detect_ratio", "latency_reduction", "mttf10_ratio", "mttf50_ratio"];
pub const TASK_COLUMNS: [&str; 4] = ["scheduler", "avg_response_ms", "energy_E0_units", "mttf_ms"];

/// Parses `start:end:step` (inclusive) or a comma-separated list.
/// Grid values are rounded to 9 significant digits, so `0.1:1.0:0.1`
/// yields exactly `0.3` rather than `0.30000000000000004`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let t = text.trim();
    if t.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("bad number `{s}` in `{text}`: {e}"));
    let parts: Vec<&str> = t.split(':').collect();
    match parts[..] {
        [start, end, step] => {
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if !(step > 0.0) || !start.is_finite() || !end.is_finite() {
                return Err(format!("range `{text}` needs finite bounds and a positive step"));
            }
            if end < start {
                return Ok(Vec::new());
            }
            let n = ((end - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| round_sig9(start + i as f64 * step)).collect())
        }
        [_] => t.split(',').map(num).collect(),
        _ => Err(format!("expected start:end:step or a list, got `{text}`")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoiSweepPlan {
    pub base: AoiConfig,
    pub ps: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub sim: SimConfig,
    /// Threshold candidates for the tuned threshold policy.
    pub grid: Vec<Threshold>,
    pub tune_reps: u32,
    pub tune_horizon: u64,
}

impl AoiSweepPlan {
    pub fn new(base: AoiConfig, ps: Vec<f64>, sim: SimConfig) -> Self {
        Self {
            base,
            ps,
            policies: PolicyKind::ALL.to_vec(),
            grid: (0..=90).map(Threshold).collect(),
            tune_reps: 3,
            tune_horizon: sim.horizon,
            sim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiPoint {
    pub p: f64,
    pub policy: PolicyKind,
    /// Tuned threshold, for the threshold policy.
    pub threshold: Option<Threshold>,
    pub aggregate: AggregateReport,
}

pub fn aoi_sweep(plan: &AoiSweepPlan) -> Result<Vec<AoiPoint>, SimError> {
    plan.sim.validate()?;
    let mut out = Vec::new();
    for &p in &plan.ps {
        for &policy in &plan.policies {
            let mut cfg = AoiConfig {
                p,
                policy,
                ..plan.base.clone()
            };
            cfg.validate()?;
            let threshold = if policy == PolicyKind::Threshold {
                let t = tune_threshold(&cfg, &plan.grid, plan.tune_reps, plan.tune_horizon, plan.sim.seed)?.best;
                cfg.threshold = t;
                Some(t)
            } else {
                None
            };
            let aggregate = replicate(&plan.sim, &ScenarioSpec::Aoi(cfg))?;
            out.push(AoiPoint {
                p,
                policy,
                threshold,
                aggregate,
            });
        }
    }
    Ok(out)
}

pub fn aoi_table(points: &[AoiPoint]) -> Table {
    let mut t = Table::new(&AOI_COLUMNS);
    for pt in points {
        let aaoi = pt.aggregate.get("aaoi").expect("aoi runs report aaoi");
        t.push(vec![
            Cell::num(pt.p),
            Cell::text(pt.policy.as_str()),
            Cell::num(aaoi.value),
            Cell::num(pt.aggregate.mean("paoi")),
            Cell::num(aaoi.ci_low),
            Cell::num(aaoi.ci_high),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSweepPlan {
    pub base: EventConfig,
    pub densities: Vec<f64>,
    pub policies: Vec<EventPolicy>,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPoint {
    pub density: f64,
    pub policy: EventPolicy,
    pub aggregate: AggregateReport,
}

pub fn event_sweep(plan: &EventSweepPlan) -> Result<Vec<EventPoint>, SimError> {
    plan.sim.validate()?;
    let mut out = Vec::new();
    for &density in &plan.densities {
        for &policy in &plan.policies {
            let cfg = EventConfig {
                density,
                policy,
                ..plan.base.clone()
            };
            let aggregate = replicate(&plan.sim, &ScenarioSpec::Event(cfg))?;
            out.push(EventPoint {
                density,
                policy,
                aggregate,
            });
        }
    }
    Ok(out)
}

pub fn event_table(points: &[EventPoint]) -> Table {
    let mut t = Table::new(&EVENT_COLUMNS);
    for pt in points {
        let mut row = vec![Cell::num(pt.density), Cell::text(pt.policy.as_str())];
        row.extend(EVENT_COLUMNS[2..].iter().map(|m| Cell::num(pt.aggregate.mean(m))));
        t.push(row);
    }
    t
}

/// Context over blind, per density where both ran: detection probability
/// ratio, relative latency reduction and MTTF ratios.
pub fn event_ratio_table(points: &[EventPoint]) -> Table {
    let mut t = Table::new(&EVENT_RATIO_COLUMNS);
    for ctx in points.iter().filter(|p| p.policy == EventPolicy::Context) {
        let Some(blind) = points
            .iter()
            .find(|p| p.policy == EventPolicy::Blind && p.density == ctx.density)
        else {
            continue;
        };
        let (c, b) = (&ctx.aggregate, &blind.aggregate);
        t.push(vec![
            Cell::num(ctx.density),
            Cell::num(c.mean("detect_prob") / b.mean("detect_prob")),
            Cell::num(1.0 - c.mean("mean_latency_ms") / b.mean("mean_latency_ms")),
            Cell::num(c.mean("mttf10_s") / b.mean("mttf10_s")),
            Cell::num(c.mean("mttf50_s") / b.mean("mttf50_s")),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSweepPlan {
    pub base: TaskConfig,
    pub schedulers: Vec<Scheduler>,
    pub sim: SimConfig,
    /// Table for the task-aware scheduler; trained from `base` when absent.
    pub table: Option<QTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPoint {
    pub scheduler: Scheduler,
    pub aggregate: AggregateReport,
}

pub fn task_sweep(plan: &TaskSweepPlan) -> Result<Vec<TaskPoint>, SimError> {
    plan.sim.validate()?;
    let mut out = Vec::new();
    for &scheduler in &plan.schedulers {
        let cfg = TaskConfig {
            scheduler,
            ..plan.base.clone()
        };
        let aggregate = match (&plan.table, scheduler) {
            (Some(table), Scheduler::TaskAware) => {
                cfg.validate()?;
                let runs = (0..plan.sim.replications as u64)
                    .into_par_iter()
                    .map(|i| crate::task::run_with_table(&cfg, table, derive_seed(plan.sim.seed, i), plan.sim.horizon))
                    .collect::<Result<Vec<MetricsReport>, _>>()?;
                AggregateReport::from_runs("task", plan.sim.seed, runs)
            }
            _ => replicate(&plan.sim, &ScenarioSpec::Task(cfg))?,
        };
        out.push(TaskPoint { scheduler, aggregate });
    }
    Ok(out)
}

pub fn task_table(points: &[TaskPoint]) -> Table {
    let mut t = Table::new(&TASK_COLUMNS);
    for pt in points {
        let mut row = vec![Cell::text(pt.scheduler.as_str())];
        row.extend(TASK_COLUMNS[1..].iter().map(|m| Cell::num(pt.aggregate.mean(m))));
        t.push(row);
    }
    t
}

/// JSON companion of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepExport<P> {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub horizon: u64,
    pub replications: u32,
    pub table: Table,
    pub points: Vec<P>,
}

impl<P: Serialize> SweepExport<P> {
    pub fn new(command: &str, sim: &SimConfig, table: Table, points: Vec<P>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed: sim.seed,
            horizon: sim.horizon,
            replications: sim.replications,
            table,
            points,
        }
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path, stem: &str) -> io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        self.table.write_csv(&csv)?;
        std::fs::write(&json, serde_json::to_string_pretty(self).expect("export serializes"))?;
        Ok((csv, json))
    }
}
