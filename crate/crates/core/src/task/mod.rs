//! Task-aware monitoring of a nonlinear process.
//!
//! `N` devices each observe one component of the process. The edge node
//! tracks the state with a cubature Kalman filter, answers queries from
//! external servers, and decides every slot whether to poll a device.
//!
//! Timing: a poll issued in slot `t` returns a measurement of `x_{t+1}`,
//! folded into the estimate at the start of slot `t + 1`. The task-aware
//! scheduler answers a query in its arrival slot from the current estimate
//! (1 ms). The poll-on-query baseline polls in the arrival slot `t` and
//! sends its estimate in slot `t + 2`, after the measurement is in (3 ms).
//! By default an answer is scored against the state at query arrival;
//! [`AnswerScoring::Delivery`] scores it against the state in the slot it
//! is sent.

mod agent;
mod ckf;
mod model;

pub use agent::{
    epsilon_greedy, q_update, LearningParams, QTable, QTableError, StateSpace, QTABLE_HEADER,
};
pub use ckf::{sqrt_psd, symmetrize, Ckf, CubatureRule, Estimate, EstimateKind, FilterError};
pub use model::{ObservationModel, ProcessModel};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ConfigError, SimError};
use crate::protocol::{FrameKind, FrameTrace};
use crate::report::{Metric, MetricsReport, Unit};
use crate::sim::{derive_seed, stream_rng, Phase, SimRng, SlotClock, Stream, SLOT_MS};

/// Edge-to-server answer time from the current estimate.
pub const TASK_AWARE_RESPONSE_MS: f64 = 1.0;
/// Edge-to-device, device-to-edge and edge-to-server.
pub const BASELINE_RESPONSE_MS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    #[default]
    TaskAware,
    Baseline,
}

impl Scheduler {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheduler::TaskAware => "taskaware",
            Scheduler::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Scheduler {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "taskaware" | "task-aware" => Ok(Scheduler::TaskAware),
            "baseline" => Ok(Scheduler::Baseline),
            _ => Err(format!("unknown scheduler `{s}`")),
        }
    }
}

/// The characteristic a query asks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryTarget {
    Component(usize),
    /// Mean of all components.
    Mean,
}

impl QueryTarget {
    pub fn value(self, x: &DVector<f64>) -> f64 {
        match self {
            QueryTarget::Component(i) => x[i],
            QueryTarget::Mean => x.mean(),
        }
    }

    /// Variance of the functional under covariance `p`.
    pub fn variance(self, p: &DMatrix<f64>) -> f64 {
        match self {
            QueryTarget::Component(i) => p[(i, i)],
            QueryTarget::Mean => p.sum() / (p.nrows() * p.nrows()) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryMode {
    /// One query with probability `q` every slot.
    #[default]
    Bernoulli,
    /// Two-state Markov-modulated arrivals.
    Bursty,
}

/// Which state an answer is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerScoring {
    /// The state in the slot the query arrived.
    #[default]
    Arrival,
    /// The state in the slot the answer is sent, scored against the edge's
    /// estimate in that slot.
    Delivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurstParams {
    pub q_high: f64,
    pub q_low: f64,
    /// Per-slot switch probabilities between the quiet and busy states.
    pub p_enter: f64,
    pub p_exit: f64,
}

impl Default for BurstParams {
    fn default() -> Self {
        Self {
            q_high: 0.4,
            q_low: 0.005,
            p_enter: 0.01,
            p_exit: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub scheduler: Scheduler,
    #[serde(rename = "N")]
    pub num_devices: usize,
    /// Query probability per slot.
    pub q: f64,
    /// Share of queries asking for the mean of all components.
    pub aggregate_prob: f64,
    pub query_mode: QueryMode,
    pub burst: BurstParams,
    pub scoring: AnswerScoring,
    pub a: f64,
    pub b: f64,
    pub q_proc: f64,
    pub c: f64,
    pub d: f64,
    pub r: f64,
    /// Variance of the initial state and of the filter's initial estimate.
    pub init_var: f64,
    pub rule: CubatureRule,
    /// Sign applied to the prior MSE when the agent does not poll.
    pub reward_sign: f64,
    /// Subtracted from the value of information of every poll.
    pub poll_cost: f64,
    pub train_episodes: u32,
    pub episode_slots: u64,
    pub train_seed: u64,
    /// Leading fraction of an evaluation run left out of the metrics while
    /// the filter locks on.
    pub warmup_fraction: f64,
    pub state: StateSpace,
    pub learning: LearningParams,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            scheduler: Scheduler::TaskAware,
            num_devices: 4,
            q: 0.05,
            aggregate_prob: 0.25,
            query_mode: QueryMode::Bernoulli,
            burst: BurstParams::default(),
            scoring: AnswerScoring::Arrival,
            a: 0.9,
            b: 5.0,
            q_proc: 0.05,
            c: 1.0,
            d: 0.05,
            r: 1.0,
            init_var: 1.0,
            rule: CubatureRule::Cubature,
            reward_sign: -1.0,
            poll_cost: 0.2125,
            train_episodes: 800,
            episode_slots: 2000,
            train_seed: 0x7A5C,
            warmup_fraction: 0.1,
            state: StateSpace::default(),
            learning: LearningParams::default(),
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_devices == 0 || self.num_devices > 8 {
            return Err(ConfigError::invalid("task.N", "need 1 to 8 devices"));
        }
        check_probability("task.q", self.q)?;
        check_probability("task.aggregate_prob", self.aggregate_prob)?;
        for (field, v) in [
            ("task.burst.q_high", self.burst.q_high),
            ("task.burst.q_low", self.burst.q_low),
            ("task.burst.p_enter", self.burst.p_enter),
            ("task.burst.p_exit", self.burst.p_exit),
        ] {
            check_probability(field, v)?;
        }
        for (field, v) in [("task.a", self.a), ("task.b", self.b), ("task.c", self.c), ("task.d", self.d)] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(field, "must be finite"));
            }
        }
        if !(self.q_proc.is_finite() && self.q_proc >= 0.0) {
            return Err(ConfigError::invalid("task.q_proc", "process noise must be finite and >= 0"));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(ConfigError::invalid("task.r", "measurement noise must be finite and > 0"));
        }
        if !(self.init_var.is_finite() && self.init_var >= 0.0) {
            return Err(ConfigError::invalid("task.init_var", "must be finite and >= 0"));
        }
        if self.reward_sign != 1.0 && self.reward_sign != -1.0 {
            return Err(ConfigError::invalid("task.reward_sign", "must be 1 or -1"));
        }
        if !self.poll_cost.is_finite() {
            return Err(ConfigError::invalid("task.poll_cost", "must be finite"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(ConfigError::invalid("task.warmup_fraction", "must lie in [0, 1)"));
        }
        if self.episode_slots == 0 {
            return Err(ConfigError::invalid("task.episode_slots", "episodes need at least one slot"));
        }
        let s = &self.state;
        if s.mse_bins == 0 || s.tsq_bins == 0 || s.tsq_width == 0 || !(s.mse_min > 0.0 && s.mse_max > s.mse_min) {
            return Err(ConfigError::invalid("task.state", "bins must be non-empty with 0 < mse_min < mse_max"));
        }
        let l = &self.learning;
        if !(0.0..=1.0).contains(&l.learning_rate) || !(0.0..=1.0).contains(&l.discount) {
            return Err(ConfigError::invalid("task.learning", "learning_rate and discount must lie in [0, 1]"));
        }
        check_probability("task.learning.epsilon_start", l.epsilon_start)?;
        check_probability("task.learning.epsilon_end", l.epsilon_end)?;
        Ok(())
    }

    pub fn process(&self) -> ProcessModel {
        ProcessModel {
            a: self.a,
            b: self.b,
            q_proc: self.q_proc,
        }
    }

    pub fn observation(&self) -> ObservationModel {
        ObservationModel {
            c: self.c,
            d: self.d,
            r: self.r,
        }
    }

    /// The filter-visible MSE: functional variance averaged over query targets.
    pub fn agent_mse(&self, cov: &DMatrix<f64>) -> f64 {
        let n = self.num_devices as f64;
        (1.0 - self.aggregate_prob) * cov.trace() / n + self.aggregate_prob * QueryTarget::Mean.variance(cov)
    }
}

/// `(g(prior mean) - g(truth))^2`.
pub fn mse_pri(prior: &Estimate, target: QueryTarget, truth: &DVector<f64>) -> f64 {
    (target.value(&prior.mean) - target.value(truth)).powi(2)
}

/// Reduction of the squared query error from prior to posterior.
pub fn pragmatic_voi(prior: &Estimate, posterior: &Estimate, target: QueryTarget, truth: &DVector<f64>) -> f64 {
    mse_pri(prior, target, truth) - mse_pri(posterior, target, truth)
}

/// The baseline polls the queried device, or a uniform one for an aggregate
/// query. Returns the action (0 = no poll, `n` = device `n - 1`).
pub fn schedule_mc_baseline<R: Rng + ?Sized>(query: Option<QueryTarget>, devices: usize, rng: &mut R) -> usize {
    match query {
        None => 0,
        Some(QueryTarget::Component(i)) => i + 1,
        Some(QueryTarget::Mean) => rng.random_range(0..devices) + 1,
    }
}

/// Query arrivals.
#[derive(Debug, Clone)]
pub struct QueryProcess {
    mode: QueryMode,
    q: f64,
    burst: BurstParams,
    busy: bool,
    devices: usize,
    aggregate_prob: f64,
    rng: SimRng,
}

impl QueryProcess {
    pub fn new(config: &TaskConfig, seed: u64) -> Self {
        Self {
            mode: config.query_mode,
            q: config.q,
            burst: config.burst.clone(),
            busy: false,
            devices: config.num_devices,
            aggregate_prob: config.aggregate_prob,
            rng: stream_rng(seed, Stream::Queries),
        }
    }

    pub fn next(&mut self) -> Option<QueryTarget> {
        let q = match self.mode {
            QueryMode::Bernoulli => self.q,
            QueryMode::Bursty => {
                let flip = if self.busy { self.burst.p_exit } else { self.burst.p_enter };
                if self.rng.random::<f64>() < flip {
                    self.busy = !self.busy;
                }
                if self.busy {
                    self.burst.q_high
                } else {
                    self.burst.q_low
                }
            }
        };
        if self.rng.random::<f64>() >= q {
            return None;
        }
        if self.rng.random::<f64>() < self.aggregate_prob {
            Some(QueryTarget::Mean)
        } else {
            Some(QueryTarget::Component(self.rng.random_range(0..self.devices)))
        }
    }
}

/// How actions are chosen in an episode.
pub enum Mode<'a> {
    Baseline,
    Greedy(&'a QTable),
    Train { table: &'a mut QTable, epsilon: f64 },
}

/// Everything recorded during one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub slots: u64,
    pub poll_slots: Vec<u64>,
    pub queries: u64,
    /// `(query slot, response time)`.
    pub response_ms: Vec<(u64, f64)>,
    /// `(query slot, squared answer error against the state at arrival)`.
    pub query_sq_err: Vec<(u64, f64)>,
    /// Time since the last query at every decision, with the decision.
    pub decisions: Vec<(u64, bool)>,
    /// Decisions taken in states never visited during training.
    pub unseen_states: u64,
    pub frames: FrameTrace,
    pub min_eigenvalue: f64,
}

fn numerical(seed: u64, slot: u64, e: FilterError) -> SimError {
    SimError::Numerical {
        seed,
        slot,
        detail: e.to_string(),
    }
}

/// Runs one episode of `slots` slots.
pub fn run_episode(config: &TaskConfig, mut mode: Mode<'_>, seed: u64, slots: u64) -> Result<EpisodeTrace, SimError> {
    let n = config.num_devices;
    let process = config.process();
    let obs = config.observation();
    let ckf = Ckf::new(config.rule);
    let q_cov = process.noise_cov(n);
    let mut process_rng = stream_rng(seed, Stream::Process);
    let mut obs_rng = stream_rng(seed, Stream::Observation);
    let mut policy_rng = stream_rng(seed, Stream::Policy);
    let mut train_rng = stream_rng(seed, Stream::Training);
    let mut queries = QueryProcess::new(config, seed);

    let init_sd = config.init_var.sqrt();
    let mut x = DVector::from_fn(n, |_, _| init_sd * process_rng.sample::<f64, _>(rand_distr::StandardNormal));
    let mut est = Estimate::new(DVector::zeros(n), DMatrix::from_diagonal_element(n, n, config.init_var));
    let mut clock = SlotClock::new();
    let mut trace = EpisodeTrace {
        min_eigenvalue: f64::INFINITY,
        ..EpisodeTrace::default()
    };
    let mut ages = vec![0u64; n];
    let mut last_query: Option<u64> = None;
    let mut pending_poll: Option<usize> = None;
    // (query slot, target, slot the answer is sent, truth at arrival)
    let mut pending_answers: std::collections::VecDeque<(u64, QueryTarget, u64, f64)> = Default::default();
    let mut previous: Option<(usize, usize)> = None;

    for t in 0..slots {
        clock.enter(Phase::Sense);
        if t > 0 {
            x = process.step(&x, &mut process_rng);
            est = ckf.predict(&est, |v| process.f(v), &q_cov).map_err(|e| numerical(seed, t, e))?;
        }
        let prior_mse = config.agent_mse(&est.cov);
        let mut voi = 0.0;
        if let Some(i) = pending_poll.take() {
            let y = obs.observe(x[i], &mut obs_rng);
            est = ckf
                .update(&est, y, |v| obs.h(v[i]), obs.r)
                .map_err(|e| numerical(seed, t, e))?;
            voi = prior_mse - config.agent_mse(&est.cov);
            ages[i] = 0;
        }
        trace.min_eigenvalue = trace.min_eigenvalue.min(est.min_eigenvalue());
        while pending_answers.front().is_some_and(|p| p.2 == t) {
            let (slot, target, _, arrival_truth) = pending_answers.pop_front().expect("front exists");
            let truth = match config.scoring {
                AnswerScoring::Arrival => arrival_truth,
                AnswerScoring::Delivery => target.value(&x),
            };
            trace.query_sq_err.push((slot, (target.value(&est.mean) - truth).powi(2)));
        }
        let query = queries.next();

        clock.enter(Phase::Schedule);
        if let Some(target) = query {
            trace.queries += 1;
            last_query = Some(t);
            match mode {
                Mode::Baseline => {
                    trace.response_ms.push((t, BASELINE_RESPONSE_MS));
                    let sent = match config.scoring {
                        AnswerScoring::Arrival => t + 1,
                        AnswerScoring::Delivery => t + BASELINE_RESPONSE_MS as u64 - 1,
                    };
                    pending_answers.push_back((t, target, sent, target.value(&x)));
                }
                _ => {
                    trace.response_ms.push((t, TASK_AWARE_RESPONSE_MS));
                    trace
                        .query_sq_err
                        .push((t, (target.value(&est.mean) - target.value(&x)).powi(2)));
                }
            }
        }
        let tsq = last_query.map_or(t + 1, |q| t - q);
        let state = config.state.encode(config.agent_mse(&est.cov), tsq, &ages);
        let action = match &mut mode {
            Mode::Baseline => schedule_mc_baseline(query, n, &mut policy_rng),
            Mode::Greedy(table) => {
                if table.seen(state) {
                    table.greedy(state)
                } else {
                    trace.unseen_states += 1;
                    0
                }
            }
            Mode::Train { table, epsilon } => {
                if let Some((s, a)) = previous {
                    let reward = if a > 0 {
                        voi - config.poll_cost
                    } else {
                        config.reward_sign * prior_mse
                    };
                    q_update(table, &config.learning, s, a, reward, state);
                }
                epsilon_greedy(table, state, *epsilon, &mut train_rng)
            }
        };
        previous = Some((state, action));
        trace.decisions.push((tsq, action > 0));

        clock.enter(Phase::Transmit);
        if action > 0 {
            pending_poll = Some(action - 1);
            trace.poll_slots.push(t);
            trace.frames.record(FrameKind::Poll);
        }

        clock.enter(Phase::Metrics);
        for a in &mut ages {
            *a += 1;
        }
        clock.finish_slot();
    }
    trace.slots = slots;
    Ok(trace)
}

/// Trains a Q-table over `config.train_episodes` episodes.
pub fn train(config: &TaskConfig) -> Result<QTable, SimError> {
    config.validate()?;
    let mut table = QTable::new(config.state.num_states(config.num_devices), config.num_devices + 1);
    let episodes = config.train_episodes.max(1);
    for e in 0..config.train_episodes {
        let epsilon = config.learning.epsilon(e as f64 / (episodes - 1).max(1) as f64);
        run_episode(
            config,
            Mode::Train {
                table: &mut table,
                epsilon,
            },
            derive_seed(config.train_seed, e as u64),
            config.episode_slots,
        )?;
    }
    Ok(table)
}

type TableCache = Mutex<Option<HashMap<String, Arc<QTable>>>>;
static TRAINED: TableCache = Mutex::new(None);

/// [`train`], memoized per configuration.
pub fn trained_table(config: &TaskConfig) -> Result<Arc<QTable>, SimError> {
    let mut key_cfg = config.clone();
    key_cfg.scheduler = Scheduler::TaskAware;
    let key = serde_json::to_string(&key_cfg).expect("config serializes");
    if let Some(t) = TRAINED.lock().expect("table cache").get_or_insert_with(HashMap::new).get(&key) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(train(config)?);
    TRAINED
        .lock()
        .expect("table cache")
        .get_or_insert_with(HashMap::new)
        .insert(key, Arc::clone(&table));
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskMetrics {
    pub avg_response_ms: Option<f64>,
    /// Polls times `E0`.
    pub energy_e0: f64,
    /// Mean gap between consecutive polls; `None` with fewer than 2 polls.
    pub mttf_ms: Option<f64>,
}

pub fn compute_task_metrics(poll_slots: &[u64], response_ms: &[f64]) -> TaskMetrics {
    let mttf_ms = (poll_slots.len() >= 2).then(|| {
        let span = poll_slots[poll_slots.len() - 1] - poll_slots[0];
        span as f64 * SLOT_MS / (poll_slots.len() - 1) as f64
    });
    TaskMetrics {
        avg_response_ms: (!response_ms.is_empty()).then(|| response_ms.iter().sum::<f64>() / response_ms.len() as f64),
        energy_e0: poll_slots.len() as f64,
        mttf_ms,
    }
}

/// Metrics of an evaluation run past warm-up.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSummary {
    pub metrics: TaskMetrics,
    pub polls: u64,
    pub queries: u64,
    /// Mean squared answer error; `None` without queries.
    pub eval_mse: Option<f64>,
    /// Slots in the measured window.
    pub window: u64,
}

impl TaskSummary {
    pub fn from_trace(trace: &EpisodeTrace, warmup: u64) -> Self {
        let polls: Vec<u64> = trace.poll_slots.iter().copied().filter(|&t| t >= warmup).collect();
        let responses: Vec<f64> = trace.response_ms.iter().filter(|(t, _)| *t >= warmup).map(|&(_, r)| r).collect();
        let errors: Vec<f64> = trace.query_sq_err.iter().filter(|(t, _)| *t >= warmup).map(|&(_, e)| e).collect();
        Self {
            metrics: compute_task_metrics(&polls, &responses),
            polls: polls.len() as u64,
            queries: responses.len() as u64,
            eval_mse: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
            window: trace.slots.saturating_sub(warmup),
        }
    }
}

/// Runs the configured scheduler for `horizon` slots (training the
/// task-aware agent first, once per configuration).
pub fn evaluate(config: &TaskConfig, seed: u64, horizon: u64) -> Result<EpisodeTrace, SimError> {
    config.validate()?;
    match config.scheduler {
        Scheduler::Baseline => run_episode(config, Mode::Baseline, seed, horizon),
        Scheduler::TaskAware => {
            let table = trained_table(config)?;
            run_episode(config, Mode::Greedy(&table), seed, horizon)
        }
    }
}

/// Evaluates the configured scheduler and reports response time, device
/// energy, mean inter-poll gap and answer error, all past warm-up.
pub fn run(config: &TaskConfig, seed: u64, horizon: u64) -> Result<MetricsReport, SimError> {
    let trace = evaluate(config, seed, horizon)?;
    Ok(report(config, seed, horizon, &trace))
}

/// [`run`] for the task-aware scheduler with a given table instead of a
/// freshly trained one.
pub fn run_with_table(config: &TaskConfig, table: &QTable, seed: u64, horizon: u64) -> Result<MetricsReport, SimError> {
    config.validate()?;
    let expected = (config.state.num_states(config.num_devices), config.num_devices + 1);
    if (table.states, table.actions) != expected {
        return Err(SimError::Config(ConfigError::invalid(
            "task.state",
            format!(
                "table is {}x{} but the configuration needs {}x{}",
                table.states, table.actions, expected.0, expected.1
            ),
        )));
    }
    let trace = run_episode(config, Mode::Greedy(table), seed, horizon)?;
    let cfg = TaskConfig {
        scheduler: Scheduler::TaskAware,
        ..config.clone()
    };
    Ok(report(&cfg, seed, horizon, &trace))
}

fn report(config: &TaskConfig, seed: u64, horizon: u64, trace: &EpisodeTrace) -> MetricsReport {
    let warmup = (config.warmup_fraction * horizon as f64).floor() as u64;
    let summary = TaskSummary::from_trace(trace, warmup);
    let m = summary.metrics;
    let mut report = MetricsReport::new("task", seed, horizon, serde_json::to_value(config).expect("config serializes"));
    match m.avg_response_ms {
        Some(v) => report.push(Metric::point("avg_response_ms", v, Unit::Ms)),
        None => report.push(Metric::censored("avg_response_ms", 0.0, Unit::Ms)),
    }
    report.push(Metric::point("energy_E0_units", m.energy_e0, Unit::E0));
    match m.mttf_ms {
        Some(v) => report.push(Metric::point("mttf_ms", v, Unit::Ms)),
        None => report.push(Metric::censored("mttf_ms", summary.window as f64 * SLOT_MS, Unit::Ms)),
    }
    match summary.eval_mse {
        Some(v) => report.push(Metric::point("eval_mse", v, Unit::Mse)),
        None => report.push(Metric::censored("eval_mse", 0.0, Unit::Mse)),
    }
    report.push(Metric::point("queries", summary.queries as f64, Unit::Count));
    report.push(Metric::point("unseen_states", trace.unseen_states as f64, Unit::Count));
    report.overhead = trace.frames.overhead_bits();
    report.push(Metric::point("overhead_bits", report.overhead.total() as f64, Unit::Bits));
    report
}
