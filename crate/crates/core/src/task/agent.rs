//! Tabular Q-learning over a discretized scheduler state.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// First line of a serialized table.
pub const QTABLE_HEADER: &str = "contextsim-qtable v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSpace {
    /// Log-spaced MSE bins over `[mse_min, mse_max]`; values outside clamp.
    pub mse_bins: usize,
    pub mse_min: f64,
    pub mse_max: f64,
    /// Time-since-query bins of `tsq_width` slots; the last bin is open.
    pub tsq_bins: usize,
    pub tsq_width: u64,
    /// Edges of the per-device innovation-age bins, in slots.
    pub age_edges: Vec<u64>,
}

impl Default for StateSpace {
    fn default() -> Self {
        Self {
            mse_bins: 64,
            mse_min: 1e-3,
            mse_max: 1e2,
            tsq_bins: 16,
            tsq_width: 2,
            age_edges: vec![8],
        }
    }
}

impl StateSpace {
    pub fn mse_bin(&self, mse: f64) -> usize {
        if !(mse > self.mse_min) {
            return 0;
        }
        let x = (mse / self.mse_min).ln() / (self.mse_max / self.mse_min).ln();
        ((x * self.mse_bins as f64) as usize).min(self.mse_bins - 1)
    }

    pub fn tsq_bin(&self, tsq: u64) -> usize {
        ((tsq / self.tsq_width) as usize).min(self.tsq_bins - 1)
    }

    pub fn age_bin(&self, age: u64) -> usize {
        self.age_edges.iter().filter(|&&e| age >= e).count()
    }

    pub fn num_states(&self, devices: usize) -> usize {
        self.mse_bins * self.tsq_bins * (self.age_edges.len() + 1).pow(devices as u32)
    }

    pub fn encode(&self, mse: f64, tsq: u64, ages: &[u64]) -> usize {
        let mut idx = self.mse_bin(mse) * self.tsq_bins + self.tsq_bin(tsq);
        let base = self.age_edges.len() + 1;
        for &a in ages {
            idx = idx * base + self.age_bin(a);
        }
        idx
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QTableError {
    #[error("missing or unknown header (expected `{QTABLE_HEADER}`)")]
    Header,
    #[error("malformed table: {0}")]
    Body(String),
}

/// Action values; action 0 refrains, action `n` polls device `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub states: usize,
    pub actions: usize,
    pub values: Vec<f64>,
    pub visits: Vec<u32>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Self {
        Self {
            states,
            actions,
            values: vec![0.0; states * actions],
            visits: vec![0; states],
        }
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.actions..(state + 1) * self.actions]
    }

    pub fn seen(&self, state: usize) -> bool {
        self.visits[state] > 0
    }

    /// Highest-valued action, lowest index on ties.
    pub fn greedy(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Serialized as the header line, a `states actions` line, then one line
    /// per visited state: `state visits v0 v1 ...`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{QTABLE_HEADER}\n{} {}\n", self.states, self.actions);
        for s in 0..self.states {
            if self.visits[s] == 0 {
                continue;
            }
            write!(out, "{s} {}", self.visits[s]).expect("string write");
            for v in self.row(s) {
                write!(out, " {v:e}").expect("string write");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, QTableError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(QTABLE_HEADER) {
            return Err(QTableError::Header);
        }
        let dims: Vec<usize> = lines
            .next()
            .ok_or_else(|| QTableError::Body("missing dimensions".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| QTableError::Body(format!("bad dimension `{t}`"))))
            .collect::<Result<_, _>>()?;
        let [states, actions] = dims[..] else {
            return Err(QTableError::Body("expected `states actions`".into()));
        };
        let mut table = QTable::new(states, actions);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut tok = line.split_whitespace();
            let mut next = |what: &str| tok.next().ok_or_else(|| QTableError::Body(format!("missing {what}")));
            let s: usize = next("state")?.parse().map_err(|_| QTableError::Body("bad state".into()))?;
            if s >= states {
                return Err(QTableError::Body(format!("state {s} out of range")));
            }
            table.visits[s] = next("visits")?.parse().map_err(|_| QTableError::Body("bad visit count".into()))?;
            for a in 0..actions {
                table.values[s * actions + a] =
                    next("value")?.parse().map_err(|_| QTableError::Body("bad value".into()))?;
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            discount: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
        }
    }
}

impl LearningParams {
    /// Linear decay from `epsilon_start` to `epsilon_end` over training.
    pub fn epsilon(&self, progress: f64) -> f64 {
        let p = progress.clamp(0.0, 1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * p
    }
}

pub fn epsilon_greedy<R: Rng + ?Sized>(table: &QTable, state: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..table.actions)
    } else {
        table.greedy(state)
    }
}

pub fn q_update(table: &mut QTable, params: &LearningParams, state: usize, action: usize, reward: f64, next: usize) {
    let target = reward + params.discount * table.max_value(next);
    let q = &mut table.values[state * table.actions + action];
    *q += params.learning_rate * (target - *q);
    table.visits[state] = table.visits[state].saturating_add(1);
}
