use thiserror::Error;

/// Rejected configuration. Always names the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("failed to parse configuration: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

/// Checks that `value` is a probability in `[0, 1]`.
pub(crate) fn check_probability(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(ConfigError::invalid(
            field,
            format!("{value} is not a probability in [0, 1]"),
        ));
    }
    Ok(())
}

/// Errors raised while a run is in progress.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure at slot {slot} (seed {seed}): {detail}")]
    Numerical { seed: u64, slot: u64, detail: String },
    #[error("simulation logic error: {0}")]
    Logic(String),
    #[error("metric error: {0}")]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("trace `{0}` holds no samples past warm-up")]
    EmptyTrace(&'static str),
}
