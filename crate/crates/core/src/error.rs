use thiserror::Error;

/// Configuration parsing and validation failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    /// A field violates its invariant. `key` is the config-file key.
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: `{key}` cannot parse `{value}`")]
    Parse { line: usize, key: String, value: String },

    #[error("`{first}` and `{second}` are mutually exclusive")]
    Conflict { first: String, second: String },

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// The config key the error is about, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { key, .. }
            | ConfigError::UnknownKey { key, .. }
            | ConfigError::Parse { key, .. } => Some(key),
            ConfigError::Conflict { first, .. } => Some(first),
            ConfigError::Syntax { .. } | ConfigError::Io { .. } => None,
        }
    }
}

/// Errors raised while estimating capacity.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("SNR sample {index} is {value}, expected a finite non-negative value")]
    BadSnr { index: usize, value: f64 },

    /// The Monte Carlo and CDF-integral estimators disagree. This is an
    /// internal consistency failure, not a user error.
    #[error("self-check failed: monte carlo {mc} vs cdf integral {cdf} bits/s/Hz")]
    SelfCheck { mc: f64, cdf: f64 },
}
