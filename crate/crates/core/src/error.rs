use alloc::string::String;

/// Invalid sampler, ladder or experiment configuration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("temperature must be >= 1, got {0}")]
    Temperature(f64),
    #[error("maximum temperature must exceed 1, got {0}")]
    MaxTemperature(f64),
    #[error("ladder needs at least {min} entries, got {got}")]
    LadderSize { min: usize, got: usize },
    #[error("energy levels must be positive for log spacing, got {0}")]
    NonPositiveLevel(f64),
    #[error("energy levels must be strictly increasing ({0} then {1})")]
    LevelOrder(f64, f64),
    #[error("equi-energy jump probability must lie in (0, 1), got {0}")]
    JumpProbability(f64),
    #[error("ring-construction period {rings} exceeds sample size {samples}")]
    RingPeriod { rings: usize, samples: usize },
    #[error("{what} does not match chain count ({got} for {chains} chains)")]
    ChainMismatch { what: &'static str, got: usize, chains: usize },
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Failure while evaluating a target density.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("density evaluation is NaN at state {0}")]
    NonFinite(String),
    #[error("degenerate parameter: {0}")]
    Degenerate(String),
    #[error("allocation has overlapping sites at positions {0} and {1}")]
    Overlap(usize, usize),
}

/// Failure of a sampler run.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
