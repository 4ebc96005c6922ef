use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code distance {0}: must be odd and at least 3")]
    InvalidDistance(usize),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("serialization collision: stabilizer {blocked} is blocked by stabilizer {by} on data qubit {qubit}")]
    Collision { blocked: String, by: String, qubit: usize },

    #[error("schedule validation failed: {0}")]
    ScheduleMismatch(String),

    #[error("circuit error: {0}")]
    Circuit(String),

    #[error("numeric health: norm drifted to {norm}")]
    NumericHealth { norm: f64 },

    #[error("register count {0} exceeds the state-vector limit")]
    TooManyRegisters(usize),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("sweep resume rejected: config hash {found} does not match {expected}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("too many numeric-health aborts: {aborts} of {shots} shots")]
    TooManyAborts { aborts: u64, shots: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
