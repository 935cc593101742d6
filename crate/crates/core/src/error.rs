use thiserror::Error;

/// Errors raised by the bandit, reduction and harness code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arm count {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),

    #[error("arm {arm} is outside 1..={k}")]
    ArmOutOfRange { arm: usize, k: usize },

    #[error("level {level} is outside 0..={depth}")]
    LevelOutOfRange { level: u32, depth: u32 },

    #[error("step size must be positive and finite, got {0}")]
    InvalidEta(f64),

    #[error("loss {0} is outside [0, 1]")]
    LossOutOfRange(f64),

    #[error("subtree at level {level} containing arm {arm} has no probability mass")]
    DegenerateMass { arm: usize, level: u32 },

    #[error("weight of arm {arm} left the representable range")]
    NumericalUnderflow { arm: usize },

    #[error("Lipschitz constant must be >= 1, got {0}")]
    InvalidLipschitz(f64),

    #[error("invalid horizon {0}")]
    InvalidHorizon(usize),

    #[error("price window has {got} entries, buyer with patience {patience} needs {}", patience + 1)]
    WindowLengthMismatch { got: usize, patience: usize },

    #[error("horizon {horizon} is not divisible by 2 * max patience = {}", 2 * tau_bar)]
    IndivisibleHorizon { horizon: usize, tau_bar: usize },

    #[error("invalid buyer: {0}")]
    InvalidBuyer(String),

    #[error("unknown generator spec `{0}`")]
    UnknownSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
