use thiserror::Error;

/// Errors raised by the library. Validation-style checks (POM residuals,
/// steering bounds) are reported as values instead and never end up here.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("direction must be a unit vector (norm {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("sharpness pair violates the joint-measurability bound (residual {residual})")]
    Inadmissible { residual: f64 },

    #[error("marginal on axis {axis} is not of the form (1 ± s n·σ)/2: {detail}")]
    MarginalShape { axis: usize, detail: String },

    #[error("POM is not valid: {0}")]
    InvalidPovm(String),

    #[error("quadrature needs at least {required} nodes, got {given}")]
    InsufficientNodes { required: usize, given: usize },

    #[error("no shots recorded")]
    NoShots,

    #[error("up count {up} exceeds shot count {shots}")]
    CountOutOfRange { up: u64, shots: u64 },

    #[error("shot counts differ between observables ({a} vs {b})")]
    ShotMismatch { a: u64, b: u64 },

    #[error("strategy {strategy} {problem}")]
    StrategyParameters {
        strategy: &'static str,
        problem: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
