use thiserror::Error;

/// Errors raised by the rate model, the optimizer and the scan drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("window condition violated: (1+delta)*M_A*lambda' = {0} >= 1")]
    WindowConditionViolated(f64),
    #[error("no untagged pulses: lower untagged probability is {0}")]
    NoUntaggedPulses(f64),
    #[error("fluctuation {xi} exceeds untagged probability {untagged}")]
    FluctuationExceedsUntagged { untagged: f64, xi: f64 },
    #[error("empty raw key (n = {0})")]
    EmptyRawKey(f64),
    #[error("single-photon bound unavailable: {0}")]
    BoundUnavailable(&'static str),
    #[error("scenario mismatch: expected {expected}, got {got}")]
    ScenarioMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("invalid protocol point: {0}")]
    InvalidPoint(String),
    #[error("no feasible point: {0}")]
    Infeasible(String),
    #[error("non-monotone rate profile: rate rose from {from:e} at {from_km} km to {to:e} at {to_km} km")]
    NonMonotone {
        from_km: f64,
        from: f64,
        to_km: f64,
        to: f64,
    },
    #[error("threshold outside search range [{lo:e}, {hi:e}]")]
    ThresholdOutsideRange { lo: f64, hi: f64 },
    #[error("unknown figure id '{0}'")]
    UnknownFigure(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
