use thiserror::Error;

/// Errors produced while constructing or solving a network model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("station index {station} out of range for {stations} stations (class {class})")]
    StationOutOfRange {
        class: usize,
        station: usize,
        stations: usize,
    },
    #[error("traffic equations are singular: (I - P') is not invertible")]
    SingularTraffic,
    #[error("traffic solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("unknown builtin network `{0}`")]
    UnknownBuiltin(String),
    #[error("override length mismatch: expected {expected} entries, got {got}")]
    OverrideLength { expected: usize, got: usize },
    #[error("network does not match the {expected} topology")]
    TopologyMismatch { expected: &'static str },
}

/// Errors produced by the fluid solver.
#[derive(Debug, Error)]
pub enum FluidError {
    #[error("allocation fixed point did not converge after {sweeps} sweeps (ambiguous state)")]
    RateFixedPointInconclusive {
        sweeps: usize,
        /// Last iterate, for diagnostics.
        last: Vec<f64>,
    },
    #[error("breakpoint budget of {budget} exhausted at t = {at_time}")]
    BudgetExhausted { budget: usize, at_time: f64 },
    #[error("initial levels must be nonnegative (class {class} has {value})")]
    NegativeLevel { class: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Errors produced by the simulator and its statistics.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("warmup ({warmup}) must be smaller than horizon ({horizon})")]
    WarmupExceedsHorizon { warmup: f64, horizon: f64 },
    #[error("at least 2 batches are required, got {0}")]
    TooFewBatches(usize),
    #[error("divergence test needs at least {needed} batches, got {got}")]
    InsufficientBatches { needed: usize, got: usize },
}
