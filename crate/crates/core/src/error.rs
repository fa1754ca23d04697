use thiserror::Error;

/// Errors raised by problem construction and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {field} = {value} (must be >= 1)")]
    InvalidDimension { field: &'static str, value: usize },

    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite cost entry at index {index}")]
    NonFiniteCost { index: usize },

    #[error("mu[{index}] is zero; marginals need full support")]
    ZeroMarginal { index: usize },

    #[error("invalid marginal entry mu[{index}]: {value}")]
    InvalidMarginal { index: usize, value: f64 },

    #[error("marginal does not sum to 1 (sum = {sum})")]
    MarginalSum { sum: f64 },

    #[error("invalid beta grid at index {index}: {reason}")]
    InvalidBetaGrid { index: usize, reason: &'static str },

    #[error("cannot lift cost of depth {from} to smaller depth {to}")]
    DepthDecrease { from: usize, to: usize },

    #[error("symbol {symbol} out of range at position {position} (alphabet size {size})")]
    SymbolOutOfRange {
        position: usize,
        symbol: usize,
        size: usize,
    },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid Markov measure: {0}")]
    InvalidMarkov(String),

    #[error("malformed problem document: {0}")]
    Parse(String),

    #[error(
        "eigen-iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    RpfNotConverged { iterations: usize, residual: f64 },

    #[error("eigen-residual {residual:e} above tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("stationary vector residual {residual:e} above tolerance")]
    StationaryFailed { residual: f64 },

    #[error("epsilon {eps:e} too large: must be below {max:e}")]
    EpsilonTooLarge { eps: f64, max: f64 },

    #[error(
        "dual minimization stalled after {iterations} iterations (gradient {gradient_norm:e})"
    )]
    DualNotConverged {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error(
        "dual certificate failed: pressure residual {pressure_residual:e}, \
         marginal residual {marginal_residual:e}, duality gap {duality_gap:e}"
    )]
    DualCertificate {
        pressure_residual: f64,
        marginal_residual: f64,
        duality_gap: f64,
        iterations: usize,
    },

    #[error("{what}: requires {requirement}")]
    WrongShape {
        what: &'static str,
        requirement: &'static str,
    },

    #[error("sandwich bound violated at beta={beta}: log lambda {log_lambda} outside [{lower}, {upper}]")]
    SandwichViolation {
        beta: f64,
        log_lambda: f64,
        lower: f64,
        upper: f64,
    },

    #[error("subaction calibration failed (residual {residual:e})")]
    SubactionFailed { residual: f64 },

    #[error("cross-check failed: {what} = {value:e} exceeds {bound:e}")]
    CrossCheck {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error(
        "zero-temperature certificate failed: feasibility {feasibility:e}, support {support:e} \
         (worst entry x={worst_x}, word={worst_word})"
    )]
    ZeroTempCertificate {
        feasibility: f64,
        support: f64,
        worst_x: usize,
        worst_word: usize,
    },

    #[error("{what}: size {size} exceeds cap {cap}")]
    SizeCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input-validation failures, as opposed to solver or certificate failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFiniteCost { .. }
                | Error::ZeroMarginal { .. }
                | Error::InvalidMarginal { .. }
                | Error::MarginalSum { .. }
                | Error::InvalidBetaGrid { .. }
                | Error::DepthDecrease { .. }
                | Error::SymbolOutOfRange { .. }
                | Error::InvalidPlan(_)
                | Error::InvalidMarkov(_)
                | Error::Parse(_)
                | Error::WrongShape { .. }
                | Error::SizeCap { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
