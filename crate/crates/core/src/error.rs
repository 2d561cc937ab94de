use thiserror::Error;

/// One reason an initial condition failed admission. Checks report every
/// violated condition, not just the first one found.
#[derive(Debug, Clone, PartialEq)]
pub enum AdmissionViolation {
    /// u0 dips below zero somewhere; carries the worst node.
    Negative { node: usize, value: f64 },
    /// u0 must vanish exactly at the last node (the free boundary).
    RightEndpointNonzero { value: f64 },
    /// Discrete slope at x = 0 exceeds tolerance. Enforced for alpha >= 1/2,
    /// where the data class pins u0'(0) = 0.
    LeftSlopeNonzero { value: f64, tol: f64 },
    /// u0 exceeds the cone bound M * Gamma(2-alpha) * b^(alpha-1) * (b - x).
    ConeBoundExceeded { node: usize, value: f64, bound: f64 },
}

impl std::fmt::Display for AdmissionViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdmissionViolation::Negative { node, value } => {
                write!(f, "negative value {value:.6e} at node {node}")
            }
            AdmissionViolation::RightEndpointNonzero { value } => {
                write!(f, "last node must be exactly 0, got {value:.6e}")
            }
            AdmissionViolation::LeftSlopeNonzero { value, tol } => {
                write!(
                    f,
                    "one-sided slope at x=0 is {value:.6e}, exceeds tolerance {tol:.6e}"
                )
            }
            AdmissionViolation::ConeBoundExceeded { node, value, bound } => {
                write!(
                    f,
                    "cone bound exceeded at node {node}: value {value:.6e} > bound {bound:.6e}"
                )
            }
        }
    }
}

/// Full list of admission failures for one candidate initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionReport {
    pub violations: Vec<AdmissionViolation>,
}

impl std::fmt::Display for AdmissionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 3 nodes, got {0}")]
    GridTooSmall(usize),

    #[error("grid length must be positive and finite, got {0}")]
    BadLength(f64),

    #[error("alpha must lie in {range}, got {value}")]
    AlphaOutOfRange { value: f64, range: &'static str },

    #[error("field carries {values} values for a grid of {nodes} nodes")]
    FieldLengthMismatch { values: usize, nodes: usize },

    #[error("node counts differ ({0} vs {1}); resampling between grids is not supported")]
    NodeCountMismatch(usize, usize),

    #[error("front scale must be positive and finite, got {0}")]
    BadFrontScale(f64),

    #[error("field length {field_len:.12e} does not match front position {s:.12e}")]
    FrameMismatch { field_len: f64, s: f64 },

    #[error("point index {0} must be an interior or right-end node (not 0) inside the grid")]
    BadPointIndex(usize),

    #[error("front path invalid at sample {index}: {reason}")]
    FrontPathInvalid { index: usize, reason: String },

    #[error("problem setup invalid: {0}")]
    SpecInvalid(String),

    #[error("initial condition rejected:\n{0}")]
    Admission(AdmissionReport),

    #[error(
        "linear solve failed at time index {time_index} (diagonal ratio estimate {cond_estimate:.3e})"
    )]
    LinearSolveFailed { time_index: usize, cond_estimate: f64 },

    #[error(
        "front speed {speed:.6e} dropped below -{tol:.6e} at time index {time_index}; \
         the discrete problem lost its one-phase character"
    )]
    NegativeFrontSpeed {
        time_index: usize,
        speed: f64,
        tol: f64,
    },

    #[error(
        "fixed-point iteration did not converge in {iters} iterations \
         (last residuals {tail:?}, target {tol:.3e})"
    )]
    PicardStalled {
        iters: usize,
        tol: f64,
        tail: Vec<f64>,
    },

    #[error("initial data is identically zero; the free-boundary iteration needs nonzero mass")]
    TrivialData,

    #[error("ordering precondition violated: {0}")]
    OrderingViolated(String),

    #[error("barrier parameters invalid: {0}")]
    BarrierParamsInvalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
