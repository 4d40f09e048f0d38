use thiserror::Error;

/// Errors raised by the library. Numerical outcomes (a failing certificate,
/// a detected blow-up) are data, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid nonlinearity model: {0}")]
    InvalidModel(String),

    #[error("profile does not fit inside the torus: {0}")]
    Support(String),

    #[error("profile is under-resolved: {points:.1} points across width {width} (need at least 8)")]
    Resolution { points: f64, width: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no admissible initial data found: {0}")]
    Infeasible(String),

    #[error("shooting bracket [{lo}, {hi}] does not bracket the ground state ({reason})")]
    NonBracketing { lo: f64, hi: f64, reason: String },

    #[error("tolerance {tol:e} not reached after {iterations} iterations")]
    ToleranceNotReached { tol: f64, iterations: usize },

    #[error("profile tail {tail:e} exceeds {limit:e} at the domain edge; enlarge the domain")]
    TailTooLarge { tail: f64, limit: f64 },

    #[error("invalid solver configuration: {0}")]
    SolverConfig(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
