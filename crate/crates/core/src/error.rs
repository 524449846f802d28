use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A target, grid or scenario violates one of its construction invariants.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// An operation was called outside its domain (e.g. `Im ζ <= 0`, `T = 0`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "frequency grid [{grid_min}, {grid_max}] does not cover the line support \
         [{needed_min}, {needed_max}] (lines padded by 20 gamma on each side)"
    )]
    GridCoverage {
        grid_min: f64,
        grid_max: f64,
        needed_min: f64,
        needed_max: f64,
    },

    #[error(
        "grid too coarse near Re(zeta) = {at}: local spacing {spacing} exceeds Im(zeta)/4 = {limit}; \
         refine the grid or raise Im(zeta)"
    )]
    GridTooCoarse { at: f64, spacing: f64, limit: f64 },

    /// Screen geometry that cannot satisfy paraxial, far-field and taper constraints together.
    #[error("infeasible screen geometry: {0}")]
    Infeasible(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl Error {
    /// Process exit status: 2 for rejected input, 3 for non-convergence, 1 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
