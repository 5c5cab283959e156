use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis index {axis} out of range for dimension {dim}")]
    InvalidAxis { axis: usize, dim: usize },

    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),

    #[error("{context}: input contains a non-finite value")]
    NonFinite { context: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset too small: need at least {min} observations, got {got}")]
    TooFewObservations { min: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no observation within bandwidth of evaluation point {at}; bandwidth too small")]
    EmptyWindow { at: f64 },

    #[error("degenerate design: density mass {mass:.3e} below threshold at grid point {at}")]
    DegenerateDensity { at: f64, mass: f64 },

    #[error("quadrature grid too coarse: imaginary residue {residue:.3e} exceeds tolerance")]
    QuadratureResidue { residue: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
