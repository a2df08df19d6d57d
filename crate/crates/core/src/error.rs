use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VortexError {
    #[error("vortices {i} and {j} coincide (chordal distance {distance:e})")]
    CoincidentVortices { i: usize, j: usize, distance: f64 },
    #[error("chart singularity: {0}")]
    ChartSingularity(String),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("restricted symplectic form is singular (reciprocal condition {rcond:e})")]
    SingularPairing { rcond: f64 },
    #[error("momentum is zero; the reduced slice is required")]
    ZeroMomentum,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("every vorticity ratio gives a relative equilibrium here; pass kappa explicitly")]
    DegenerateKappa,
    #[error("no vorticity ratio makes this a relative equilibrium")]
    NoKappa,
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, VortexError>;
