use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by [`Error::exit_code`] into invalid input (2),
/// numerical failure (3) and invariant violation (4).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("integrator stalled: {0}")]
    Stiffness(String),
    #[error("state exceeded the overflow guard: {0}")]
    BlowUp(String),
    #[error("fixed-point map is not contracting: {0}")]
    NonContraction(String),
    #[error("tolerance not reached: {0}")]
    Tolerance(String),
    #[error("bound violated: {0}")]
    BoundViolation(String),
    #[error("extrapolation did not settle: {0}")]
    Extrapolation(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("Newton iteration failed: {0}")]
    NewtonDivergence(String),
    #[error("positivity lost: {0}")]
    Positivity(String),
    #[error("sandwich condition violated: {0}")]
    SandwichViolation(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Range(_) => "RangeError",
            Error::Degenerate(_) => "DegenerateError",
            Error::Internal(_) => "InternalError",
            Error::Quadrature(_) => "QuadratureError",
            Error::Stiffness(_) => "StiffnessError",
            Error::BlowUp(_) => "BlowUpError",
            Error::NonContraction(_) => "NonContractionError",
            Error::Tolerance(_) => "ToleranceError",
            Error::BoundViolation(_) => "BoundViolationError",
            Error::Extrapolation(_) => "ExtrapolationError",
            Error::Resolution(_) => "ResolutionError",
            Error::GridMismatch(_) => "GridMismatchError",
            Error::NewtonDivergence(_) => "NewtonDivergence",
            Error::Positivity(_) => "PositivityError",
            Error::SandwichViolation(_) => "SandwichViolationError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Range(_) | Error::Degenerate(_) => 2,
            Error::Internal(_)
            | Error::BoundViolation(_)
            | Error::GridMismatch(_)
            | Error::SandwichViolation(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
