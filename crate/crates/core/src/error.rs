use thiserror::Error;

/// Errors raised by the geometry, tensor, oracle and classification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("one-form norm out of range: b^2 = {b_sq:e}, b0 = {b0:e}")]
    BetaOutOfRange { b_sq: f64, b0: f64 },
    #[error("direction has vanishing alpha-norm ({alpha:e})")]
    ZeroDirection { alpha: f64 },
    #[error("s = {s} lies outside the family domain ({lo}, {hi})")]
    OutOfDomain { s: f64, lo: f64, hi: f64 },
    #[error("jet order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("jet of order {have} supplied where order {need} is required")]
    InsufficientJetOrder { have: usize, need: usize },
    #[error("degenerate denominator {name} = {value:e}")]
    DegenerateDenominator { name: &'static str, value: f64 },
    #[error("degenerate metric: guard {guard} = {value:e}")]
    DegenerateMetric { guard: &'static str, value: f64 },
    #[error("direction parallel to b: m^2 = {m_sq:e}")]
    ParallelDirection { m_sq: f64 },
    #[error("s = {s:e} too close to zero; the condition divides by s")]
    SDividesZero { s: f64 },
    #[error("s = {s} on or beyond the boundary |s| < sqrt(b^2) = {b:e}")]
    BoundaryS { s: f64, b: f64 },
    #[error("dimension {dim} too small; the characterization requires n >= 3")]
    DimensionTooSmall { dim: usize },
    #[error("unsupported parameter range: {0}")]
    UnsupportedParameterRange(String),
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("adaptive quadrature failed to converge on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("1 + tQ(t) changes sign or vanishes on the integration path near t = {t}")]
    PoleOnPath { t: f64 },
    #[error("empty s-grid")]
    EmptyGrid,
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl FinslerError {
    /// `true` for errors caused by evaluating outside a valid domain or at a
    /// guarded singularity, as opposed to malformed input.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            FinslerError::ZeroDirection { .. }
                | FinslerError::OutOfDomain { .. }
                | FinslerError::DegenerateDenominator { .. }
                | FinslerError::DegenerateMetric { .. }
                | FinslerError::ParallelDirection { .. }
                | FinslerError::SDividesZero { .. }
                | FinslerError::BoundaryS { .. }
                | FinslerError::QuadratureFailure { .. }
                | FinslerError::PoleOnPath { .. }
                | FinslerError::UnsupportedParameterRange(_)
                | FinslerError::Singular { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FinslerError>;
