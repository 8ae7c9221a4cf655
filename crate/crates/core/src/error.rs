use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the reordering pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EqoError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix has {expected} entries by shape but {got} were supplied")]
    EntryCount { expected: usize, got: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular matrix: pivot magnitude {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("eigenvalue {eigenvalue} lies on the principal branch cut")]
    BranchCut { eigenvalue: Complex64 },

    #[error("{function} is singular at this argument (cos has a singular pivot {pivot:.3e})")]
    Singularity { function: &'static str, pivot: f64 },

    #[error("{name} is not symmetric: max |M - M^T| = {deviation:.3e}")]
    Asymmetry { name: &'static str, deviation: f64 },

    #[error("T22 vanishes (|T22| = {magnitude:.3e}); the ordered form does not exist")]
    ZeroT22 { magnitude: f64 },

    #[error("Gaussian flow blew up at tau = {tau:.6} (|A| = {norm:.3e})")]
    FlowSingular { tau: f64, norm: f64 },

    #[error("det T22(t) crosses zero near t = {time:.6} (|det| = {magnitude:.3e})")]
    PathSingular { time: f64, magnitude: f64 },

    #[error("quadrature integrand does not decay: {0}")]
    DivergentIntegrand(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl EqoError {
    /// True for the errors that mean the ordered form does not exist
    /// (as opposed to malformed input).
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            EqoError::SingularMatrix { .. }
                | EqoError::ZeroT22 { .. }
                | EqoError::BranchCut { .. }
                | EqoError::Singularity { .. }
                | EqoError::FlowSingular { .. }
                | EqoError::PathSingular { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, EqoError>;
