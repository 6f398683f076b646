use thiserror::Error;

/// Errors raised by the geometric kernels and checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value while evaluating {0}")]
    EvaluationDomain(String),

    #[error("distribution is not transversal to the source fibres (condition number {condition:.3e})")]
    NonTransversal { condition: f64 },

    #[error("source map is not a submersion: kernel rank {actual}, expected {expected}")]
    Submersion { expected: usize, actual: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix leaves the Lie algebra (residual {residual:.3e})")]
    AlgebraClosure { residual: f64 },

    #[error("pulled-back distribution has dimension {actual}, expected {expected}")]
    PullbackDegenerate { expected: usize, actual: usize },

    #[error("rank-deficient basis passed as a subspace")]
    RankDeficient,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
