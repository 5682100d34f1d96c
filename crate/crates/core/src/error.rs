use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("matrix is not Hermitian (max |M - M†| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("non-finite entry: {0}")]
    NonFinite(String),

    #[error("trace has non-negligible imaginary part {imag:e}")]
    ComplexTrace { imag: f64 },

    #[error("arity error: {0}")]
    Arity(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("invalid witness: {0}")]
    Witness(String),

    #[error("invalid acceptance table: {0}")]
    Table(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reproducibility check failed: {0}")]
    Reproducibility(String),
}
