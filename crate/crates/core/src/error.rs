use thiserror::Error;

use crate::superchannels::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("bipartite shape {dim_a}x{dim_b} does not match a {size}x{size} matrix")]
    BadShape { dim_a: usize, dim_b: usize, size: usize },

    #[error("Kraus operators are not complete (max deviation of sum K†K from identity {deviation:e})")]
    NotComplete { deviation: f64 },

    #[error("map is not trace preserving (max deviation of Tr_1 J from 1/d {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("not a correlation matrix: {0}")]
    NotCorrelation(String),

    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("vector collections have different Gram matrices (max deviation {deviation:e})")]
    GramMismatch { deviation: f64 },

    #[error("invalid dephasing superchannel: {}", join_violations(.0))]
    InvalidSuperchannel(Vec<Violation>),

    #[error("witness requested for a matrix without that violation")]
    NoViolation,

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
