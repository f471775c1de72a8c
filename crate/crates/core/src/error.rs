use conic::{ConicError, Status};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not rank-one (eigenvalue ratio {ratio:e})")]
    NotRankOne { ratio: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("design problem is infeasible")]
    Infeasible,
    #[error("solver stopped with status {0:?}")]
    Solver(Status),
    #[error(transparent)]
    Conic(#[from] ConicError),
}
