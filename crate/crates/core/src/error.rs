use std::io;

use thiserror::Error;

/// Errors raised by operator evaluation, the solver and the symmetry checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("no convergence after {iterations} iterations (last residual {last_residual:e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("iteration collapsed to the trivial solution (max u = {max_u:e})")]
    TrivialSolution { max_u: f64 },

    #[error(
        "negative undershoot {min_u:e} below tolerance {threshold:e} at iteration {iteration}"
    )]
    NegativeUndershoot {
        iteration: usize,
        min_u: f64,
        threshold: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("critical planes are inconsistent (spread {spread:e} > {limit:e})")]
    Asymmetry { spread: f64, limit: f64 },

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. }
            | Error::TrivialSolution { .. }
            | Error::NegativeUndershoot { .. }
            | Error::Numeric(_)
            | Error::Io(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
