use thiserror::Error;

use crate::dataio::ParseError;
use crate::solver::PrimalDualSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {deviation:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("matrix declared positive semidefinite has eigenvalue {eigenvalue:e}")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dual point is infeasible: {0}")]
    InfeasibleDual(String),

    #[error("negative duality gap {0:e} beyond roundoff")]
    NegativeGap(f64),

    #[error("solver reached the epoch cap ({epochs}) with gap {gap:e} above tolerance {tol:e}")]
    SolverCapExceeded {
        epochs: usize,
        gap: f64,
        tol: f64,
        best: Box<PrimalDualSolution>,
    },

    #[error("kernel solver reached the epoch cap ({epochs}) with gap {gap:e} above tolerance {tol:e}")]
    KernelCapExceeded { epochs: usize, gap: f64, tol: f64 },

    #[error("invalid weight ball: {0}")]
    InvalidBall(String),

    #[error("quadratic term is identically zero")]
    ZeroQuadratic,

    #[error("value {value:e} coincides with a pole of the secular function")]
    SecularPole { value: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("csv: {0}")]
    Csv(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            actual,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
