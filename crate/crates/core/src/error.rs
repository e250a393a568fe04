use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge (relative residual {residual:.3e})")]
    EigenSolver { residual: f64 },

    #[error("propagator is not unitary (defect {defect:.3e}); increase the number of substeps")]
    NonUnitary { defect: f64 },

    #[error("Floquet mode is not time-periodic (defect {defect:.3e})")]
    PeriodicityDefect { defect: f64 },

    #[error("profile is degenerate: {0}")]
    DegenerateProfile(String),

    #[error("transfer matrix is numerically singular")]
    SingularMatrix,

    #[error("no symmetry found: {0}")]
    NoSymmetryFound(String),
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    NoSymmetry,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidLattice(_)
            | Error::InvalidBasis(_)
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_) => ErrorCategory::Config,
            Error::NoSymmetryFound(_) => ErrorCategory::NoSymmetry,
            Error::EigenSolver { .. }
            | Error::NonUnitary { .. }
            | Error::PeriodicityDefect { .. }
            | Error::DegenerateProfile(_)
            | Error::SingularMatrix => ErrorCategory::Numerical,
        }
    }
}
