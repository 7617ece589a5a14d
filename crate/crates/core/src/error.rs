use crate::C64;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("argument {z} lies {distance:e} from a lattice point")]
    PoleAtLattice { z: C64, distance: f64 },
    #[error("theta series did not converge: {0}")]
    NonConvergent(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("trivial theta fit is degenerate: {0}")]
    FitDegenerate(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("matrix is numerically singular (|det| = {det:e}, threshold {threshold:e})")]
    SingularMatrix { det: f64, threshold: f64 },
    #[error("mu must be nonzero")]
    ZeroMu,
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("positions {i} and {j} are {margin:e} apart, below the collision margin")]
    CollisionImminent { i: usize, j: usize, margin: f64 },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("Y is singular")]
    SingularY,
    #[error("matrix is not diagonalizable: {0}")]
    NonDiagonalizable(String),
    #[error("repeated eigenvalues {a} and {b}")]
    RepeatedEigenvalues { a: C64, b: C64 },
    #[error("gauge fit failed: {0}")]
    GaugeFitFailed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
