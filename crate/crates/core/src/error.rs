use thiserror::Error;

/// Errors raised by model construction and every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state operator is not stable: spectral abscissa {abscissa} >= 0")]
    NotStable { abscissa: f64 },
    #[error("state operator is not diagonalizable (eigenvector condition number {condition:e})")]
    NotDiagonalizable { condition: f64 },
    #[error("negative control weight b_diag[{index}] = {value}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("operator is not coercive: min eigenvalue {min} <= tol * max eigenvalue {max}")]
    NotCoercive { min: f64, max: f64 },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("horizon must be positive, got {0}")]
    HorizonNotPositive(f64),
    #[error("state is not reachable in the given horizon (value is +inf)")]
    NotReachable,
    #[error("state does not belong to H = R(Q_inf^1/2)")]
    NotInH,
    #[error("state does not belong to the range of Q_inf")]
    NotInRangeQ,
    #[error("state is not reachable from any initial point in H")]
    NotReachableFromH,
    #[error("time grid does not match: {0}")]
    GridMismatch(String),
    #[error("Gramian is rank deficient (rank {rank} < {n})")]
    RankDeficient { rank: usize, n: usize },
    #[error("candidate solution has the wrong form (expected {expected})")]
    WrongForm { expected: &'static str },
    #[error("model is not a commuting coercive spectral model")]
    NotCommutingModel,
    #[error("model is not a spectral (diagonal) model")]
    NotSpectral,
    #[error("enumeration would produce {count} solutions, more than the limit {limit}")]
    TooManySolutions { count: u128, limit: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("boundary density must lie in (0,1), got {0}")]
    BadBoundary(f64),
    #[error("point {0} is outside the domain [0,1]")]
    OutOfDomain(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear solve failed: {0}")]
    Singular(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
