use thiserror::Error;

/// Crate-wide error type. Variant names match the failure modes of the
/// individual operations that raise them.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("operation undefined on type I points")]
    TypeIPoint,
    #[error("disk {0} is not contained in the closed unit disk")]
    DiskOutsideUnit(String),
    #[error("the unit disk itself is not an admissible input disk")]
    UnitDiskInput,
    #[error("empty input set")]
    EmptyInput,
    #[error("vector length {got} does not match basis size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("inclusion is not a leaf extension: {0}")]
    NotLeafExtension(String),
    #[error("dense spectrum limited to {limit} basis slots, got {got}")]
    MatrixTooLarge { limit: usize, got: usize },
    #[error("resolvent profile requires a non-real spectral parameter")]
    RealLambda,
    #[error("letter index {0} is not part of the comb system")]
    UnknownLetter(usize),
    #[error("letter value {0} is not part of the comb system")]
    UnknownLetterValue(String),
    #[error("inconsistent tail: {0}")]
    InconsistentTail(String),
    #[error("point is not in the follower set of letter {0}")]
    NotInFollowerSet(String),
    #[error("word {0} is not admissible")]
    InadmissibleWord(String),
    #[error("point does not lie in the requested direction")]
    NotInDirection,
    #[error("zero vector")]
    ZeroVector,
    #[error("trivial group word set")]
    EmptyGroup,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("pole of the Moebius map lies inside the disk{0}")]
    PoleInsideDisk(String),
    #[error("Moebius map has a pole at the boundary point {0}")]
    PoleAtBoundaryPoint(String),
    #[error("radius exponent {0} has no rational realization p^(-e) with e non-integral")]
    NonIntegralExponent(String),
    #[error("map is not upper triangular")]
    NotUpperTriangular,
    #[error("fewer than {0} distinct orbit radii observed")]
    InsufficientData(usize),
    #[error("cylinder {0} carries no sample mass")]
    EmptyCylinder(String),
    #[error("boundary sample carries no mass")]
    EmptyMeasure,
    #[error("orbit budget exceeded: {0} words requested")]
    OrbitTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
