use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate atom id {0}")]
    DuplicateAtom(i64),
    #[error("measure space has no points")]
    EmptySpace,
    #[error("space has no interval cells")]
    NoCells,
    #[error("exhaustive check infeasible: {points} points exceeds max_points = {max_points} ({pairs} pairs)")]
    TooLarge { points: usize, max_points: usize, pairs: u128 },
    #[error("operands live on different measure spaces")]
    SpaceMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operator carries no kernel values")]
    MissingKernel,
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("factors are not linearly independent: {which} has numerical rank {rank} < {expected}")]
    DependentFactors { which: &'static str, rank: usize, expected: usize },
    #[error("eigenvalue iteration did not converge on a {dim}x{dim} block after {iterations} iterations")]
    NonConvergence { dim: usize, iterations: usize },
    #[error("chain is not increasing at position {0}")]
    NonIncreasingChain(usize),
    #[error("operation requires a space without atoms")]
    AtomsPresent,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vertex {0} repeated in cycle")]
    RepeatedVertex(usize),
    #[error("standard sets overlap at point {0}")]
    OverlappingSets(usize),
    #[error("kernel diagonal does not vanish at point {point}: |k(x,x)| = {magnitude:e}")]
    NonvanishingDiagonal { point: usize, magnitude: f64 },
    #[error("compression to {witness:?} is not nilpotent (spectral radius {radius:e})")]
    NotNilpotent { witness: Vec<usize>, radius: f64 },
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
