use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid set size k={0}: defective sets must have at least 2 members")]
    InvalidK(usize),
    #[error("infeasible family: could not place {wanted} sets of size {k} in a universe of {universe} (placed {placed})")]
    InfeasibleCounts {
        k: usize,
        wanted: usize,
        placed: usize,
        universe: usize,
    },
    #[error("sample of {count} requested from a pool of {pool}")]
    CountExceedsPool { count: usize, pool: usize },
    #[error("node {node} outside universe of size {universe}")]
    NodeOutOfRange { node: u32, universe: usize },
    #[error("k-set must be non-empty")]
    EmptySet,
    #[error("binary search over an empty list")]
    EmptyList,
    #[error("invalid a0={a0}: must exceed k_max={k_max}")]
    InvalidA0 { a0: usize, k_max: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty cell: no runs to summarize")]
    EmptyCell,
    #[error("empty sample")]
    EmptySample,
    #[error("bound violated: {0}")]
    BoundViolation(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
