use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite state at sample {sample}")]
    NonFiniteState { sample: usize },

    #[error("cell interval [{start}, {end}) exceeds grid of {n_cells} cells")]
    OutOfRange {
        start: usize,
        end: usize,
        n_cells: usize,
    },

    #[error("invalid schedule blocks: {0}")]
    BadBlocks(String),

    #[error("invalid time grid: {0}")]
    BadGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    BadParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("schedule has {found} cells, grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("mode index {mode} out of range for {mode_count} modes")]
    BadMode { mode: usize, mode_count: usize },

    #[error("optimality function is {d_sigma}, no descent direction exists")]
    NotDescendable { d_sigma: f64 },

    #[error(
        "no acceptable step after {backtracks} backtracks; the grid cannot resolve a descent step"
    )]
    StepSizeUnderflow { backtracks: usize },

    #[error("brute-force budget exceeded: {candidates} candidates > {budget}")]
    BudgetExceeded { candidates: u128, budget: u128 },

    #[error("probe interval [{start}, {end}) does not lie inside one mode block")]
    BadInterval { start: usize, end: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
