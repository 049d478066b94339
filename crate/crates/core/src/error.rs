use thiserror::Error;

use crate::dist::VarSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability table has {actual} entries but the alphabet sizes require {expected}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("need at least 3 variables (k >= 1), got {0}")]
    TooFewVariables(usize),

    #[error("variable {0} has an empty alphabet")]
    EmptyAlphabet(usize),

    #[error("entry {index} is negative or not finite ({value})")]
    InvalidEntry { index: usize, value: f64 },

    #[error("total mass {total} deviates from 1 by more than {tolerance}")]
    MassNotNormalized { total: f64, tolerance: f64 },

    #[error("variable set {0} must be nonempty")]
    EmptySubset(VarSet),

    #[error("variable sets {0} and {1} overlap")]
    Overlap(VarSet, VarSet),

    #[error("variable set {set} is out of range for {num_vars} variables")]
    SubsetOutOfRange { set: VarSet, num_vars: usize },

    #[error("conditioning tuple has zero probability")]
    ZeroConditioning,

    #[error("log-ratio denominator vanishes on a member of the event set")]
    ZeroDenominator,

    #[error("event set is empty")]
    EmptyEvent,

    #[error("sequence tuple is malformed: {0}")]
    BadSequences(String),

    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),

    #[error("parameter must be positive, got {0}")]
    NonPositive(f64),

    #[error("codebook of size zero where a positive size is required")]
    EmptyCodebook,

    #[error("exponent is degenerate (zero)")]
    DegenerateExponent,

    #[error("enumeration of {states} states exceeds the guard of {guard}")]
    GuardExceeded { states: f64, guard: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("snapshot parse error at line {line}: {message}")]
    Snapshot { line: usize, message: String },
}
