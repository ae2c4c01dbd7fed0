use thiserror::Error;

/// Errors raised by channel construction, the ordering operators and the estimators.
///
/// Messages lead with the variant name so that command-line diagnostics name the
/// violated invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NonSquare: matrix has {rows} rows but row {row} has {cols} columns")]
    NonSquare { rows: usize, row: usize, cols: usize },

    #[error("EmptyMatrix: a transition matrix needs at least one state")]
    EmptyMatrix,

    #[error("NegativeEntry: entry ({row}, {col}) = {value} is outside [0, 1]")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("RowSumViolation: row {row} deviates from 1 by {deviation:e}")]
    RowSumViolation { row: usize, deviation: f64 },

    #[error("NotRegular: {0}")]
    NotRegular(String),

    #[error("NoConvergence: steady state not reached after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ZeroSteadyStateProb: steady-state probability of state {state} is zero")]
    ZeroSteadyStateProb { state: usize },

    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),

    #[error("ParamOutOfRange: {name} = {value} is outside {range}")]
    ParamOutOfRange {
        name: String,
        value: f64,
        range: &'static str,
    },

    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("LengthMismatch: {0}")]
    LengthMismatch(String),

    #[error("SymbolOutOfAlphabet: {0}")]
    SymbolOutOfAlphabet(String),

    #[error("FamilyMismatch: {left} vs {right}")]
    FamilyMismatch { left: String, right: String },

    #[error("MuOutOfRange: {name} = {value} is outside [0, 1]")]
    MuOutOfRange { name: &'static str, value: f64 },

    #[error("MuOnBoundary: ordering checks need 0 < mu12, mu21 < 1, got ({mu12}, {mu21})")]
    MuOnBoundary { mu12: f64, mu21: f64 },

    #[error("BlockTooLarge: block length {k} exceeds the enumeration limit {limit}")]
    BlockTooLarge { k: usize, limit: usize },

    #[error("Parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
