use thiserror::Error;

/// Errors raised by model construction, probability evaluation, coding and
/// the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("kernel row {row} sums to {sum} (must be 1 within 1e-9)")]
    RowSum { row: usize, sum: f64 },

    #[error("kernel entry [{row}][{col}] is negative ({value})")]
    NegativeProbability { row: usize, col: usize, value: f64 },

    #[error("history chain is not irreducible ({unreachable} of {states} states do not communicate with state 0)")]
    NotIrreducible { unreachable: usize, states: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("history chain has {states} states (limit {limit})")]
    TooManyStates { states: usize, limit: usize },

    #[error("symbol {symbol} at position {position} is outside an alphabet of size {size}")]
    SymbolOutOfRange { position: usize, symbol: u32, size: usize },

    #[error("x and y strings have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },

    #[error("empty string")]
    EmptyString,

    #[error("conditioning on a side-information string of probability zero")]
    ConditioningOnNull,

    #[error("event has probability zero")]
    ZeroProbability,

    #[error("window {window} is invalid (order {order}, past length {past})")]
    WindowTooShort { window: usize, order: usize, past: usize },

    #[error("enumeration of {size} strings exceeds the limit {limit}")]
    EnumerationTooLarge { size: f64, limit: f64 },

    #[error("operation requires a memoryless model")]
    WrongKind,

    #[error("codeword does not index a string of X^n")]
    InvalidCodeword,

    #[error("no recurrence within the available past")]
    Truncated,

    #[error("target probability {probability} is below the floor {floor}")]
    TargetTooRare { probability: f64, floor: f64 },

    #[error("varentropy is (numerically) zero; use the zero-fluctuation check")]
    DegenerateVariance,

    #[error("past length {m} is shorter than the model order {order}")]
    PastTooShort { m: usize, order: usize },

    #[error("bad argument: {0}")]
    BadArgument(String),

    #[error("malformed token stream: {0}")]
    Stream(String),
}

pub type Result<T> = std::result::Result<T, Error>;
