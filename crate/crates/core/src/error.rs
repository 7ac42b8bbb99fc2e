use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol `{0}` does not meet the structural assumptions required by bound checks")]
    Inadmissible(String),

    #[error("sample ({0}, {1}) lies on the zero set of the resonance function")]
    ZeroSet(f64, f64),

    #[error("sample ({xi}, {eta}, {sigma}) lies outside the commutator region")]
    OutsideRegion { xi: f64, eta: f64, sigma: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field is not band-limited to |k| <= {limit} (found energy at |k| = {found})")]
    BandLimit { limit: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("expression error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
