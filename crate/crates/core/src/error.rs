use thiserror::Error;

/// Errors raised by the esym numerical kernel.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {point:?} lies outside the region of chart `{chart}` ({region})")]
    OutsideRegion {
        chart: String,
        region: String,
        point: Vec<f64>,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range (limit {limit}) in {context}")]
    Index {
        context: String,
        index: usize,
        limit: usize,
    },

    #[error("cannot parse expression `{expr}` at byte {pos}: {msg}")]
    Parse { expr: String, pos: usize, msg: String },

    #[error("unknown symbol `{name}` in expression `{expr}`")]
    UnknownSymbol { name: String, expr: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("degenerate matrix in {context}")]
    Degenerate { context: String },

    #[error("singular E-function term: {0}")]
    SingularTerm(String),

    #[error("structure check failed: {0}")]
    Structure(String),

    #[error("vector field returned a non-finite value at t = {t}, state = {state:?}")]
    NonFiniteField { t: f64, state: Vec<f64> },

    #[error("trajectory error: {0}")]
    Trajectory(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
