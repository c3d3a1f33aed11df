use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("problem has {n} variables, exhaustive search is limited to {max}")]
    TooLarge { n: usize, max: usize },

    #[error("{what} requires {required} qubits but capacity is {capacity}")]
    Capacity {
        what: &'static str,
        required: usize,
        capacity: usize,
    },

    #[error("register of {atoms} atoms exceeds the state-vector limit of {max}; use the simulated-annealing backend instead")]
    RegisterTooLarge { atoms: usize, max: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("ragged input: element {index} has length {got}, expected {expected}")]
    Ragged {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("training set must contain both classes")]
    SingleClass,

    #[error("invalid label {0}; expected +1 or -1")]
    InvalidLabel(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),

    #[error("embedding infeasible: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("csv error at row {row}, column '{column}': {msg}")]
    Csv {
        row: usize,
        column: String,
        msg: String,
    },

    #[error("{learner} training failed: {source}")]
    Learner {
        learner: String,
        #[source]
        source: Box<Error>,
    },

    #[error("experiment failed (repeat {repeat}, model '{model}'): {source}")]
    Experiment {
        repeat: usize,
        model: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    CsvReader(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
