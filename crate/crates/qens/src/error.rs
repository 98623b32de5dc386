use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("state norm is {norm}, expected 1 within {tolerance:e}")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error(
        "outcome {outcome} on qubit {qubit} has probability {probability:e}; nothing to postselect"
    )]
    ImpossibleOutcome {
        qubit: usize,
        outcome: u8,
        probability: f64,
    },

    #[error("dense reference path supports at most {max} qubits, got {got}")]
    DenseTooLarge { max: usize, got: usize },

    #[error("cannot unit-normalize a vector with norm {norm:e}")]
    ZeroVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),

    #[error("every branch has zero probability mass; the combination is undefined")]
    DegenerateCombination,

    #[error("labels contain a single class; cannot fit")]
    DegenerateLabels,

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}{}: {message}", location_suffix(.row, .column))]
    Dataset {
        path: String,
        row: Option<usize>,
        column: Option<String>,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location_suffix(row: &Option<usize>, column: &Option<String>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" (row {r}, column {c})"),
        (Some(r), None) => format!(" (row {r})"),
        (None, Some(c)) => format!(" (column {c})"),
        (None, None) => String::new(),
    }
}

impl Error {
    /// Process exit code category used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Dataset { .. } => 3,
            Error::Io(_) => 5,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
