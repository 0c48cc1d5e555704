use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or spin vector does not match the problem size.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The requested exhaustive computation exceeds the configured cap.
    #[error("capacity exceeded: {what} requires {required}, cap is {cap}")]
    Capacity {
        what: &'static str,
        required: usize,
        cap: usize,
    },

    /// Invalid input value or malformed argument.
    #[error("invalid input: {0}")]
    Input(String),

    /// A field or coupling left its declared range.
    #[error("range violation: {what} = {value} outside [{lo}, {hi}]")]
    Range {
        what: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An embedding failed validation.
    #[error("invalid embedding: {0}")]
    EmbeddingInvalid(String),

    /// The collapse reference value cannot be reached on a curve.
    #[error("reference value {m0} unreachable on curve {curve}")]
    Reference { m0: f64, curve: String },

    /// A moment vector with zero norm cannot be normalized.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// File parsing failure.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for validation failures, 3 for
    /// capacity errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Dimension { .. }
            | Error::Input(_)
            | Error::Range { .. }
            | Error::EmbeddingInvalid(_)
            | Error::Reference { .. }
            | Error::Degenerate(_)
            | Error::Parse { .. } => 2,
            Error::Io(_) => 1,
        }
    }
}
