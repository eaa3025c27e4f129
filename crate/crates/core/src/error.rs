use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input text. `line` and `column` are 1-based.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("syntax error at byte {offset}: {message}; expected one of {}", expected.join(" "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("index {index} out of range for {axis} of length {len}")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        len: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input rather than by computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::DivisionByZero | Error::Numeric(_))
    }
}
