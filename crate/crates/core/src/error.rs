use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories. `exit_code` maps them onto the CLI contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("config syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    /// 2 for configuration/validation problems, 3 for runtime and numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. } | Error::Field { .. } | Error::UnknownPreset(_) => 2,
            Error::Input(_) => 2,
            Error::Degenerate(_) | Error::Fit(_) | Error::Data(_) | Error::Io(_) => 3,
        }
    }
}
