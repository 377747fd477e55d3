use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grammar: {0}")]
    Grammar(String),

    #[error("task: {0}")]
    Task(String),

    #[error("unbound argument `{0}`")]
    UnboundArgument(String),

    #[error("cannot parse program `{text}`: {reason}")]
    ProgramSyntax { text: String, reason: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error("weight file: {0}")]
    Weights(String),

    #[error("probability {0} outside (0, 1]")]
    Probability(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}, column {column}: {message}")]
    Json {
        context: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn json(context: impl Into<String>, err: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
