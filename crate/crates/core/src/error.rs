use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("OU model is not viable: {0}")]
    ModelNotViable(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}:{line}: invalid record: {msg}", path.display())]
    InvalidRecord {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{}:{line}: timestamp {timestamp} is not after the previous one", path.display())]
    NonMonotone {
        path: PathBuf,
        line: u64,
        timestamp: i64,
    },

    #[error("serialization: {0}")]
    Serialize(String),
}

impl Error {
    /// Stable machine-readable category used by the command-line tool.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) | Error::Inconsistent(_) => "config",
            Error::DegenerateSeries(_) | Error::EmptyInput(_) => "data",
            Error::ModelNotViable(_) => "model",
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::InvalidRecord { .. } | Error::NonMonotone { .. } => "input",
            Error::Serialize(_) => "output",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "io" => 2,
            "input" => 3,
            "config" => 4,
            "model" => 5,
            "data" => 6,
            _ => 1,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
