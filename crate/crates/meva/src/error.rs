use std::path::PathBuf;

/// Failures of the file formats and the command line.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("cannot parse row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv does not match the `{kind}` schema: {msg}")]
    SchemaMismatch { kind: String, msg: String },
    #[error(transparent)]
    Core(#[from] meva_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::InvalidConfig(msg.into())
}
