use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] gridge_core::Error),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("dataset: {0}")]
    Csv(String),
    #[error("dataset: unknown column `{0}`")]
    UnknownColumn(String),
    #[error("dataset: line {line}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("dataset: duplicate column name `{0}`")]
    DuplicateHeader(String),
    #[error("cli: {0}")]
    Usage(String),
    #[error("report: {0}")]
    Report(String),
}

impl Error {
    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
