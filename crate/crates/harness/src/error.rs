use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad command line or configuration.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] mixfield::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
