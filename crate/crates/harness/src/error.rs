use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Malformed or invalid configuration (exit code 3).
    #[error("config error: {0}")]
    Config(String),
    #[error("constants cache {path} unavailable ({reason}); run `shc constants --config constants/oracle.toml --out constants` to regenerate it")]
    MissingConstants { path: String, reason: String },
    #[error(transparent)]
    Core(#[from] shc_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
