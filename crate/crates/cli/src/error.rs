use thiserror::Error;

/// CLI failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration, flags or output location. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Unreadable or malformed input data. Exit code 3.
    #[error("data error: {0}")]
    Data(String),
    /// Numerical failure during computation. Exit code 4.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    /// Maps a library error raised while setting up a run.
    pub fn setup(e: orthant_enet::Error) -> Self {
        use orthant_enet::Error as E;
        match e {
            E::Dimension(_) | E::DegeneratePredictor { .. } => CliError::Data(e.to_string()),
            E::Numeric(_) | E::ChainFailure { .. } | E::SeriesDivergence { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }

    /// Maps a library error raised during sampling or estimation.
    pub fn compute(e: orthant_enet::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
