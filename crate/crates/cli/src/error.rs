use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] greenbound::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 for convergence failures and rejected supersolutions, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use greenbound::Error as E;
        match self {
            CliError::Core(E::NotConverged { .. } | E::NonFinite { .. } | E::NotSupersolution { .. }) => 2,
            _ => 1,
        }
    }
}
