use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration or input data rejected; every problem is listed.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("missing artifact {artifact}; run `fbns {producer}` first")]
    MissingArtifact { artifact: String, producer: &'static str },

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::MissingArtifact { .. } => 3,
        }
    }
}

impl From<fuzzy_bns::Error> for CliError {
    fn from(e: fuzzy_bns::Error) -> Self {
        match e {
            fuzzy_bns::Error::Parse { .. } | fuzzy_bns::Error::Validation { .. } => CliError::Validation(vec![e.to_string()]),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
