use std::path::PathBuf;

/// Failures reported by the command line. Each has a stable kind name used in
/// the JSON error line.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("config key {key}: {reason}")]
    InvalidConfig { key: String, reason: String },
    #[error("artifact {path}: format version {found}, this build reads {expected}")]
    VersionMismatch { path: PathBuf, found: u64, expected: u64 },
    #[error("artifact {path}: {message}")]
    BadArtifact { path: PathBuf, message: String },
    #[error("missing run output {0}; run `hourcast benchmark` first")]
    MissingRunOutput(PathBuf),
    #[error(transparent)]
    Core(#[from] hourcast_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.into(), message: e.to_string() }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Io { .. } => "Io".into(),
            CliError::Csv { .. } => "Csv".into(),
            CliError::InvalidConfig { .. } => "InvalidConfig".into(),
            CliError::VersionMismatch { .. } => "VersionMismatch".into(),
            CliError::BadArtifact { .. } => "BadArtifact".into(),
            CliError::MissingRunOutput(_) => "MissingRunOutput".into(),
            CliError::Core(e) => format!("{e:?}").chars().take_while(char::is_ascii_alphanumeric).collect(),
        }
    }

    /// `{"error": kind, "message": text}`.
    pub fn json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;
