use horizonlab_core::Error as CoreError;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Numerical { context: String, source: CoreError },
    #[error("acceptance failures: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn numerical(context: impl Into<String>) -> impl FnOnce(CoreError) -> CliError {
        let context = context.into();
        move |source| CliError::Numerical { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { source: CoreError::Dimension { .. }, .. } => 2,
            CliError::Numerical { source: CoreError::NonConvergence { .. }, .. } => 3,
            CliError::Numerical { source: CoreError::BarrierNotFound(_), .. } => 4,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "non_convergence",
            4 => "regime",
            _ => match self {
                CliError::Io(_) => "io",
                CliError::Acceptance(_) => "acceptance",
                _ => "numerical",
            },
        }
    }

    /// Machine-readable error document.
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
