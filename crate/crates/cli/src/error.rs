use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ionwalk::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    /// 2 for configuration and input errors, 3 for everything that fails
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_input_error() => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_input_error() => "input",
            CliError::Core(ionwalk::Error::Truncation { .. }) => "truncation",
            CliError::Core(ionwalk::Error::Step { .. }) => "step",
            CliError::Core(ionwalk::Error::IllConditioned { .. }) => "ill_conditioned",
            CliError::Core(_) => "numerical",
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::Json(_) => "json",
        }
    }

    pub fn to_json(&self, scenario: Option<&str>) -> Value {
        json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
                "scenario": scenario,
            }
        })
    }
}
