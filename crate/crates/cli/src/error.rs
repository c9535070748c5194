use serde_json::json;
use thiserror::Error;
use usc_laser::LaserError;

/// Every way a command can fail. Exit code 1 means the inputs were wrong,
/// 2 means the run itself failed.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read config {path}: {message}")]
    ConfigIo { path: String, message: String },

    #[error("config parse error at line {line}, column {column} (key `{key}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        key: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(LaserError),

    #[error("solver failure: {0}")]
    Solver(LaserError),

    #[error("solver failure: {0}")]
    Unconverged(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::ConfigIo { .. } | CliError::Parse { .. } | CliError::Config(_) => 1,
            CliError::Solver(_) | CliError::Unconverged(_) | CliError::Verification(_) | CliError::Output { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::ConfigIo { .. } => "config_io",
            CliError::Parse { .. } => "parse_error",
            CliError::Config(_) => "invalid_config",
            CliError::Solver(_) | CliError::Unconverged(_) => "solver_failure",
            CliError::Verification(_) => "verification_failure",
            CliError::Output { .. } => "output_io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        });
        if let CliError::Parse { line, column, key, .. } = self {
            v["error"]["line"] = json!(line);
            v["error"]["column"] = json!(column);
            v["error"]["key"] = json!(key);
        }
        v
    }
}

impl From<LaserError> for CliError {
    /// Bad inputs map to configuration errors, everything else to solver
    /// failures.
    fn from(e: LaserError) -> Self {
        match e {
            LaserError::InvalidParameter { .. } | LaserError::InvalidGrid(_) | LaserError::DegenerateRate(_) => {
                CliError::Config(e)
            }
            _ => CliError::Solver(e),
        }
    }
}
