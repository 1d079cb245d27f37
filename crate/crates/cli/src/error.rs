use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Assertion(String),

    #[error(transparent)]
    Core(#[from] plateau::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl CliError {
    /// 2 configuration, 3 budget refusal, 4 failed check, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use plateau::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Assertion(_) => 4,
            CliError::Core(E::Budget { .. }) => 3,
            CliError::Core(E::Domain(_) | E::Geometry(_) | E::GeometryMismatch(_) | E::Parse(_)) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "budget",
            4 => "assertion",
            _ => "runtime",
        }
    }

    /// One-line JSON written to stderr.
    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind(), "code": self.exit_code(), "message": self.to_string() });
        if let CliError::Core(plateau::Error::Budget { what, estimate, limit }) = self {
            v["budget"] = json!({ "what": what, "estimate": estimate, "limit": limit });
        }
        v.to_string()
    }
}
