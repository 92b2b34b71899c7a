use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine { path: PathBuf, line: usize, reason: String },
    #[error("{path}:{line}: missing field `{field}`")]
    MissingField { path: PathBuf, line: usize, field: &'static str },
    #[error("{path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
    #[error("message {message_id}: {source}")]
    Record {
        message_id: u64,
        #[source]
        source: replyset_core::Error,
    },
    #[error(transparent)]
    Core(#[from] replyset_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn bad_file(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::BadFile { path: path.into(), reason: reason.into() }
    }

    /// 1 for usage errors, 2 for anything wrong with the data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Core(replyset_core::Error::InvalidConfig(_)) => 1,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Io { .. } => "io",
            Self::MalformedLine { .. } => "malformed_line",
            Self::MissingField { .. } => "missing_field",
            Self::BadFile { .. } => "bad_file",
            Self::Record { .. } => "record",
            Self::Core(_) => "data",
        }
    }

    /// Single-line JSON form written to stderr.
    pub fn to_json_line(&self) -> String {
        let mut obj = json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        });
        let extra = &mut obj["error"];
        match self {
            Self::MalformedLine { line, .. } => extra["line"] = json!(line),
            Self::Record { message_id, .. } => extra["message_id"] = json!(message_id),
            Self::MissingField { line, field, .. } => {
                extra["line"] = json!(line);
                extra["field"] = json!(field);
            }
            _ => {}
        }
        obj.to_string()
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
