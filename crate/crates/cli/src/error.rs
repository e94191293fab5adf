use kerrsim::KerrError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Kerr(#[from] KerrError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    schema_version: u32,
    exit_code: i32,
    error: ErrorBody<'a>,
}

impl CliError {
    /// 2 for bad configuration or parameters, 3 for a numerically void
    /// homodyne outcome, 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Kerr(KerrError::VoidOutcome { .. }) => 3,
            CliError::Kerr(_) => 2,
            CliError::Io { .. } => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Kerr(KerrError::VoidOutcome { .. }) => "void_outcome",
            CliError::Kerr(_) => "parameter",
            CliError::Io { .. } => "io",
        }
    }

    /// Single-line JSON document for standard error.
    pub fn to_json(&self) -> String {
        let doc = ErrorDoc {
            schema_version: crate::SCHEMA_VERSION,
            exit_code: self.exit_code(),
            error: ErrorBody { kind: self.kind(), message: self.to_string() },
        };
        serde_json::to_string(&doc).expect("error document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let void = CliError::from(KerrError::VoidOutcome { x: 80.0 });
        assert_eq!(void.exit_code(), 3);
        let doc: serde_json::Value = serde_json::from_str(&void.to_json()).unwrap();
        assert_eq!(doc["exit_code"], 3);
        assert_eq!(doc["error"]["kind"], "void_outcome");
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(KerrError::InvalidParameter("x".into())).exit_code(), 2);
        let io = CliError::Io { path: "p".into(), source: std::io::Error::other("denied") };
        assert_eq!(io.exit_code(), 1);
    }
}
