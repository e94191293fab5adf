//! Command-line front end for `kerrsim`.
//!
//! Every JSON document carries a top-level `schema_version`; CSV outputs
//! have a header row. Runs are deterministic for a fixed seed and config.

pub mod commands;
pub mod config;
pub mod error;

use std::path::Path;

pub use commands::{execute, Artifacts};
pub use config::Cli;
pub use error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Writes the artifacts to their destinations (standard output when no
/// output path is configured).
pub fn emit(artifacts: &Artifacts) -> CliResult<()> {
    match &artifacts.output {
        Some(path) => write_file(path, &artifacts.primary)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(artifacts.primary.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
        }
    }
    if let Some((path, contents)) = &artifacts.sidecar {
        write_file(path, contents)?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    emit(&execute(&cli.command)?)
}
