//! Batch front end: problem files in, JSON reports and CSV grids out.

pub mod app;
pub mod commands;
pub mod config;
pub mod export;
pub mod report;

use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use commands::{cmd_certify, cmd_check, cmd_deform, cmd_fixture, cmd_stein};
pub use config::{load_problem, parse_problem, ConfigError, ProblemSpec};
pub use export::{grid_export, ExportField};
pub use report::{CertificateSummary, Report};

/// Exit code for configuration, usage and I/O errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("export supports dimensions up to {max}, got {0}", max = export::MAX_EXPORT_DIM)]
    UnsupportedDim(usize),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}
