//! On-disk formats for fixtures and CLI output.
//!
//! All writers go through [`write_atomic`] (write to a sibling temp file,
//! then rename) so an interrupted run never leaves a partial file behind.

pub mod flo;
pub mod model;
pub mod plane;
pub mod ppm;

use std::fs;
use std::path::Path;

use crate::error::Result;

/// Writes `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(err) => {
            let _ = fs::remove_file(&tmp);
            Err(err.into())
        }
    }
}
