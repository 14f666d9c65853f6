pub mod gradcheck;
pub mod predict;
pub mod score;
pub mod stats;
pub mod synth;
pub mod train;

use std::path::Path;

use arglab_core::{Error, Result};

pub(crate) fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Validation(format!("serializing report: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}
