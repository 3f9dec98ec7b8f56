//! On-disk formats.
//!
//! | format | module |
//! |---|---|
//! | calibration `key=value` text | [`calib`] |
//! | binary tensor container (radar cubes, depth maps) | [`tensor`] |
//! | PLY point clouds with labels and palette colors | [`ply`] |
//! | 8-bit class rasters with a sidecar | [`segmap`] |
//! | 8-bit camera images | [`image`] |
//!
//! Every decoder works on an in-memory buffer and never panics on malformed
//! input; the path-based helpers are thin wrappers.

pub mod calib;
pub mod image;
pub mod ply;
pub mod segmap;
pub mod tensor;

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(Error::io(path))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(Error::io(path))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
        }
    }
    std::fs::write(path, bytes).map_err(Error::io(path))
}
