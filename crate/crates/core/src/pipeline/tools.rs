//! Single-file commands: `export` (labeled PLY re-encoding) and `encode`
//! (RAED cube to RAE volume).

use std::path::{Path, PathBuf};

use crate::encode::{normalize_rae, raed_to_rae};
use crate::error::{Error, Result};
use crate::io::ply::{self, Palette, PlyFormat};
use crate::io::tensor::{read_raed, write_rae};

use super::eval::read_labeled;

/// Rewrites one labeled PLY, or every `.ply` directly inside a directory,
/// with the given palette and encoding. Returns the files written.
pub fn run_export(input: &Path, output: &Path, palette: &Palette, format: PlyFormat) -> Result<Vec<PathBuf>> {
    let jobs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)
            .map_err(Error::io(input))?
            .map(|e| e.map(|e| e.path()).map_err(Error::io(input)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let dest = output.join(p.file_name().expect("file has a name"));
                (p, dest)
            })
            .collect()
    } else {
        vec![(input.to_path_buf(), output.to_path_buf())]
    };
    let mut written = Vec::with_capacity(jobs.len());
    for (src, dest) in jobs {
        let lpc = read_labeled(&src)?;
        ply::write_labeled(&dest, &lpc, palette, format)?;
        written.push(dest);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    /// Log-standardize with this epsilon; `None` writes raw mean power.
    pub normalize: Option<f64>,
    /// Require the `2×128×240×500` capture shape.
    pub require_standard_shape: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { normalize: Some(1e-6), require_standard_shape: true }
    }
}

pub fn run_encode(input: &Path, output: &Path, options: EncodeOptions) -> Result<()> {
    let raed = read_raed(input)?;
    if options.require_standard_shape {
        raed.check_standard_shape()?;
    }
    let mut rae = raed_to_rae(&raed)?;
    if let Some(eps) = options.normalize {
        rae = normalize_rae(&rae, eps)?;
    }
    write_rae(output, &rae)
}
