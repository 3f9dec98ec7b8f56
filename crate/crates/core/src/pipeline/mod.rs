//! Batch orchestration over scenes and frames.
//!
//! Every command processes frames on a bounded rayon pool. Frames are pure
//! functions of the immutable config and their own member files; each writes
//! its own output files and the manifest is assembled in frame order after
//! the pool joins, so outputs do not depend on the worker count.

pub mod config;
pub mod eval;
pub mod fog_sweep;
pub mod frames;
pub mod label;
pub mod tools;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Calibration;
use crate::io::calib::read_calibration;

pub use config::{FrameRange, PipelineConfig, SegSelection};
pub use eval::{run_eval, EvalOutcome};
pub use fog_sweep::run_fog_sweep;
pub use frames::FrameBundle;
pub use label::{label_frame, run_label};
pub use tools::{run_encode, run_export};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the command's output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub scene: u32,
    pub frame_id: u64,
    pub status: FrameStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default)]
    pub outputs: Vec<OutputFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// Record of one command run. Contains nothing time- or host-dependent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub frames: Vec<FrameEntry>,
}

impl Manifest {
    pub fn new(command: &str, config: &PipelineConfig, frames: Vec<FrameEntry>) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            frames,
        }
    }

    pub fn count(&self, status: FrameStatus) -> usize {
        self.frames.iter().filter(|f| f.status == status).count()
    }

    pub fn is_complete(&self) -> bool {
        self.count(FrameStatus::Ok) == self.frames.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        crate::io::write_bytes(&path, self.to_json().as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&crate::io::read_text(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Why a single frame produced no output.
#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("radar and camera timestamps differ by {offset}s (tolerance {tolerance}s)")]
    Unsynchronized { offset: f64, tolerance: f64 },
    #[error(transparent)]
    Failed(#[from] Error),
}

impl FrameError {
    pub fn status(&self) -> FrameStatus {
        match self {
            FrameError::Missing(_) | FrameError::Unsynchronized { .. } => FrameStatus::Skipped,
            FrameError::Failed(_) => FrameStatus::Failed,
        }
    }
}

pub(crate) fn member<'a>(path: &'a Option<PathBuf>, name: &'static str) -> Result<&'a Path, FrameError> {
    match path {
        Some(p) if p.is_file() => Ok(p),
        _ => Err(FrameError::Missing(name)),
    }
}

pub(crate) fn check_sync(bundle: &FrameBundle, config: &PipelineConfig) -> Result<(), FrameError> {
    if let (Some(tolerance), Some(offset)) = (config.sync_tolerance, bundle.sync_offset()) {
        if offset > tolerance {
            return Err(FrameError::Unsynchronized { offset, tolerance });
        }
    }
    Ok(())
}

/// Writes `bytes` under `root` and returns its manifest record.
pub(crate) fn emit(root: &Path, relative: &str, bytes: &[u8]) -> Result<OutputFile> {
    crate::io::write_bytes(&root.join(relative), bytes)?;
    Ok(OutputFile { path: relative.to_string(), sha256: sha256_hex(bytes) })
}

pub(crate) fn frame_stem(bundle: &FrameBundle) -> String {
    format!("scene_{}/frame_{:06}", bundle.scene, bundle.frame_id)
}

/// Frames selected by the config, grouped with their scene calibration.
pub(crate) struct Batch {
    pub frames: Vec<(FrameBundle, usize)>,
    pub calibrations: Vec<Calibration>,
}

/// Loads every selected scene. A missing scene index or calibration is a
/// configuration error; per-frame problems surface later.
pub(crate) fn load_batch(config: &PipelineConfig) -> Result<Batch> {
    let override_calib = match &config.calibration {
        Some(p) => Some(read_calibration(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut batch = Batch { frames: Vec::new(), calibrations: Vec::new() };
    for &scene in &config.scenes {
        let dir = frames::scene_dir(&config.dataset_root, scene);
        let calib = match &override_calib {
            Some(c) => c.clone(),
            None => {
                let p = dir.join(frames::CALIB_FILE);
                read_calibration(&p).map_err(|e| Error::Config(format!("scene {scene}: {e}")))?
            }
        };
        let bundles =
            frames::load_scene(&config.dataset_root, scene, |id| config.frames.is_none_or(|r| r.contains(id)))
                .map_err(|e| Error::Config(format!("scene {scene}: {e}")))?;
        let ci = batch.calibrations.len();
        batch.calibrations.push(calib);
        batch.frames.extend(bundles.into_iter().map(|b| (b, ci)));
    }
    Ok(batch)
}

/// Runs `work` on every item with `workers` threads; results keep input order.
pub(crate) fn run_pool<T, R, F>(workers: usize, items: &[T], work: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&work).collect()))
}

pub(crate) fn entry_for(
    bundle: &FrameBundle,
    result: Result<(Vec<OutputFile>, Option<usize>), FrameError>,
) -> FrameEntry {
    match result {
        Ok((outputs, points)) => FrameEntry {
            scene: bundle.scene,
            frame_id: bundle.frame_id,
            status: FrameStatus::Ok,
            reason: None,
            outputs,
            points,
        },
        Err(e) => {
            log::warn!("scene={} frame={} status={:?} reason={e}", bundle.scene, bundle.frame_id, e.status());
            FrameEntry {
                scene: bundle.scene,
                frame_id: bundle.frame_id,
                status: e.status(),
                reason: Some(e.to_string()),
                outputs: Vec::new(),
                points: None,
            }
        }
    }
}
