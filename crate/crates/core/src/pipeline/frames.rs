//! Scene layout and frame index.
//!
//! ```text
//! <dataset_root>/scene_<id>/
//!     calib.txt
//!     frames.csv
//!     ...member files referenced from frames.csv
//! ```
//!
//! `frames.csv` has the header
//! `frame_id,radar_timestamp,camera_timestamp,points,image,camera_seg,radar_seg,depth`.
//! Member paths are relative to the scene directory; an empty cell means the
//! member is absent. Frame ids must be strictly increasing.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "frames.csv";
pub const CALIB_FILE: &str = "calib.txt";

pub fn scene_dir(dataset_root: &Path, scene: u32) -> PathBuf {
    dataset_root.join(format!("scene_{scene}"))
}

/// One row of a frame index, paths as written.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub radar_timestamp: Option<f64>,
    pub camera_timestamp: Option<f64>,
    pub points: Option<String>,
    pub image: Option<String>,
    pub camera_seg: Option<String>,
    pub radar_seg: Option<String>,
    pub depth: Option<String>,
}

pub fn parse_frame_index(bytes: &[u8]) -> Result<Vec<FrameRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let mut records: Vec<FrameRecord> = Vec::new();
    for row in reader.deserialize() {
        let rec: FrameRecord = row.map_err(|e| Error::Parse(format!("frame index: {e}")))?;
        for ts in [rec.radar_timestamp, rec.camera_timestamp].into_iter().flatten() {
            if !ts.is_finite() {
                return Err(Error::Parse(format!("frame {}: timestamp is not finite", rec.frame_id)));
            }
        }
        if let Some(prev) = records.last() {
            if rec.frame_id <= prev.frame_id {
                return Err(Error::Parse(format!(
                    "frame index: frame id {} follows {}; ids must be strictly increasing",
                    rec.frame_id, prev.frame_id
                )));
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// A frame with member paths resolved against its scene directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub scene: u32,
    pub frame_id: u64,
    pub radar_timestamp: Option<f64>,
    pub camera_timestamp: Option<f64>,
    pub points: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub camera_seg: Option<PathBuf>,
    pub radar_seg: Option<PathBuf>,
    pub depth: Option<PathBuf>,
}

impl FrameBundle {
    pub fn from_record(scene: u32, dir: &Path, rec: &FrameRecord) -> Self {
        let resolve = |p: &Option<String>| p.as_ref().map(|p| dir.join(p));
        FrameBundle {
            scene,
            frame_id: rec.frame_id,
            radar_timestamp: rec.radar_timestamp,
            camera_timestamp: rec.camera_timestamp,
            points: resolve(&rec.points),
            image: resolve(&rec.image),
            camera_seg: resolve(&rec.camera_seg),
            radar_seg: resolve(&rec.radar_seg),
            depth: resolve(&rec.depth),
        }
    }

    /// `None` when either timestamp is absent.
    pub fn sync_offset(&self) -> Option<f64> {
        Some((self.radar_timestamp? - self.camera_timestamp?).abs())
    }
}

/// Reads a scene's frame index; frames outside `filter` are dropped.
pub fn load_scene(dataset_root: &Path, scene: u32, filter: impl Fn(u64) -> bool) -> Result<Vec<FrameBundle>> {
    let dir = scene_dir(dataset_root, scene);
    let bytes = crate::io::read_bytes(&dir.join(INDEX_FILE))?;
    Ok(parse_frame_index(&bytes)?
        .iter()
        .filter(|r| filter(r.frame_id))
        .map(|r| FrameBundle::from_record(scene, &dir, r))
        .collect())
}
