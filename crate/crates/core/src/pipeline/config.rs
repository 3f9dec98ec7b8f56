//! Pipeline configuration (TOML).
//!
//! ```toml
//! dataset_root = "data/scenes"
//! scenes = [2]
//! frames = "0..150"
//! seg_source = "fused"          # camera | radar | fused
//! output_dir = "out"
//! workers = 4
//!
//! [fog]
//! betas = [0.02, 0.04, 0.08, 0.15]
//! airlight = [0.8, 0.8, 0.8]
//! gamma = false
//!
//! [refine]
//! dbscan_eps = 1.0
//! dbscan_min_pts = 5
//! vote_thresholds = { pedestrian = 0.3, vehicle = 0.4, bicycle = 0.3 }
//! validation_radius = { pedestrian = 1.0, vehicle = 3.0, bicycle = 1.5 }
//!
//! [eval]
//! chamfer = "half_sum"
//! fog_level = 0.0
//! [eval.grid]
//! voxel_size = 0.5
//! bounds_min = [0.0, -25.0, -3.0]
//! bounds_max = [50.0, 25.0, 5.0]
//! crop_depth = 50.0
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fog::{Encoding, FogParams, DEFAULT_AIRLIGHT, DEFAULT_BETAS};
use crate::io::ply::PlyFormat;
use crate::metrics::{ChamferMode, EvalGrid};
use crate::refine::RefineConfig;

/// Which raster drives label sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegSelection {
    #[default]
    Camera,
    Radar,
    Fused,
}

impl SegSelection {
    pub fn as_str(self) -> &'static str {
        match self {
            SegSelection::Camera => "camera",
            SegSelection::Radar => "radar",
            SegSelection::Fused => "fused",
        }
    }

    /// Method name used in report tables.
    pub fn method_name(self) -> &'static str {
        match self {
            SegSelection::Camera => "camera only",
            SegSelection::Radar => "radar only",
            SegSelection::Fused => "camera + radar",
        }
    }
}

impl FromStr for SegSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "camera" => Ok(SegSelection::Camera),
            "radar" => Ok(SegSelection::Radar),
            "fused" => Ok(SegSelection::Fused),
            other => Err(Error::Config(format!("unknown segmentation source {other:?}"))),
        }
    }
}

/// Half-open frame id range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FrameRange {
    pub start: u64,
    pub end: u64,
}

impl FrameRange {
    pub fn contains(&self, id: u64) -> bool {
        id >= self.start && id < self.end
    }
}

impl FromStr for FrameRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("frame range {s:?} is not of the form a..b"));
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let start = a.trim().parse::<u64>().map_err(|_| bad())?;
        let end = b.trim().parse::<u64>().map_err(|_| bad())?;
        if end < start {
            return Err(Error::Config(format!("frame range {s:?} ends before it starts")));
        }
        Ok(FrameRange { start, end })
    }
}

impl TryFrom<String> for FrameRange {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FrameRange> for String {
    fn from(r: FrameRange) -> String {
        r.to_string()
    }
}

impl fmt::Display for FrameRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FogConfig {
    pub betas: Vec<f64>,
    pub airlight: [f64; 3],
    /// Apply fog to sRGB-decoded intensities instead of raw `/255` values.
    pub gamma: bool,
}

impl Default for FogConfig {
    fn default() -> Self {
        FogConfig { betas: DEFAULT_BETAS.to_vec(), airlight: DEFAULT_AIRLIGHT, gamma: false }
    }
}

impl FogConfig {
    pub fn encoding(&self) -> Encoding {
        if self.gamma {
            Encoding::Srgb
        } else {
            Encoding::Linear
        }
    }

    pub fn params(&self, beta: f64) -> FogParams {
        FogParams { beta, airlight: self.airlight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub grid: EvalGrid,
    pub chamfer: ChamferMode,
    /// Fog level written into report rows.
    pub fog_level: f64,
    /// Method name written into report rows; defaults to the segmentation source.
    pub method: Option<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { grid: EvalGrid::default(), chamfer: ChamferMode::HalfSum, fog_level: 0.0, method: None }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset_root: PathBuf,
    #[serde(default)]
    pub scenes: Vec<u32>,
    #[serde(default)]
    pub frames: Option<FrameRange>,
    /// Overrides each scene's `calib.txt`.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub seg_source: SegSelection,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub export_format: PlyFormat,
    /// Largest accepted radar/camera timestamp difference, seconds. Unset
    /// means frames are matched by id alone.
    #[serde(default)]
    pub sync_tolerance: Option<f64>,
    #[serde(default)]
    pub fog: FogConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

impl PipelineConfig {
    /// Config with defaults everywhere except the dataset root.
    pub fn new(dataset_root: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            dataset_root: dataset_root.into(),
            scenes: Vec::new(),
            frames: None,
            calibration: None,
            seg_source: SegSelection::default(),
            output_dir: default_output_dir(),
            workers: default_workers(),
            export_format: PlyFormat::default(),
            sync_tolerance: None,
            fog: FogConfig::default(),
            refine: RefineConfig::default(),
            eval: EvalConfig::default(),
        }
    }

    /// Parses TOML and resolves relative paths against `base_dir`. Does not
    /// touch the filesystem; see [`PipelineConfig::check_paths`].
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.dataset_root = base_dir.join(&cfg.dataset_root);
        cfg.output_dir = base_dir.join(&cfg.output_dir);
        cfg.calibration = cfg.calibration.map(|p| base_dir.join(p));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::from_toml_str(&text, base)?;
        cfg.check_paths()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.sync_tolerance.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::Config("sync_tolerance must be non-negative".into()));
        }
        for &beta in &self.fog.betas {
            self.fog.params(beta).validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.fog.betas.is_empty() {
            self.fog.params(0.0).validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.refine.validate()?;
        self.eval.grid.validate()?;
        Ok(())
    }

    /// Referenced inputs must exist.
    pub fn check_paths(&self) -> Result<()> {
        if !self.dataset_root.is_dir() {
            return Err(Error::Config(format!("dataset_root {} is not a directory", self.dataset_root.display())));
        }
        if let Some(c) = &self.calibration {
            if !c.is_file() {
                return Err(Error::Config(format!("calibration {} does not exist", c.display())));
            }
        }
        Ok(())
    }

    /// Digest of everything that affects outputs. The output directory and
    /// worker count are excluded.
    pub fn hash(&self) -> String {
        let mut normalized = self.clone();
        normalized.output_dir = PathBuf::new();
        normalized.workers = 0;
        let json = serde_json::to_vec(&normalized).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn method_name(&self) -> String {
        self.eval.method.clone().unwrap_or_else(|| self.seg_source.method_name().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let toml: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start().to_string() + "\n")
            .collect();
        let cfg = PipelineConfig::from_toml_str(&toml, Path::new("/base")).unwrap();
        assert_eq!(cfg.dataset_root, Path::new("/base/data/scenes"));
        assert_eq!(cfg.frames, Some(FrameRange { start: 0, end: 150 }));
        assert_eq!(cfg.seg_source, SegSelection::Fused);
        assert_eq!(cfg.fog.betas, DEFAULT_BETAS.to_vec());
        assert_eq!(cfg.refine, RefineConfig::default());
        assert_eq!(cfg.eval.grid, EvalGrid::default());
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = PipelineConfig::from_toml_str("dataset_root = \"d\"", Path::new("")).unwrap();
        assert_eq!(cfg.workers, 1);
        assert!(cfg.scenes.is_empty());
        assert!(PipelineConfig::from_toml_str("", Path::new("")).is_err());
        assert!(PipelineConfig::from_toml_str("dataset_root = \"d\"\nbogus = 1", Path::new("")).is_err());
        assert!(PipelineConfig::from_toml_str("dataset_root = \"d\"\nseg_source = \"lidar\"", Path::new("")).is_err());
        assert!(PipelineConfig::from_toml_str("dataset_root = \"d\"\nframes = \"5..2\"", Path::new("")).is_err());
        assert!(PipelineConfig::from_toml_str("dataset_root = \"d\"\n[fog]\nbetas = [-1.0]", Path::new("")).is_err());
        assert!(
            PipelineConfig::from_toml_str("dataset_root = \"d\"\n[refine]\ndbscan_eps = 0.0", Path::new("")).is_err()
        );
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a = PipelineConfig::new("/data");
        let mut b = a.clone();
        b.output_dir = "/elsewhere".into();
        b.workers = 8;
        assert_eq!(a.hash(), b.hash());
        b.refine.dbscan_eps = 2.0;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn frame_range() {
        let r: FrameRange = "3..7".parse().unwrap();
        assert!(r.contains(3) && r.contains(6) && !r.contains(7));
        assert_eq!(r.to_string(), "3..7");
        assert!("3-7".parse::<FrameRange>().is_err());
    }
}
