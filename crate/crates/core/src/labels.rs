//! Segmentation rasters, per-point label sampling and camera/radar raster fusion.

use std::fmt;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, ProjectedPoints};

/// Number of semantic classes.
pub const NUM_CLASSES: usize = 5;

/// Semantic class. The discriminant order matches the class-weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum ClassId {
    #[default]
    Background = 0,
    Scenario = 1,
    Pedestrian = 2,
    Vehicle = 3,
    Bicycle = 4,
}

impl ClassId {
    pub const ALL: [ClassId; NUM_CLASSES] =
        [ClassId::Background, ClassId::Scenario, ClassId::Pedestrian, ClassId::Vehicle, ClassId::Bicycle];

    /// Movable targets that take part in cluster voting.
    pub const OBJECTS: [ClassId; 3] = [ClassId::Pedestrian, ClassId::Vehicle, ClassId::Bicycle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_object(self) -> bool {
        matches!(self, ClassId::Pedestrian | ClassId::Vehicle | ClassId::Bicycle)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassId::Background => "background",
            ClassId::Scenario => "scenario",
            ClassId::Pedestrian => "pedestrian",
            ClassId::Vehicle => "vehicle",
            ClassId::Bicycle => "bicycle",
        }
    }
}

impl TryFrom<u8> for ClassId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        ClassId::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| Error::InvalidValue(format!("class index {v} out of range 0..{NUM_CLASSES}")))
    }
}

impl From<ClassId> for u8 {
    fn from(c: ClassId) -> u8 {
        c as u8
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which segmentation produced a raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegSource {
    Camera,
    RadarDepth,
    Fused,
}

impl SegSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SegSource::Camera => "camera",
            SegSource::RadarDepth => "radar_depth",
            SegSource::Fused => "fused",
        }
    }
}

impl std::str::FromStr for SegSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "camera" => Ok(SegSource::Camera),
            "radar_depth" | "radar" => Ok(SegSource::RadarDepth),
            "fused" => Ok(SegSource::Fused),
            other => Err(Error::Parse(format!("unknown segmentation source {other:?}"))),
        }
    }
}

/// H×W raster of class indices, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMap {
    width: u32,
    height: u32,
    classes: Vec<u8>,
    source: SegSource,
}

impl SegMap {
    pub fn new(width: u32, height: u32, classes: Vec<u8>, source: SegSource) -> Result<Self> {
        let expected = width as usize * height as usize;
        if classes.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "raster of {width}x{height} needs {expected} values, got {}",
                classes.len()
            )));
        }
        if let Some(bad) = classes.iter().find(|&&c| c as usize >= NUM_CLASSES) {
            return Err(Error::InvalidValue(format!("raster value {bad} is not a class index")));
        }
        Ok(SegMap { width, height, classes, source })
    }

    pub fn filled(width: u32, height: u32, class: ClassId, source: SegSource) -> Self {
        SegMap { width, height, classes: vec![class as u8; width as usize * height as usize], source }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn source(&self) -> SegSource {
        self.source
    }

    pub fn raw(&self) -> &[u8] {
        &self.classes
    }

    /// Class at column `x`, row `y`; `None` outside the raster.
    pub fn get(&self, x: i64, y: i64) -> Option<ClassId> {
        if x < 0 || y < 0 || x >= i64::from(self.width) || y >= i64::from(self.height) {
            return None;
        }
        let v = self.classes[y as usize * self.width as usize + x as usize];
        Some(ClassId::ALL[v as usize])
    }

    pub fn set(&mut self, x: u32, y: u32, class: ClassId) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) outside raster");
        self.classes[y as usize * self.width as usize + x as usize] = class as u8;
    }
}

/// Point cloud with one class per point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledPointCloud {
    pub frame_id: u64,
    pub points: Vec<Point3<f64>>,
    pub labels: Vec<ClassId>,
    /// False for points that failed the visibility mask and were labeled
    /// background without sampling a raster.
    pub projected: Vec<bool>,
}

impl LabeledPointCloud {
    pub fn new(frame_id: u64, points: Vec<Point3<f64>>, labels: Vec<ClassId>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!("{} points but {} labels", points.len(), labels.len())));
        }
        let projected = vec![true; points.len()];
        Ok(LabeledPointCloud { frame_id, points, labels, projected })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, class: ClassId) -> usize {
        self.labels.iter().filter(|&&c| c == class).count()
    }
}

/// Nearest integer, ties toward the lower index.
pub fn round_half_down(x: f64) -> i64 {
    (x - 0.5).ceil() as i64
}

/// Samples a class for every visible point; the rest are background and
/// flagged as not projected. Never drops or moves points.
pub fn sample_labels(pc: &PointCloud, proj: &ProjectedPoints, seg: &SegMap) -> Result<LabeledPointCloud> {
    if proj.pixels.len() != proj.source_indices.len() || proj.depths.len() != proj.source_indices.len() {
        return Err(Error::DimensionMismatch("projected point arrays differ in length".into()));
    }
    let n = pc.points.len();
    let mut labels = vec![ClassId::Background; n];
    let mut projected = vec![false; n];
    for (pixel, &i) in proj.pixels.iter().zip(&proj.source_indices) {
        if i >= n {
            return Err(Error::InvalidValue(format!("projected index {i} outside cloud of {n} points")));
        }
        let (col, row) = (round_half_down(pixel.x), round_half_down(pixel.y));
        labels[i] = seg.get(col, row).unwrap_or(ClassId::Background);
        projected[i] = true;
    }
    Ok(LabeledPointCloud { frame_id: pc.frame_id, points: pc.points.clone(), labels, projected })
}

/// Camera raster is primary; radar fills pixels the camera left as background.
pub fn fuse_segmaps(cam: &SegMap, rad: &SegMap) -> Result<SegMap> {
    if cam.width != rad.width || cam.height != rad.height {
        return Err(Error::DimensionMismatch(format!(
            "camera raster {}x{} vs radar raster {}x{}",
            cam.width, cam.height, rad.width, rad.height
        )));
    }
    let bg = ClassId::Background as u8;
    let classes = cam.classes.iter().zip(&rad.classes).map(|(&c, &r)| if c == bg && r != bg { r } else { c }).collect();
    Ok(SegMap { width: cam.width, height: cam.height, classes, source: SegSource::Fused })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{project_points, Calibration};
    use nalgebra::{Point2, Vector3};

    fn px(cam: u8, rad: u8) -> u8 {
        let c = SegMap::new(1, 1, vec![cam], SegSource::Camera).unwrap();
        let r = SegMap::new(1, 1, vec![rad], SegSource::RadarDepth).unwrap();
        fuse_segmaps(&c, &r).unwrap().raw()[0]
    }

    #[test]
    fn fusion_cases() {
        assert_eq!(px(0, 3), 3);
        assert_eq!(px(2, 3), 2);
        assert_eq!(px(0, 0), 0);
    }

    #[test]
    fn fusion_dimension_mismatch() {
        let c = SegMap::filled(4, 3, ClassId::Background, SegSource::Camera);
        let r = SegMap::filled(3, 4, ClassId::Background, SegSource::RadarDepth);
        assert!(matches!(fuse_segmaps(&c, &r), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn raster_rejects_bad_values() {
        assert!(SegMap::new(2, 1, vec![0, 5], SegSource::Camera).is_err());
        assert!(SegMap::new(2, 2, vec![0, 1], SegSource::Camera).is_err());
    }

    #[test]
    fn rounding_ties_go_down() {
        assert_eq!(round_half_down(2.5), 2);
        assert_eq!(round_half_down(2.5000001), 3);
        assert_eq!(round_half_down(2.4999), 2);
        assert_eq!(round_half_down(0.5), 0);
        assert_eq!(round_half_down(0.0001), 0);
    }

    #[test]
    fn empty_projection_labels_everything_background() {
        let pc = PointCloud::new(1, vec![Point3::new(1.0, 2.0, 3.0); 4]).unwrap();
        let seg = SegMap::filled(10, 10, ClassId::Vehicle, SegSource::Camera);
        let lpc = sample_labels(&pc, &ProjectedPoints::default(), &seg).unwrap();
        assert_eq!(lpc.labels, vec![ClassId::Background; 4]);
        assert_eq!(lpc.projected, vec![false; 4]);
        assert_eq!(lpc.points, pc.points);
    }

    #[test]
    fn uniform_vehicle_raster() {
        let calib = Calibration {
            roll: 0.0,
            pitch: 0.0,
            yaw: 0.0,
            translation: Vector3::zeros(),
            intrinsics: Calibration::pinhole(100.0, 100.0, 50.0, 40.0, 0.0),
            image_width: 100,
            image_height: 80,
            max_depth: 50.0,
        };
        let pc = PointCloud::new(0, vec![Point3::new(0.3, -0.2, 7.0)]).unwrap();
        let proj = project_points(&pc, &calib);
        let seg = SegMap::filled(100, 80, ClassId::Vehicle, SegSource::Camera);
        let lpc = sample_labels(&pc, &proj, &seg).unwrap();
        assert_eq!(lpc.labels, vec![ClassId::Vehicle]);
        assert!(lpc.projected[0]);
    }

    #[test]
    fn pixel_rounding_past_the_edge_is_background() {
        let pc = PointCloud::new(0, vec![Point3::origin()]).unwrap();
        let proj = ProjectedPoints { pixels: vec![Point2::new(9.7, 3.0)], depths: vec![1.0], source_indices: vec![0] };
        let seg = SegMap::filled(10, 10, ClassId::Pedestrian, SegSource::Camera);
        let lpc = sample_labels(&pc, &proj, &seg).unwrap();
        assert_eq!(lpc.labels[0], ClassId::Background);
        assert!(lpc.projected[0]);
    }

    #[test]
    fn out_of_range_source_index() {
        let pc = PointCloud::new(0, vec![Point3::origin()]).unwrap();
        let proj = ProjectedPoints { pixels: vec![Point2::new(1.0, 1.0)], depths: vec![1.0], source_indices: vec![3] };
        let seg = SegMap::filled(4, 4, ClassId::Pedestrian, SegSource::Camera);
        assert!(sample_labels(&pc, &proj, &seg).is_err());
    }

    #[test]
    fn class_id_conversions() {
        for c in ClassId::ALL {
            assert_eq!(ClassId::try_from(u8::from(c)).unwrap(), c);
        }
        assert!(ClassId::try_from(5).is_err());
        assert!(ClassId::Vehicle.is_object());
        assert!(!ClassId::Scenario.is_object());
    }
}
