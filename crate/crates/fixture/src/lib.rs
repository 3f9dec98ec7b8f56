//! Synthetic scenes in the dataset layout read by `radlabel`.
//!
//! Each frame holds a wall (scenario), a vehicle, a pedestrian, a bicycle
//! and sparse clutter, in radar coordinates with x forward, y left, z up.
//! The camera segmentation paints projected bounding boxes of the wall,
//! vehicle and pedestrian; the radar-depth segmentation paints the vehicle
//! and the bicycle, which the camera misses. Everything is a deterministic
//! function of the scene seed and frame id.
//!
//! ```text
//! <root>/
//!     radlabel.toml
//!     data/scene_<s>/{calib.txt, frames.csv, points/, image/, camera_seg/, radar_seg/, depth/}
//!     truth/scene_<s>/frame_<id>.ply
//! ```

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radlabel::fog::{DepthImage, Encoding, LinearImage};
use radlabel::geometry::{build_transform, project_point, Calibration, PointCloud};
use radlabel::io::ply::{Palette, PlyFormat};
use radlabel::io::{calib, image, ply, segmap, tensor};
use radlabel::labels::{ClassId, LabeledPointCloud, SegMap, SegSource};
use radlabel::Result;

pub const WIDTH: u32 = 96;
pub const HEIGHT: u32 = 64;

/// Camera looking along radar +x, mounted slightly above the radar.
pub fn calibration() -> Calibration {
    Calibration {
        roll: FRAC_PI_2,
        pitch: -FRAC_PI_2,
        yaw: 0.0,
        translation: Vector3::new(0.0, 0.2, 0.0),
        intrinsics: Calibration::pinhole(60.0, 60.0, 48.0, 32.0, 0.0),
        image_width: WIDTH,
        image_height: HEIGHT,
        max_depth: 50.0,
    }
}

#[derive(Debug, Clone, Copy)]
struct Body {
    class: ClassId,
    min: [f64; 3],
    max: [f64; 3],
    points: usize,
}

impl Body {
    fn around(class: ClassId, center: [f64; 3], size: [f64; 3], points: usize) -> Self {
        let min = [0, 1, 2].map(|i| center[i] - size[i] / 2.0);
        let max = [0, 1, 2].map(|i| center[i] + size[i] / 2.0);
        Body { class, min, max, points }
    }

    fn corners(&self) -> impl Iterator<Item = Point3<f64>> + '_ {
        (0..8).map(move |i| {
            let pick = |axis: usize| if i >> axis & 1 == 0 { self.min[axis] } else { self.max[axis] };
            Point3::new(pick(0), pick(1), pick(2))
        })
    }
}

fn bodies(frame_id: u64) -> [Body; 4] {
    let t = frame_id as f64;
    [
        Body::around(ClassId::Scenario, [22.0, 0.0, 0.5], [0.6, 14.0, 3.0], 90),
        Body::around(ClassId::Vehicle, [12.0 + 0.1 * t, 2.5, -0.2], [4.0, 1.8, 1.4], 60),
        Body::around(ClassId::Pedestrian, [8.0, -2.0 + 0.05 * t, -0.1], [0.5, 0.5, 1.7], 15),
        Body::around(ClassId::Bicycle, [15.0, -4.5, -0.3], [1.8, 0.5, 1.2], 20),
    ]
}

fn rng_for(seed: u64, frame_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ frame_id)
}

/// Ground-truth labeled points of one frame.
pub fn frame_truth(seed: u64, frame_id: u64) -> LabeledPointCloud {
    let mut rng = rng_for(seed, frame_id);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for body in bodies(frame_id) {
        for _ in 0..body.points {
            points.push(Point3::new(
                rng.gen_range(body.min[0]..body.max[0]),
                rng.gen_range(body.min[1]..body.max[1]),
                rng.gen_range(body.min[2]..body.max[2]),
            ));
            labels.push(body.class);
        }
    }
    for _ in 0..40 {
        points.push(Point3::new(rng.gen_range(2.0..40.0), rng.gen_range(-15.0..15.0), rng.gen_range(-1.5..-0.8)));
        labels.push(ClassId::Background);
    }
    LabeledPointCloud::new(frame_id, points, labels).expect("lengths match")
}

fn paint(seg: &mut SegMap, calib: &Calibration, body: &Body) {
    let t = build_transform(calib).expect("fixture calibration is valid");
    let pixels: Vec<_> = body
        .corners()
        .filter_map(|c| project_point(&t.apply(&c), &calib.intrinsics))
        .filter(|p| p.depth > 0.0)
        .map(|p| p.pixel)
        .collect();
    if pixels.len() < 8 {
        return;
    }
    let (w, h) = (f64::from(seg.width()), f64::from(seg.height()));
    let clamp_x = |v: f64| v.clamp(0.0, w - 1.0) as u32;
    let clamp_y = |v: f64| v.clamp(0.0, h - 1.0) as u32;
    let (x0, x1) = pixels.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (y0, y1) = pixels.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.y), b.max(p.y)));
    if x1 < 0.0 || y1 < 0.0 || x0 >= w || y0 >= h {
        return;
    }
    for y in clamp_y(y0)..=clamp_y(y1) {
        for x in clamp_x(x0)..=clamp_x(x1) {
            seg.set(x, y, body.class);
        }
    }
}

/// Camera and radar-depth segmentation rasters of one frame.
pub fn frame_segmaps(frame_id: u64) -> (SegMap, SegMap) {
    let calib = calibration();
    let [wall, vehicle, pedestrian, bicycle] = bodies(frame_id);
    let mut cam = SegMap::filled(WIDTH, HEIGHT, ClassId::Background, SegSource::Camera);
    for body in [wall, vehicle, pedestrian] {
        paint(&mut cam, &calib, &body);
    }
    let mut rad = SegMap::filled(WIDTH, HEIGHT, ClassId::Background, SegSource::RadarDepth);
    for body in [vehicle, bicycle] {
        paint(&mut rad, &calib, &body);
    }
    (cam, rad)
}

/// Camera image and per-pixel depth: ground plane below the horizon, the
/// wall above it, and no depth (sky) over the wall.
pub fn frame_image(frame_id: u64) -> (LinearImage, DepthImage) {
    let (w, h) = (WIDTH as usize, HEIGHT as usize);
    let calib = calibration();
    let (fy, cy) = (calib.intrinsics[(1, 1)], calib.intrinsics[(1, 2)]);
    let camera_height = 0.2 + 1.0;
    let mut data = Vec::with_capacity(w * h * 3);
    let mut depths = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let shade = ((x * 7 + y * 3 + frame_id as usize) % 200) as f64 / 255.0;
            data.extend([0.2 + shade * 0.5, 0.3 + shade * 0.3, 0.6 - shade * 0.4]);
            let below = y as f64 + 0.5 - cy;
            let depth = if below > 0.0 {
                (fy * camera_height / below).min(22.0)
            } else if below > -20.0 {
                22.0
            } else {
                DepthImage::INVALID
            };
            depths.push(depth);
        }
    }
    (
        LinearImage::new(WIDTH, HEIGHT, 3, data).expect("sizes match"),
        DepthImage::new(WIDTH, HEIGHT, depths).expect("sizes match"),
    )
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub scene: u32,
    pub frames: u64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(scene: u32, frames: u64) -> Self {
        SceneSpec { scene, frames, seed: u64::from(scene) }
    }
}

/// Paths of a generated fixture.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub root: PathBuf,
    pub dataset_root: PathBuf,
    pub truth_dir: PathBuf,
    pub config: PathBuf,
}

impl Fixture {
    pub fn scene_dir(&self, scene: u32) -> PathBuf {
        self.dataset_root.join(format!("scene_{scene}"))
    }

    /// Member file of one frame, e.g. `member(2, "depth", 0)`.
    pub fn member(&self, scene: u32, kind: &str, frame_id: u64) -> PathBuf {
        let ext = match kind {
            "points" => "ply",
            "depth" => "rlt",
            _ => "png",
        };
        self.scene_dir(scene).join(kind).join(format!("frame_{frame_id:06}.{ext}"))
    }
}

/// Writes every scene plus a config selecting all of them.
pub fn write_fixture(root: &Path, scenes: &[SceneSpec]) -> Result<Fixture> {
    let fixture = Fixture {
        root: root.to_path_buf(),
        dataset_root: root.join("data"),
        truth_dir: root.join("truth"),
        config: root.join("radlabel.toml"),
    };
    for spec in scenes {
        write_scene(&fixture, spec)?;
    }
    let ids: Vec<String> = scenes.iter().map(|s| s.scene.to_string()).collect();
    let config = format!(
        "dataset_root = \"data\"\nscenes = [{}]\nseg_source = \"fused\"\noutput_dir = \"out\"\nworkers = 2\n",
        ids.join(", ")
    );
    std::fs::write(&fixture.config, config).map_err(radlabel::Error::io(&fixture.config))?;
    Ok(fixture)
}

fn write_scene(fixture: &Fixture, spec: &SceneSpec) -> Result<()> {
    let dir = fixture.scene_dir(spec.scene);
    calib::write_calibration(&dir.join("calib.txt"), &calibration())?;
    let mut index = String::from("frame_id,radar_timestamp,camera_timestamp,points,image,camera_seg,radar_seg,depth\n");
    for frame_id in 0..spec.frames {
        let truth = frame_truth(spec.seed, frame_id);
        let points = PointCloud::new(frame_id, truth.points.clone())?;
        ply::write_points(&fixture.member(spec.scene, "points", frame_id), &points, PlyFormat::BinaryLittleEndian)?;
        let truth_path = fixture.truth_dir.join(format!("scene_{}/frame_{frame_id:06}.ply", spec.scene));
        ply::write_labeled(&truth_path, &truth, &Palette::default(), PlyFormat::BinaryLittleEndian)?;

        let (cam, rad) = frame_segmaps(frame_id);
        segmap::write_segmap(&fixture.member(spec.scene, "camera_seg", frame_id), &cam, frame_id)?;
        segmap::write_segmap(&fixture.member(spec.scene, "radar_seg", frame_id), &rad, frame_id)?;
        let (img, depth) = frame_image(frame_id);
        image::write_image(&fixture.member(spec.scene, "image", frame_id), &img, Encoding::Linear)?;
        tensor::write_depth(&fixture.member(spec.scene, "depth", frame_id), &depth)?;

        let ts = 0.1 * frame_id as f64;
        let name = format!("frame_{frame_id:06}");
        let _ = writeln!(
            index,
            "{frame_id},{ts},{ts},points/{name}.ply,image/{name}.png,camera_seg/{name}.png,radar_seg/{name}.png,depth/{name}.rlt"
        );
    }
    let path = dir.join("frames.csv");
    std::fs::write(&path, index).map_err(radlabel::Error::io(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objects_are_visible_and_painted() {
        let calib = calibration();
        let t = build_transform(&calib).unwrap();
        let center = project_point(&t.apply(&Point3::new(10.0, 0.0, 0.2)), &calib.intrinsics).unwrap();
        assert!((center.pixel.x - 48.0).abs() < 1e-9 && (center.pixel.y - 32.0).abs() < 1e-9);
        let (cam, rad) = frame_segmaps(0);
        let count = |s: &SegMap, c: ClassId| s.raw().iter().filter(|&&v| v == c as u8).count();
        for c in [ClassId::Scenario, ClassId::Vehicle, ClassId::Pedestrian] {
            assert!(count(&cam, c) > 0, "{c} not painted");
        }
        assert_eq!(count(&cam, ClassId::Bicycle), 0);
        assert!(count(&rad, ClassId::Bicycle) > 0);
    }

    #[test]
    fn deterministic() {
        assert_eq!(frame_truth(3, 7), frame_truth(3, 7));
        assert_ne!(frame_truth(3, 7), frame_truth(3, 8));
    }
}
