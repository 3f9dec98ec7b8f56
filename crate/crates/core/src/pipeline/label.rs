//! `label`: camera segmentation transferred onto radar points, then refined.
//!
//! Outputs `labels/scene_<s>/frame_<id>.ply` plus `labels/manifest.json`.

use std::path::Path;
use std::time::Instant;

use super::{check_sync, emit, entry_for, frame_stem, load_batch, member, run_pool, FrameError, Manifest, OutputFile};
use super::{FrameBundle, PipelineConfig, SegSelection};
use crate::error::{Error, Result};
use crate::geometry::{build_transform, project_points, transform_points, Calibration, PointCloud, RigidTransform};
use crate::io::ply::{self, Palette};
use crate::io::segmap::read_segmap;
use crate::labels::{fuse_segmaps, sample_labels, LabeledPointCloud, SegMap, SegSource};
use crate::refine::{refine, RefineConfig};

pub const LABEL_DIR: &str = "labels";

fn load_seg(path: &Path, source: SegSource, bundle: &FrameBundle, calib: &Calibration) -> Result<SegMap> {
    let (seg, meta) = read_segmap(path, source)?;
    if let Some(meta) = meta {
        if meta.frame_id != bundle.frame_id {
            return Err(Error::InvalidValue(format!(
                "{}: sidecar frame id {} does not match frame {}",
                path.display(),
                meta.frame_id,
                bundle.frame_id
            )));
        }
    }
    if (seg.width(), seg.height()) != (calib.image_width, calib.image_height) {
        return Err(Error::DimensionMismatch(format!(
            "{}: raster is {}x{} but the calibration image is {}x{}",
            path.display(),
            seg.width(),
            seg.height(),
            calib.image_width,
            calib.image_height
        )));
    }
    Ok(seg)
}

/// The raster that drives sampling for `selection`.
pub fn select_segmap(bundle: &FrameBundle, calib: &Calibration, selection: SegSelection) -> Result<SegMap, FrameError> {
    let camera = || -> Result<SegMap, FrameError> {
        let p = member(&bundle.camera_seg, "camera segmentation")?;
        Ok(load_seg(p, SegSource::Camera, bundle, calib)?)
    };
    let radar = || -> Result<SegMap, FrameError> {
        let p = member(&bundle.radar_seg, "radar segmentation")?;
        Ok(load_seg(p, SegSource::RadarDepth, bundle, calib)?)
    };
    match selection {
        SegSelection::Camera => camera(),
        SegSelection::Radar => radar(),
        SegSelection::Fused => Ok(fuse_segmaps(&camera()?, &radar()?)?),
    }
}

/// Labels already-loaded radar points; `transform` maps radar to camera.
pub fn label_points(
    points: &PointCloud,
    seg: &SegMap,
    calib: &Calibration,
    transform: &RigidTransform,
    refine_cfg: &RefineConfig,
) -> Result<LabeledPointCloud> {
    let cam = transform_points(points, transform);
    let proj = project_points(&cam, calib);
    let raw = sample_labels(points, &proj, seg)?;
    refine(&raw, refine_cfg)
}

/// Loads and labels one frame.
pub fn label_frame(
    bundle: &FrameBundle,
    calib: &Calibration,
    config: &PipelineConfig,
) -> Result<LabeledPointCloud, FrameError> {
    check_sync(bundle, config)?;
    let t0 = Instant::now();
    let points_path = member(&bundle.points, "radar points")?;
    let seg = select_segmap(bundle, calib, config.seg_source)?;
    let mut points = ply::read_ply(points_path)?.into_point_cloud(bundle.frame_id)?;
    points.frame_id = bundle.frame_id;
    let t_load = t0.elapsed();

    let t1 = Instant::now();
    let transform = build_transform(calib)?;
    let cam = transform_points(&points, &transform);
    let proj = project_points(&cam, calib);
    let raw = sample_labels(&points, &proj, &seg)?;
    let t_project = t1.elapsed();

    let t2 = Instant::now();
    let refined = refine(&raw, &config.refine)?;
    let t_refine = t2.elapsed();

    let objects = |l: &LabeledPointCloud| l.labels.iter().filter(|c| c.is_object()).count();
    log::info!(
        "scene={} frame={} points={} visible={} objects_raw={} objects_refined={} load_ms={:.3} project_ms={:.3} refine_ms={:.3}",
        bundle.scene,
        bundle.frame_id,
        points.len(),
        proj.len(),
        objects(&raw),
        objects(&refined),
        t_load.as_secs_f64() * 1e3,
        t_project.as_secs_f64() * 1e3,
        t_refine.as_secs_f64() * 1e3,
    );
    Ok(refined)
}

pub fn run_label(config: &PipelineConfig) -> Result<Manifest> {
    let batch = load_batch(config)?;
    for calib in &batch.calibrations {
        build_transform(calib).map_err(|e| Error::Config(e.to_string()))?;
    }
    let root = config.output_dir.join(LABEL_DIR);
    let palette = Palette::default();
    let entries = run_pool(config.workers, &batch.frames, |(bundle, ci)| {
        let result = (|| -> Result<(Vec<OutputFile>, Option<usize>), FrameError> {
            let lpc = label_frame(bundle, &batch.calibrations[*ci], config)?;
            let bytes = ply::encode_labeled(&lpc, &palette, config.export_format);
            let out = emit(&root, &format!("{}.ply", frame_stem(bundle)), &bytes)?;
            Ok((vec![out], Some(lpc.len())))
        })();
        entry_for(bundle, result)
    })?;
    let manifest = Manifest::new("label", config, entries);
    manifest.write(&root)?;
    Ok(manifest)
}
