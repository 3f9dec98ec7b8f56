//! `fog-sweep`: one fogged camera image per attenuation coefficient.
//!
//! Outputs `fog/scene_<s>/frame_<id>_b<beta>.png` plus `fog/manifest.json`.

use std::time::Instant;

use super::{check_sync, emit, entry_for, frame_stem, load_batch, member, run_pool, FrameError, Manifest, OutputFile};
use super::{FrameBundle, PipelineConfig};
use crate::error::{Error, Result};
use crate::fog::apply_fog;
use crate::io::image::{encode_image, read_image};
use crate::io::tensor::read_depth;

pub const FOG_DIR: &str = "fog";

/// File suffix for one fog level, e.g. `_b0.02`.
pub fn beta_suffix(beta: f64) -> String {
    format!("_b{beta}")
}

fn fog_frame(bundle: &FrameBundle, config: &PipelineConfig) -> Result<Vec<(String, Vec<u8>)>, FrameError> {
    check_sync(bundle, config)?;
    let image_path = member(&bundle.image, "camera image")?;
    let depth_path = member(&bundle.depth, "depth map")?;
    let t0 = Instant::now();
    let encoding = config.fog.encoding();
    let image = read_image(image_path, encoding)?;
    let depth = read_depth(depth_path)?;
    let mut out = Vec::with_capacity(config.fog.betas.len());
    for &beta in &config.fog.betas {
        let fogged = apply_fog(&image, &depth, &config.fog.params(beta))?;
        out.push((format!("{}{}.png", frame_stem(bundle), beta_suffix(beta)), encode_image(&fogged, encoding)?));
    }
    log::info!(
        "scene={} frame={} pixels={} levels={} fog_ms={:.3}",
        bundle.scene,
        bundle.frame_id,
        image.pixel_count(),
        out.len(),
        t0.elapsed().as_secs_f64() * 1e3
    );
    Ok(out)
}

pub fn run_fog_sweep(config: &PipelineConfig) -> Result<Manifest> {
    if config.fog.betas.is_empty() {
        return Err(Error::Config("fog sweep needs at least one beta".into()));
    }
    let batch = load_batch(config)?;
    let root = config.output_dir.join(FOG_DIR);
    let entries = run_pool(config.workers, &batch.frames, |(bundle, _)| {
        let result = (|| -> Result<(Vec<OutputFile>, Option<usize>), FrameError> {
            let images = fog_frame(bundle, config)?;
            let mut outputs = Vec::with_capacity(images.len());
            for (rel, bytes) in images {
                outputs.push(emit(&root, &rel, &bytes)?);
            }
            Ok((outputs, None))
        })();
        entry_for(bundle, result)
    })?;
    let manifest = Manifest::new("fog-sweep", config, entries);
    manifest.write(&root)?;
    Ok(manifest)
}
