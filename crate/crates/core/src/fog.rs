//! Homogeneous fog synthesis with the single-scattering atmospheric model
//!
//! ```text
//! I_fog(x) = I(x)·t(x) + A·(1 − t(x)),   t(x) = exp(−β·d(x))
//! ```
//!
//! Pixels without a valid depth are treated as infinitely far and become
//! pure airlight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attenuation levels of the default fog sweep, 1/m.
pub const DEFAULT_BETAS: [f64; 4] = [0.02, 0.04, 0.08, 0.15];

pub const DEFAULT_AIRLIGHT: [f64; 3] = [0.8, 0.8, 0.8];

/// Interleaved image in linear intensity, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    pub width: u32,
    pub height: u32,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub data: Vec<f64>,
}

impl LinearImage {
    pub fn new(width: u32, height: u32, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidValue(format!("unsupported channel count {channels}")));
        }
        let expected = width as usize * height as usize * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height}x{channels} image needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(LinearImage { width, height, channels, data })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Per-pixel depth in meters. Any value that is not finite and positive
/// marks an invalid (sky or missing) pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub depths: Vec<f64>,
}

impl DepthImage {
    /// Sentinel written for pixels without depth.
    pub const INVALID: f64 = 0.0;

    pub fn new(width: u32, height: u32, depths: Vec<f64>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if depths.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} depth map needs {expected} values, got {}",
                depths.len()
            )));
        }
        Ok(DepthImage { width, height, depths })
    }

    pub fn is_valid(d: f64) -> bool {
        d.is_finite() && d > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FogParams {
    /// Attenuation coefficient, 1/m. Larger is denser.
    pub beta: f64,
    pub airlight: [f64; 3],
}

impl FogParams {
    pub fn new(beta: f64) -> Self {
        FogParams { beta, airlight: DEFAULT_AIRLIGHT }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidValue(format!("beta must be finite and non-negative, got {}", self.beta)));
        }
        if self.airlight.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidValue(format!("airlight {:?} outside [0, 1]", self.airlight)));
        }
        Ok(())
    }
}

/// Fogged intensity of one channel value.
#[inline]
pub fn fog_intensity(intensity: f64, depth: f64, beta: f64, airlight: f64) -> f64 {
    let fogged = if DepthImage::is_valid(depth) {
        let t = (-beta * depth).exp();
        intensity * t + airlight * (1.0 - t)
    } else {
        airlight
    };
    fogged.clamp(0.0, 1.0)
}

pub fn apply_fog(image: &LinearImage, depth: &DepthImage, params: &FogParams) -> Result<LinearImage> {
    params.validate()?;
    if image.width != depth.width || image.height != depth.height {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs depth {}x{}",
            image.width, image.height, depth.width, depth.height
        )));
    }
    let c = image.channels;
    let data = image
        .data
        .chunks_exact(c)
        .zip(&depth.depths)
        .flat_map(|(px, &d)| (0..c).map(move |k| fog_intensity(px[k], d, params.beta, params.airlight[k])))
        .collect();
    Ok(LinearImage { data, ..image.clone() })
}

/// Transfer between 8-bit storage values and linear intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Plain `/255` and `×255` scaling.
    #[default]
    Linear,
    /// sRGB transfer curve.
    Srgb,
}

impl Encoding {
    pub fn decode(self, v: u8) -> f64 {
        let x = f64::from(v) / 255.0;
        match self {
            Encoding::Linear => x,
            Encoding::Srgb if x <= 0.04045 => x / 12.92,
            Encoding::Srgb => ((x + 0.055) / 1.055).powf(2.4),
        }
    }

    /// Round-half-up quantization after clamping to `[0, 1]`.
    pub fn encode(self, x: f64) -> u8 {
        let x = x.clamp(0.0, 1.0);
        let y = match self {
            Encoding::Linear => x,
            Encoding::Srgb if x <= 0.0031308 => 12.92 * x,
            Encoding::Srgb => 1.055 * x.powf(1.0 / 2.4) - 0.055,
        };
        (y * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
    }
}
