//! Radar tensor encoding and the segmentation loss.
//!
//! * [`raed_to_rae`] folds the Doppler axis of a RAED cube into a
//!   range×azimuth×elevation volume using each voxel's elevation index.
//! * [`normalize_rae`] applies `log(1+p)` followed by standardization over
//!   the range–azimuth plane.
//! * [`compose_seed`] gates per-column class distributions with per-voxel
//!   occupancy.
//! * [`loss`] evaluates weighted cross-entropy plus soft Dice and returns the
//!   exact gradient with respect to the logits.

use ndarray::{Array3, Array4, ArrayView3, ArrayView4, Axis, Zip};

use crate::error::{Error, Result};
use crate::labels::NUM_CLASSES;

/// Bin counts of a radar cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadarDims {
    pub doppler: usize,
    pub azimuth: usize,
    pub range: usize,
    pub elevation: usize,
}

/// Standard capture layout: 128 Doppler × 240 azimuth ×
/// 500 range bins with 34 elevation bins.
pub const STANDARD_DIMS: RadarDims = RadarDims { doppler: 128, azimuth: 240, range: 500, elevation: 34 };

/// Power and strongest-return elevation index per Doppler×azimuth×range voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct RaedTensor {
    /// Indexed `[doppler, azimuth, range]`.
    pub power: Array3<f32>,
    /// 1-based elevation bin per voxel, same indexing as `power`.
    pub elevation: Array3<u8>,
    pub elevation_bins: usize,
}

impl RaedTensor {
    pub fn new(power: Array3<f32>, elevation: Array3<u8>) -> Result<Self> {
        if power.dim() != elevation.dim() {
            return Err(Error::MalformedTensor(format!(
                "power shape {:?} differs from elevation shape {:?}",
                power.shape(),
                elevation.shape()
            )));
        }
        Ok(RaedTensor { power, elevation, elevation_bins: STANDARD_DIMS.elevation })
    }

    /// Splits a `2×D×A×R` channel pair (power, elevation index) into a tensor.
    pub fn from_channels(channels: ArrayView4<'_, f32>) -> Result<Self> {
        if channels.shape()[0] != 2 {
            return Err(Error::MalformedTensor(format!("expected 2 channels, got {}", channels.shape()[0])));
        }
        let power = channels.index_axis(Axis(0), 0).to_owned();
        let raw = channels.index_axis(Axis(0), 1);
        let mut elevation = Array3::zeros(raw.raw_dim());
        for (dst, &v) in elevation.iter_mut().zip(raw.iter()) {
            if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                return Err(Error::MalformedTensor(format!("elevation index {v} is not a small integer")));
            }
            *dst = v as u8;
        }
        RaedTensor::new(power, elevation)
    }

    pub fn dims(&self) -> RadarDims {
        let (doppler, azimuth, range) = self.power.dim();
        RadarDims { doppler, azimuth, range, elevation: self.elevation_bins }
    }

    pub fn check_standard_shape(&self) -> Result<()> {
        if self.dims() != STANDARD_DIMS {
            return Err(Error::MalformedTensor(format!(
                "cube dims {:?} differ from the standard {:?}",
                self.dims(),
                STANDARD_DIMS
            )));
        }
        Ok(())
    }
}

/// Power volume indexed `[range, azimuth, elevation]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaeTensor {
    pub power: Array3<f64>,
    pub normalized: bool,
}

/// Deposits every non-zero RAED power at `(range, azimuth, elevation − 1)`
/// and averages the contributions landing in each cell. Empty cells are zero.
///
/// Only voxels carrying power are checked for a valid elevation index.
pub fn raed_to_rae(raed: &RaedTensor) -> Result<RaeTensor> {
    let dims = raed.dims();
    let mut sum = Array3::<f64>::zeros((dims.range, dims.azimuth, dims.elevation));
    let mut count = Array3::<u32>::zeros((dims.range, dims.azimuth, dims.elevation));
    for ((d, a, r), &p) in raed.power.indexed_iter() {
        if p == 0.0 {
            continue;
        }
        let e = raed.elevation[(d, a, r)] as usize;
        if e == 0 || e > dims.elevation {
            return Err(Error::MalformedTensor(format!(
                "elevation index {e} at (doppler {d}, azimuth {a}, range {r}) outside 1..={}",
                dims.elevation
            )));
        }
        sum[(r, a, e - 1)] += f64::from(p);
        count[(r, a, e - 1)] += 1;
    }
    Zip::from(&mut sum).and(&count).for_each(|s, &c| {
        if c > 0 {
            *s /= f64::from(c);
        }
    });
    Ok(RaeTensor { power: sum, normalized: false })
}

/// `p̂ = (log(1+p) − μ) / (σ + ε)` with population mean and standard
/// deviation taken over the range–azimuth plane of each elevation bin.
pub fn normalize_rae(rae: &RaeTensor, epsilon: f64) -> Result<RaeTensor> {
    if rae.normalized {
        return Err(Error::InvalidValue("volume is already normalized".into()));
    }
    if let Some(p) = rae.power.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidValue(format!("power must be finite and non-negative, got {p}")));
    }
    let mut out = rae.power.mapv(f64::ln_1p);
    for mut plane in out.axis_iter_mut(Axis(2)) {
        let n = plane.len() as f64;
        if n == 0.0 {
            continue;
        }
        let mean = plane.sum() / n;
        let var = plane.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let denom = var.sqrt() + epsilon;
        plane.mapv_inplace(|v| (v - mean) / denom);
    }
    Ok(RaeTensor { power: out, normalized: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeKind {
    Logits,
    Probabilities,
    /// Occupancy-gated class distribution; sums to the occupancy, not to 1.
    Seed,
    Labels,
}

/// Class volume indexed `[class, range, azimuth, elevation]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticVolume {
    pub values: Array4<f64>,
    pub kind: VolumeKind,
}

impl SemanticVolume {
    pub fn logits(values: Array4<f64>) -> Self {
        SemanticVolume { values, kind: VolumeKind::Logits }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// In-place softmax of a short logit vector.
fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// Broadcasts `sigmoid(occupancy[b, e, r, a]) · softmax(classes[b, ·, r, a])[k]`
/// into one `K×R×A×E` seed per batch item.
pub fn compose_seed(occupancy: ArrayView4<'_, f64>, classes: ArrayView4<'_, f64>) -> Result<Vec<SemanticVolume>> {
    let (b, e, r, a) = occupancy.dim();
    let (cb, k, cr, ca) = classes.dim();
    if k != NUM_CLASSES {
        return Err(Error::DimensionMismatch(format!("expected {NUM_CLASSES} class logits, got {k}")));
    }
    if (b, r, a) != (cb, cr, ca) {
        return Err(Error::DimensionMismatch(format!(
            "occupancy {:?} and class {:?} logits disagree on batch/range/azimuth",
            occupancy.shape(),
            classes.shape()
        )));
    }
    let mut out = Vec::with_capacity(b);
    let mut probs = vec![0.0; k];
    for bi in 0..b {
        let mut seed = Array4::<f64>::zeros((k, r, a, e));
        for ri in 0..r {
            for ai in 0..a {
                for (ki, p) in probs.iter_mut().enumerate() {
                    *p = classes[(bi, ki, ri, ai)];
                }
                softmax(&mut probs);
                for ei in 0..e {
                    let gate = sigmoid(occupancy[(bi, ei, ri, ai)]);
                    for (ki, p) in probs.iter().enumerate() {
                        seed[(ki, ri, ai, ei)] = gate * p;
                    }
                }
            }
        }
        out.push(SemanticVolume { values: seed, kind: VolumeKind::Seed });
    }
    Ok(out)
}

/// Class weights, Dice weight and Dice smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub class: [f64; NUM_CLASSES],
    pub dice: f64,
    pub smoothing: f64,
}

impl LossWeights {
    /// Reference class balance for the five-class label set.
    pub const PUBLISHED: LossWeights =
        LossWeights { class: [1.27e-4, 2.26e-2, 5.99, 3.93e-1, 2.50], dice: 2.5, smoothing: 1.0 };

    pub fn validate(&self) -> Result<()> {
        if self.class.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidValue(format!("class weights must be positive, got {:?}", self.class)));
        }
        if !(self.dice >= 0.0) || !(self.smoothing > 0.0) {
            return Err(Error::InvalidValue("dice weight must be >= 0 and smoothing > 0".into()));
        }
        Ok(())
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights::PUBLISHED
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub total: f64,
    pub cross_entropy: f64,
    pub soft_dice: f64,
    /// d(total)/d(logits), same shape as the logits.
    pub gradient: Array4<f64>,
}

/// Weighted cross-entropy plus `λ`·soft Dice over a single logit volume.
///
/// Cross-entropy is the weighted mean `Σ w[y]·(−log p_y) / Σ w[y]`. Soft
/// Dice is `1 − mean_k (2·Σ p_k·[y=k] + s) / (Σ p_k + Σ [y=k] + s)` over
/// all classes.
pub fn loss(logits: &SemanticVolume, labels: ArrayView3<'_, u8>, weights: &LossWeights) -> Result<LossOutput> {
    if logits.kind != VolumeKind::Logits {
        return Err(Error::InvalidValue(format!("loss expects logits, got {:?}", logits.kind)));
    }
    weights.validate()?;
    let (k, r, a, e) = logits.values.dim();
    if k != NUM_CLASSES {
        return Err(Error::DimensionMismatch(format!("expected {NUM_CLASSES} classes, got {k}")));
    }
    if labels.dim() != (r, a, e) {
        return Err(Error::DimensionMismatch(format!(
            "labels {:?} vs logits spatial shape {:?}",
            labels.shape(),
            &logits.values.shape()[1..]
        )));
    }
    if r * a * e == 0 {
        return Err(Error::InvalidValue("loss over an empty volume".into()));
    }
    if let Some(bad) = labels.iter().find(|&&y| y as usize >= k) {
        return Err(Error::InvalidValue(format!("label {bad} out of range 0..{k}")));
    }

    let mut probs = Array4::<f64>::zeros((k, r, a, e));
    let mut ce_sum = 0.0;
    let mut weight_sum = 0.0;
    let mut z = [0.0; NUM_CLASSES];
    for ((ri, ai, ei), &y) in labels.indexed_iter() {
        for (ki, zk) in z.iter_mut().enumerate() {
            *zk = logits.values[(ki, ri, ai, ei)];
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let w = weights.class[y as usize];
        ce_sum += w * (log_norm - z[y as usize]);
        weight_sum += w;
        for (ki, zk) in z.iter().enumerate() {
            probs[(ki, ri, ai, ei)] = (zk - log_norm).exp();
        }
    }
    let cross_entropy = ce_sum / weight_sum;

    let s = weights.smoothing;
    let mut intersection = [0.0; NUM_CLASSES];
    let mut pred_mass = [0.0; NUM_CLASSES];
    let mut truth_mass = [0.0; NUM_CLASSES];
    for ((ri, ai, ei), &y) in labels.indexed_iter() {
        truth_mass[y as usize] += 1.0;
        intersection[y as usize] += probs[(y as usize, ri, ai, ei)];
        for (ki, m) in pred_mass.iter_mut().enumerate() {
            *m += probs[(ki, ri, ai, ei)];
        }
    }
    let mut dice_mean = 0.0;
    for ki in 0..k {
        dice_mean += (2.0 * intersection[ki] + s) / (pred_mass[ki] + truth_mass[ki] + s);
    }
    dice_mean /= k as f64;
    let soft_dice = 1.0 - dice_mean;

    // d(λ·sDice)/dp_k for a voxel: the background-of-label and labeled cases.
    let mut dp_bg = [0.0; NUM_CLASSES];
    let mut dp_fg = [0.0; NUM_CLASSES];
    for ki in 0..k {
        let denom = pred_mass[ki] + truth_mass[ki] + s;
        let numer = 2.0 * intersection[ki] + s;
        let scale = -weights.dice / k as f64 / (denom * denom);
        dp_bg[ki] = scale * (-numer);
        dp_fg[ki] = scale * (2.0 * denom - numer);
    }

    let mut gradient = Array4::<f64>::zeros((k, r, a, e));
    let mut p = [0.0; NUM_CLASSES];
    let mut dp = [0.0; NUM_CLASSES];
    for ((ri, ai, ei), &y) in labels.indexed_iter() {
        let y = y as usize;
        let ce_scale = weights.class[y] / weight_sum;
        for ki in 0..k {
            p[ki] = probs[(ki, ri, ai, ei)];
            dp[ki] = if ki == y { dp_fg[ki] } else { dp_bg[ki] };
        }
        let inner: f64 = (0..k).map(|ki| dp[ki] * p[ki]).sum();
        for ki in 0..k {
            let onehot = if ki == y { 1.0 } else { 0.0 };
            gradient[(ki, ri, ai, ei)] = ce_scale * (p[ki] - onehot) + p[ki] * (dp[ki] - inner);
        }
    }

    Ok(LossOutput { total: cross_entropy + weights.dice * soft_dice, cross_entropy, soft_dice, gradient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn small_raed(d: usize, a: usize, r: usize) -> RaedTensor {
        RaedTensor::new(Array3::zeros((d, a, r)), Array3::from_elem((d, a, r), 1)).unwrap()
    }

    #[test]
    fn zero_power_gives_zero_volume() {
        let rae = raed_to_rae(&small_raed(4, 3, 5)).unwrap();
        assert_eq!(rae.power.dim(), (5, 3, 34));
        assert!(rae.power.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_contributions_average() {
        let mut raed = small_raed(4, 3, 5);
        raed.power[(0, 1, 2)] = 2.0;
        raed.power[(3, 1, 2)] = 6.0;
        raed.elevation[(0, 1, 2)] = 9;
        raed.elevation[(3, 1, 2)] = 9;
        let rae = raed_to_rae(&raed).unwrap();
        assert_eq!(rae.power[(2, 1, 8)], 4.0);
        assert_eq!(rae.power.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn bad_elevation_index() {
        let mut raed = small_raed(2, 2, 2);
        raed.power[(0, 0, 0)] = 1.0;
        raed.elevation[(0, 0, 0)] = 35;
        assert!(matches!(raed_to_rae(&raed), Err(Error::MalformedTensor(_))));
        raed.elevation[(0, 0, 0)] = 0;
        assert!(raed_to_rae(&raed).is_err());
    }

    #[test]
    fn channel_split() {
        let mut ch = Array4::<f32>::zeros((2, 1, 1, 2));
        ch[(0, 0, 0, 1)] = 3.5;
        ch[(1, 0, 0, 1)] = 7.0;
        let raed = RaedTensor::from_channels(ch.view()).unwrap();
        assert_eq!(raed.elevation[(0, 0, 1)], 7);
        ch[(1, 0, 0, 0)] = 1.5;
        assert!(RaedTensor::from_channels(ch.view()).is_err());
        assert!(RaedTensor::from_channels(Array4::zeros((3, 1, 1, 1)).view()).is_err());
    }

    #[test]
    fn constant_frames_normalize_to_zero() {
        for c in [0.0, 4.2] {
            let rae = RaeTensor { power: Array3::from_elem((6, 5, 3), c), normalized: false };
            let out = normalize_rae(&rae, 1e-6).unwrap();
            assert!(out.normalized);
            assert!(out.power.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn normalize_rejects_negative_and_renormalization() {
        let mut rae = RaeTensor { power: Array3::zeros((2, 2, 2)), normalized: false };
        rae.power[(0, 0, 0)] = -1.0;
        assert!(normalize_rae(&rae, 1e-6).is_err());
        let rae = RaeTensor { power: Array3::zeros((2, 2, 2)), normalized: true };
        assert!(normalize_rae(&rae, 1e-6).is_err());
    }

    #[test]
    fn symmetric_logits_seed() {
        let occ = Array4::<f64>::zeros((1, 2, 3, 4));
        let cls = Array4::<f64>::zeros((1, 5, 3, 4));
        let seeds = compose_seed(occ.view(), cls.view()).unwrap();
        assert_eq!(seeds[0].values.dim(), (5, 3, 4, 2));
        assert!(seeds[0].values.iter().all(|&v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn saturated_seed() {
        let occ = Array4::from_elem((1, 1, 1, 1), 50.0);
        let mut cls = Array4::<f64>::zeros((1, 5, 1, 1));
        cls[(0, 2, 0, 0)] = 50.0;
        let s = &compose_seed(occ.view(), cls.view()).unwrap()[0].values;
        assert!((s[(2, 0, 0, 0)] - 1.0).abs() < 1e-12);
        assert!(s[(0, 0, 0, 0)] < 1e-12);
    }

    #[test]
    fn seed_shape_errors() {
        let occ = Array4::<f64>::zeros((1, 2, 3, 4));
        assert!(compose_seed(occ.view(), Array4::zeros((1, 4, 3, 4)).view()).is_err());
        assert!(compose_seed(occ.view(), Array4::zeros((1, 5, 3, 5)).view()).is_err());
    }

    #[test]
    fn perfect_prediction_has_near_zero_loss() {
        let labels = Array3::from_shape_fn((3, 4, 2), |(r, a, e)| ((r + a + e) % 5) as u8);
        let logits = Array4::from_shape_fn(
            (5, 3, 4, 2),
            |(k, r, a, e)| {
                if labels[(r, a, e)] as usize == k {
                    50.0
                } else {
                    0.0
                }
            },
        );
        let out = loss(&SemanticVolume::logits(logits), labels.view(), &LossWeights::PUBLISHED).unwrap();
        assert!(out.cross_entropy < 1e-4);
        assert!(out.soft_dice < 1e-4);
    }

    #[test]
    fn loss_input_validation() {
        let logits = SemanticVolume::logits(Array4::zeros((5, 2, 2, 2)));
        let mut labels = Array3::<u8>::zeros((2, 2, 2));
        labels[(0, 0, 0)] = 5;
        assert!(loss(&logits, labels.view(), &LossWeights::PUBLISHED).is_err());
        assert!(loss(&logits, Array3::zeros((2, 2, 3)).view(), &LossWeights::PUBLISHED).is_err());
        let probs = SemanticVolume { kind: VolumeKind::Probabilities, ..logits };
        assert!(loss(&probs, Array3::zeros((2, 2, 2)).view(), &LossWeights::PUBLISHED).is_err());
    }
}
