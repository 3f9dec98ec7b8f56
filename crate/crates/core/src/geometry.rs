//! Radar→camera extrinsics, pinhole projection and the visibility mask.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, Point2, Point3, Vector3, Vector4};

use crate::error::{Error, Result};

/// Default far cutoff for projected points, in meters.
pub const DEFAULT_MAX_DEPTH: f64 = 50.0;

/// Homogeneous divisors smaller than this are treated as lying on the camera plane.
const MIN_HOMOGENEOUS_W: f64 = 1e-12;

/// Extrinsic and intrinsic calibration between the radar and the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Rotation about x, radians.
    pub roll: f64,
    /// Rotation about y, radians.
    pub pitch: f64,
    /// Rotation about z, radians.
    pub yaw: f64,
    /// Translation from radar to camera frame, meters.
    pub translation: Vector3<f64>,
    /// Camera projection matrix `[K | 0]`.
    pub intrinsics: Matrix3x4<f64>,
    pub image_width: u32,
    pub image_height: u32,
    /// Points farther than this along the optical axis are not visible.
    pub max_depth: f64,
}

impl Calibration {
    /// Augments a 3×3 pinhole matrix into the canonical 3×4 form.
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64) -> Matrix3x4<f64> {
        Matrix3x4::new(fx, skew, cx, 0.0, 0.0, fy, cy, 0.0, 0.0, 0.0, 1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let angles = [self.roll, self.pitch, self.yaw];
        if angles.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCalibration("non-finite angle or translation".into()));
        }
        if self.intrinsics.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCalibration("non-finite intrinsics".into()));
        }
        if !(self.intrinsics[(0, 0)] > 0.0 && self.intrinsics[(1, 1)] > 0.0) {
            return Err(Error::InvalidCalibration("focal lengths must be positive".into()));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidCalibration("image size must be positive".into()));
        }
        if !(self.max_depth > 0.0) {
            return Err(Error::InvalidCalibration("max_depth must be positive".into()));
        }
        Ok(())
    }
}

/// 3-D point cloud in a sensor frame, meters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub frame_id: u64,
    pub points: Vec<Point3<f64>>,
}

impl PointCloud {
    pub fn new(frame_id: u64, points: Vec<Point3<f64>>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidValue(format!("point {i} has a non-finite coordinate")));
        }
        Ok(PointCloud { frame_id, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Homogeneous rigid transform `[R | t; 0 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform(Matrix4<f64>);

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform(Matrix4::identity())
    }

    pub fn from_parts(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        RigidTransform(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Closed-form inverse `[Rᵀ | −Rᵀt]`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        RigidTransform::from_parts(rt, -(rt * self.translation()))
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        let h = self.0 * Vector4::new(p.x, p.y, p.z, 1.0);
        Point3::new(h.x / h.w, h.y / h.w, h.z / h.w)
    }
}

/// Builds `T = [R_z(yaw)·R_y(pitch)·R_x(roll) | t; 0ᵀ 1]`.
pub fn build_transform(calib: &Calibration) -> Result<RigidTransform> {
    let (r, p, y) = (calib.roll, calib.pitch, calib.yaw);
    if ![r, p, y].iter().chain(calib.translation.iter()).all(|v| v.is_finite()) {
        return Err(Error::InvalidCalibration("non-finite angle or translation".into()));
    }
    let (sr, cr) = r.sin_cos();
    let (sp, cp) = p.sin_cos();
    let (sy, cy) = y.sin_cos();
    #[rustfmt::skip]
    let rotation = Matrix3::new(
        cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
        sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
        -sp,     cp * sr,                cp * cr,
    );
    Ok(RigidTransform::from_parts(rotation, calib.translation))
}

/// Maps every point through `transform`, preserving count and order.
pub fn transform_points(pc: &PointCloud, transform: &RigidTransform) -> PointCloud {
    PointCloud { frame_id: pc.frame_id, points: pc.points.iter().map(|p| transform.apply(p)).collect() }
}

/// Pixel positions and depths of the points that pass the visibility mask.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectedPoints {
    pub pixels: Vec<Point2<f64>>,
    pub depths: Vec<f64>,
    /// Index of each retained entry in the originating cloud.
    pub source_indices: Vec<usize>,
}

impl ProjectedPoints {
    pub fn len(&self) -> usize {
        self.source_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_indices.is_empty()
    }
}

/// Result of projecting a single camera-frame point, before masking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Point2<f64>,
    pub depth: f64,
}

/// Perspective projection of one camera-frame point. `None` when the
/// homogeneous divisor vanishes.
pub fn project_point(p_cam: &Point3<f64>, intrinsics: &Matrix3x4<f64>) -> Option<Projection> {
    let h = intrinsics * Vector4::new(p_cam.x, p_cam.y, p_cam.z, 1.0);
    if h.z.abs() < MIN_HOMOGENEOUS_W {
        return None;
    }
    Some(Projection { pixel: Point2::new(h.x / h.z, h.y / h.z), depth: p_cam.z })
}

/// Visibility mask: strictly inside the image, in front of the camera and
/// no farther than `max_depth`.
pub fn is_visible(proj: &Projection, calib: &Calibration) -> bool {
    let (u, v, d) = (proj.pixel.x, proj.pixel.y, proj.depth);
    u > 0.0
        && u < f64::from(calib.image_width)
        && v > 0.0
        && v < f64::from(calib.image_height)
        && d > 0.0
        && d <= calib.max_depth
}

/// Projects camera-frame points and keeps those inside the visibility mask.
pub fn project_points(pc_cam: &PointCloud, calib: &Calibration) -> ProjectedPoints {
    let mut out = ProjectedPoints::default();
    for (i, p) in pc_cam.points.iter().enumerate() {
        let Some(proj) = project_point(p, &calib.intrinsics) else {
            continue;
        };
        if is_visible(&proj, calib) {
            out.pixels.push(proj.pixel);
            out.depths.push(proj.depth);
            out.source_indices.push(i);
        }
    }
    out
}
