//! radlabel: semantic labeling of 4D radar point clouds from camera and
//! radar segmentation maps.
//!
//! The toolkit is organized as a set of pure processing stages plus the
//! file formats and orchestration around them:
//!
//! 1. **geometry** – radar→camera rigid transform, pinhole projection and the
//!    visibility mask.
//! 2. **labels** – pixel sampling of segmentation rasters and the
//!    camera/radar raster fusion rule.
//! 3. **refine** – DBSCAN clustering, per-cluster class voting and
//!    nearest-neighbor validation.
//! 4. **fog** – single-scattering fog synthesis for clear images.
//! 5. **encode** – RAED→RAE folding, log/standardize normalization, the
//!    semantic seed and the weighted CE + soft Dice loss with its gradient.
//! 6. **metrics** – voxel Pd/Pfa per class group and Chamfer distance.
//! 7. **pipeline** – config-driven batch runs that tie the stages together.
//!
//! All processing stages are pure functions of their inputs and are safe to
//! call concurrently.

// Negated float comparisons are used to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod encode;
pub mod error;
pub mod fog;
pub mod geometry;
pub mod io;
pub mod labels;
pub mod metrics;
pub mod pipeline;
pub mod refine;
pub mod spatial;

pub use error::{Error, Result};
pub use geometry::{Calibration, PointCloud, ProjectedPoints, RigidTransform};
pub use labels::{ClassId, LabeledPointCloud, SegMap, SegSource};
