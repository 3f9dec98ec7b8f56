//! Label refinement: spatial clustering, per-cluster voting and
//! nearest-neighbor validation of object labels.

mod dbscan;

pub use dbscan::{dbscan, ClusterAssignment};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{ClassId, LabeledPointCloud, NUM_CLASSES};
use crate::spatial::KdTree;

/// One value per movable object class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerObjectClass<T> {
    pub pedestrian: T,
    pub vehicle: T,
    pub bicycle: T,
}

impl<T: Copy> PerObjectClass<T> {
    pub fn get(&self, class: ClassId) -> Option<T> {
        match class {
            ClassId::Pedestrian => Some(self.pedestrian),
            ClassId::Vehicle => Some(self.vehicle),
            ClassId::Bicycle => Some(self.bicycle),
            ClassId::Background | ClassId::Scenario => None,
        }
    }

    pub fn set(&mut self, class: ClassId, value: T) {
        match class {
            ClassId::Pedestrian => self.pedestrian = value,
            ClassId::Vehicle => self.vehicle = value,
            ClassId::Bicycle => self.bicycle = value,
            ClassId::Background | ClassId::Scenario => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Neighborhood radius, meters.
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    /// A cluster class must exceed this fraction of the cluster.
    pub vote_thresholds: PerObjectClass<f64>,
    /// Maximum nearest same-class neighbor distance, meters.
    pub validation_radius: PerObjectClass<f64>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            dbscan_eps: 1.0,
            dbscan_min_pts: 5,
            vote_thresholds: PerObjectClass { pedestrian: 0.30, vehicle: 0.40, bicycle: 0.30 },
            validation_radius: PerObjectClass { pedestrian: 1.0, vehicle: 3.0, bicycle: 1.5 },
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dbscan_eps > 0.0 && self.dbscan_eps.is_finite()) {
            return Err(Error::Config(format!("dbscan_eps must be positive, got {}", self.dbscan_eps)));
        }
        if self.dbscan_min_pts == 0 {
            return Err(Error::Config("dbscan_min_pts must be at least 1".into()));
        }
        for class in ClassId::OBJECTS {
            let t = self.vote_thresholds.get(class).unwrap_or_default();
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!("vote threshold for {class} must be in (0, 1], got {t}")));
            }
            let r = self.validation_radius.get(class).unwrap_or_default();
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("validation radius for {class} must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Reassigns each cluster to the single object class whose fraction exceeds
/// its threshold, or to background when zero or several classes do. Noise
/// points keep their labels.
pub fn vote_clusters(lpc: &LabeledPointCloud, ca: &ClusterAssignment, cfg: &RefineConfig) -> Result<LabeledPointCloud> {
    if ca.len() != lpc.len() {
        return Err(Error::DimensionMismatch(format!("{} cluster ids for {} points", ca.len(), lpc.len())));
    }
    let mut out = lpc.clone();
    for members in ca.members() {
        let mut counts = [0usize; NUM_CLASSES];
        for &i in &members {
            counts[lpc.labels[i].index()] += 1;
        }
        let total = members.len() as f64;
        let mut winners = ClassId::OBJECTS.into_iter().filter(|&c| {
            let threshold = cfg.vote_thresholds.get(c).unwrap_or(1.0);
            counts[c.index()] as f64 / total > threshold
        });
        let class = match (winners.next(), winners.next()) {
            (Some(c), None) => c,
            _ => ClassId::Background,
        };
        for &i in &members {
            out.labels[i] = class;
        }
    }
    Ok(out)
}

/// Drops object labels whose nearest same-labeled point is farther than the
/// class radius. Background and scenario labels are untouched.
pub fn validate_neighbors(lpc: &LabeledPointCloud, cfg: &RefineConfig) -> LabeledPointCloud {
    let mut out = lpc.clone();
    for class in ClassId::OBJECTS {
        let radius = cfg.validation_radius.get(class).unwrap_or(0.0);
        let members: Vec<usize> = (0..lpc.len()).filter(|&i| lpc.labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let tree = KdTree::from_subset(&lpc.points, &members);
        for &i in &members {
            let keep = tree.nearest_where(&lpc.points[i], |j| j != i).is_some_and(|(_, d2)| d2.sqrt() <= radius);
            if !keep {
                out.labels[i] = ClassId::Background;
            }
        }
    }
    out
}

/// Clustering, voting and validation in sequence. Coordinates are never modified.
pub fn refine(lpc: &LabeledPointCloud, cfg: &RefineConfig) -> Result<LabeledPointCloud> {
    cfg.validate()?;
    let ca = dbscan(&lpc.points, cfg.dbscan_eps, cfg.dbscan_min_pts)?;
    let voted = vote_clusters(lpc, &ca, cfg)?;
    Ok(validate_neighbors(&voted, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn cloud(points: Vec<Point3<f64>>, labels: Vec<ClassId>) -> LabeledPointCloud {
        LabeledPointCloud::new(0, points, labels).unwrap()
    }

    #[test]
    fn majority_vehicle_cluster() {
        let pts: Vec<_> = (0..10).map(|i| Point3::new(0.1 * i as f64, 0.0, 0.0)).collect();
        let mut labels = vec![ClassId::Vehicle; 6];
        labels.extend([ClassId::Background; 4]);
        let lpc = cloud(pts, labels);
        let ca = ClusterAssignment { ids: vec![Some(0); 10] };
        let out = vote_clusters(&lpc, &ca, &RefineConfig::default()).unwrap();
        assert_eq!(out.labels, vec![ClassId::Vehicle; 10]);
    }

    #[test]
    fn two_winners_revert_to_background() {
        let pts = vec![Point3::origin(); 4];
        let labels = vec![ClassId::Pedestrian, ClassId::Pedestrian, ClassId::Vehicle, ClassId::Vehicle];
        let cfg = RefineConfig {
            vote_thresholds: PerObjectClass { pedestrian: 0.3, vehicle: 0.3, bicycle: 0.3 },
            ..RefineConfig::default()
        };
        let ca = ClusterAssignment { ids: vec![Some(0); 4] };
        let out = vote_clusters(&cloud(pts, labels), &ca, &cfg).unwrap();
        assert_eq!(out.labels, vec![ClassId::Background; 4]);
    }

    #[test]
    fn threshold_is_strict() {
        let pts = vec![Point3::origin(); 10];
        let mut labels = vec![ClassId::Vehicle; 4];
        labels.extend([ClassId::Scenario; 6]);
        let ca = ClusterAssignment { ids: vec![Some(0); 10] };
        let out = vote_clusters(&cloud(pts, labels), &ca, &RefineConfig::default()).unwrap();
        assert_eq!(out.labels, vec![ClassId::Background; 10]);
    }

    #[test]
    fn noise_points_unchanged_and_background_cluster_stays() {
        let pts = vec![Point3::origin(); 3];
        let labels = vec![ClassId::Background, ClassId::Background, ClassId::Pedestrian];
        let ca = ClusterAssignment { ids: vec![Some(0), Some(0), None] };
        let out = vote_clusters(&cloud(pts, labels.clone()), &ca, &RefineConfig::default()).unwrap();
        assert_eq!(out.labels, labels);
    }

    #[test]
    fn vote_length_mismatch() {
        let lpc = cloud(vec![Point3::origin()], vec![ClassId::Vehicle]);
        assert!(vote_clusters(&lpc, &ClusterAssignment::default(), &RefineConfig::default()).is_err());
    }

    #[test]
    fn neighbor_validation() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.5, 0.0, 0.0),
            Point3::new(30.0, 0.0, 0.0),
            Point3::new(50.0, 0.0, 0.0),
        ];
        let labels = vec![ClassId::Vehicle, ClassId::Vehicle, ClassId::Pedestrian, ClassId::Scenario];
        let out = validate_neighbors(&cloud(pts, labels), &RefineConfig::default());
        assert_eq!(out.labels, vec![ClassId::Vehicle, ClassId::Vehicle, ClassId::Background, ClassId::Scenario]);
    }

    #[test]
    fn radius_boundary_is_inclusive() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        let lpc = cloud(pts, vec![ClassId::Pedestrian; 2]);
        let out = validate_neighbors(&lpc, &RefineConfig::default());
        assert_eq!(out.labels, vec![ClassId::Pedestrian; 2]);
    }

    #[test]
    fn config_validation() {
        assert!(RefineConfig::default().validate().is_ok());
        let mut cfg = RefineConfig::default();
        cfg.vote_thresholds.vehicle = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = RefineConfig::default();
        cfg.validation_radius.bicycle = -1.0;
        assert!(cfg.validate().is_err());
        let cfg = RefineConfig { dbscan_min_pts: 0, ..RefineConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn compact_vehicle_blob_is_a_fixed_point() {
        let pts: Vec<_> =
            (0..30).map(|i| Point3::new(10.0 + 0.1 * (i % 6) as f64, 0.1 * (i / 6) as f64, 0.0)).collect();
        let lpc = cloud(pts, vec![ClassId::Vehicle; 30]);
        assert_eq!(refine(&lpc, &RefineConfig::default()).unwrap(), lpc);
    }
}
