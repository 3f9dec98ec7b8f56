//! Density-based clustering over 3-D Euclidean distance.
//!
//! A point is a core point when at least `min_pts` points (itself
//! included) lie within `eps`. Core points that are within `eps` of each
//! other share a cluster. A non-core point within `eps` of some core point is
//! a border point and joins the cluster of its nearest core neighbor (ties
//! broken by the neighbor's coordinates), so the resulting partition does not
//! depend on input order. Everything else is noise.
//!
//! Cluster ids are assigned in order of each cluster's lowest core point index.

use std::collections::VecDeque;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::spatial::KdTree;

/// Per-point cluster membership; `None` is noise.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterAssignment {
    pub ids: Vec<Option<usize>>,
}

impl ClusterAssignment {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.ids.iter().flatten().max().map_or(0, |m| m + 1)
    }

    pub fn noise_count(&self) -> usize {
        self.ids.iter().filter(|c| c.is_none()).count()
    }

    /// Point indices of each cluster, indexed by cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, id) in self.ids.iter().enumerate() {
            if let Some(c) = id {
                out[*c].push(i);
            }
        }
        out
    }

    /// Legacy integer encoding with −1 for noise.
    pub fn to_signed(&self) -> Vec<i64> {
        self.ids.iter().map(|c| c.map_or(-1, |c| c as i64)).collect()
    }
}

pub fn dbscan(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Result<ClusterAssignment> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidValue(format!("dbscan eps must be positive, got {eps}")));
    }
    if min_pts == 0 {
        return Err(Error::InvalidValue("dbscan min_pts must be at least 1".into()));
    }
    let n = points.len();
    if n == 0 {
        return Ok(ClusterAssignment::default());
    }
    let tree = KdTree::new(points);
    let is_core: Vec<bool> = points.iter().map(|p| tree.count_within(p, eps) >= min_pts).collect();

    let mut ids: Vec<Option<usize>> = vec![None; n];
    let mut next_id = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !is_core[seed] || ids[seed].is_some() {
            continue;
        }
        ids[seed] = Some(next_id);
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            tree.for_each_within(&points[i], eps, |j, _| {
                if is_core[j] && ids[j].is_none() {
                    ids[j] = Some(next_id);
                    queue.push_back(j);
                }
            });
        }
        next_id += 1;
    }

    for i in 0..n {
        if is_core[i] {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        tree.for_each_within(&points[i], eps, |j, d2| {
            if !is_core[j] {
                return;
            }
            let closer = match best {
                None => true,
                Some((bd, bj)) => d2 < bd || (d2 == bd && lex_less(&points[j], &points[bj])),
            };
            if closer {
                best = Some((d2, j));
            }
        });
        ids[i] = best.and_then(|(_, j)| ids[j]);
    }

    Ok(ClusterAssignment { ids })
}

fn lex_less(a: &Point3<f64>, b: &Point3<f64>) -> bool {
    (a.x, a.y, a.z).partial_cmp(&(b.x, b.y, b.z)) == Some(std::cmp::Ordering::Less)
}
