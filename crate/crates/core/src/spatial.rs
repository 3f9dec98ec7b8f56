//! Static 3-D kd-tree for radius and nearest-neighbor queries.
//!
//! The tree is implicit: a permutation of point indices recursively
//! partitioned around the median of the splitting axis. Duplicate
//! coordinates are fine; there is no bucket limit.

use nalgebra::Point3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
pub struct KdTree {
    coords: Vec<[f64; 3]>,
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(points: &[Point3<f64>]) -> Self {
        Self::with_order(points, (0..points.len()).collect())
    }

    /// Builds a tree over a subset of `points`; query results report indices
    /// into `points`, not into `subset`.
    pub fn from_subset(points: &[Point3<f64>], subset: &[usize]) -> Self {
        Self::with_order(points, subset.to_vec())
    }

    fn with_order(points: &[Point3<f64>], order: Vec<usize>) -> Self {
        let coords = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut tree = KdTree { coords, order };
        tree.build(0, tree.order.len(), 0);
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn build(&mut self, lo: usize, hi: usize, depth: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let axis = depth % 3;
        let mid = lo + (hi - lo) / 2;
        let coords = &self.coords;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| coords[a][axis].total_cmp(&coords[b][axis]));
        self.build(lo, mid, depth + 1);
        self.build(mid + 1, hi, depth + 1);
    }

    /// Calls `visit(index, squared_distance)` for every point with
    /// squared distance `<= radius²` from `query`.
    pub fn for_each_within<F>(&self, query: &Point3<f64>, radius: f64, mut visit: F)
    where
        F: FnMut(usize, f64),
    {
        let q = [query.x, query.y, query.z];
        let r2 = radius * radius;
        self.within_rec(&q, r2, 0, self.order.len(), 0, &mut visit);
    }

    fn within_rec<F>(&self, q: &[f64; 3], r2: f64, lo: usize, hi: usize, depth: usize, visit: &mut F)
    where
        F: FnMut(usize, f64),
    {
        if hi - lo <= LEAF_SIZE {
            for &idx in &self.order[lo..hi] {
                let d2 = dist2(q, &self.coords[idx]);
                if d2 <= r2 {
                    visit(idx, d2);
                }
            }
            return;
        }
        let axis = depth % 3;
        let mid = lo + (hi - lo) / 2;
        let pivot = self.order[mid];
        let d2 = dist2(q, &self.coords[pivot]);
        if d2 <= r2 {
            visit(pivot, d2);
        }
        let diff = q[axis] - self.coords[pivot][axis];
        let (near, far) = if diff <= 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.within_rec(q, r2, near.0, near.1, depth + 1, visit);
        if diff * diff <= r2 {
            self.within_rec(q, r2, far.0, far.1, depth + 1, visit);
        }
    }

    /// Number of points within `radius` of `query`, inclusive.
    pub fn count_within(&self, query: &Point3<f64>, radius: f64) -> usize {
        let mut n = 0;
        self.for_each_within(query, radius, |_, _| n += 1);
        n
    }

    /// Nearest point accepted by `accept`, as `(index, squared_distance)`.
    pub fn nearest_where<F>(&self, query: &Point3<f64>, accept: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> bool,
    {
        let q = [query.x, query.y, query.z];
        let mut best: Option<(usize, f64)> = None;
        self.nearest_rec(&q, 0, self.order.len(), 0, &accept, &mut best);
        best
    }

    pub fn nearest(&self, query: &Point3<f64>) -> Option<(usize, f64)> {
        self.nearest_where(query, |_| true)
    }

    fn nearest_rec<F>(
        &self,
        q: &[f64; 3],
        lo: usize,
        hi: usize,
        depth: usize,
        accept: &F,
        best: &mut Option<(usize, f64)>,
    ) where
        F: Fn(usize) -> bool,
    {
        let consider = |idx: usize, best: &mut Option<(usize, f64)>| {
            if !accept(idx) {
                return;
            }
            let d2 = dist2(q, &self.coords[idx]);
            if best.is_none_or(|(_, b)| d2 < b) {
                *best = Some((idx, d2));
            }
        };
        if hi - lo <= LEAF_SIZE {
            for &idx in &self.order[lo..hi] {
                consider(idx, best);
            }
            return;
        }
        let axis = depth % 3;
        let mid = lo + (hi - lo) / 2;
        let pivot = self.order[mid];
        consider(pivot, best);
        let diff = q[axis] - self.coords[pivot][axis];
        let (near, far) = if diff <= 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_rec(q, near.0, near.1, depth + 1, accept, best);
        if best.is_none_or(|(_, b)| diff * diff <= b) {
            self.nearest_rec(q, far.0, far.1, depth + 1, accept, best);
        }
    }
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3<f64>> {
        (0..n)
            .map(|_| Point3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn radius_query_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = random_cloud(&mut rng, 500);
        let tree = KdTree::new(&pts);
        for q in pts.iter().take(50) {
            let mut got = Vec::new();
            tree.for_each_within(q, 0.8, |i, _| got.push(i));
            got.sort_unstable();
            let want: Vec<usize> = (0..pts.len()).filter(|&i| (pts[i] - q).norm_squared() <= 0.64).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn nearest_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = random_cloud(&mut rng, 300);
        let tree = KdTree::new(&pts);
        for (qi, q) in pts.iter().enumerate().take(60) {
            let (_, d2) = tree.nearest_where(q, |i| i != qi).unwrap();
            let want =
                (0..pts.len()).filter(|&i| i != qi).map(|i| (pts[i] - q).norm_squared()).fold(f64::INFINITY, f64::min);
            assert_eq!(d2, want);
        }
    }

    #[test]
    fn many_duplicates() {
        let pts = vec![Point3::new(1.0, 1.0, 0.0); 200];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.count_within(&Point3::new(1.0, 1.0, 0.0), 0.0), 200);
        assert!(tree.nearest(&Point3::origin()).is_some());
    }

    #[test]
    fn subset_reports_original_indices() {
        let pts: Vec<_> = (0..20).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let tree = KdTree::from_subset(&pts, &[3, 9, 15]);
        assert_eq!(tree.len(), 3);
        assert_eq!(tree.nearest(&Point3::new(10.0, 0.0, 0.0)).unwrap().0, 9);
        assert!(KdTree::from_subset(&pts, &[]).nearest(&Point3::origin()).is_none());
    }
}
