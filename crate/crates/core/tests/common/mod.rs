//! Brute-force reference implementations and generators shared by the
//! integration tests. Each oracle uses a different algorithm from the
//! library code it checks.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{Matrix3, Point3, Rotation3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use radlabel::geometry::Calibration;
use radlabel::labels::{ClassId, LabeledPointCloud};
use radlabel::refine::RefineConfig;

pub fn d2(a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let (dx, dy, dz) = (a.x - b.x, a.y - b.y, a.z - b.z);
    dx * dx + dy * dy + dz * dz
}

/// Rotation composed from elemental axis-angle rotations.
pub fn elemental_rotation(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), roll);
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), pitch);
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
    (rz * ry * rx).into_inner()
}

pub fn random_calibration(rng: &mut ChaCha8Rng) -> Calibration {
    use std::f64::consts::PI;
    let (w, h) = (rng.gen_range(64..2000u32), rng.gen_range(48..1500u32));
    Calibration {
        roll: rng.gen_range(-PI..PI),
        pitch: rng.gen_range(-PI / 2.0..PI / 2.0),
        yaw: rng.gen_range(-PI..PI),
        translation: Vector3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
        intrinsics: Calibration::pinhole(
            rng.gen_range(100.0..3000.0),
            rng.gen_range(100.0..3000.0),
            f64::from(w) * rng.gen_range(0.3..0.7),
            f64::from(h) * rng.gen_range(0.3..0.7),
            rng.gen_range(-2.0..2.0),
        ),
        image_width: w,
        image_height: h,
        max_depth: rng.gen_range(10.0..80.0),
    }
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<Point3<f64>> {
    (0..n)
        .map(|_| Point3::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half)))
        .collect()
}

/// Points around a few random centers plus uniform clutter. Coordinates
/// are snapped to a 1/16 m lattice so exact duplicates and distance ties
/// occur.
pub fn clustered_scene(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point3<f64>> {
    let centers: Vec<Point3<f64>> = (0..rng.gen_range(1..6)).map(|_| random_points(rng, 1, 10.0)[0]).collect();
    let snap = |v: f64| (v * 16.0).round() / 16.0;
    (0..n)
        .map(|_| {
            let p = if rng.gen_bool(0.8) {
                let c = centers[rng.gen_range(0..centers.len())];
                c + Vector3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-0.7..0.7))
            } else {
                random_points(rng, 1, 12.0)[0]
            };
            Point3::new(snap(p.x), snap(p.y), snap(p.z))
        })
        .collect()
}

pub fn random_class(rng: &mut ChaCha8Rng) -> ClassId {
    ClassId::ALL[rng.gen_range(0..ClassId::ALL.len())]
}

/// All-pairs DBSCAN: union-find over core pairs, borders to their nearest
/// core (ties by lexicographic coordinates). Labels are `-1` for noise.
pub fn brute_dbscan(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Vec<i64> {
    let n = points.len();
    let r2 = eps * eps;
    let core: Vec<bool> =
        (0..n).map(|i| (0..n).filter(|&j| d2(&points[i], &points[j]) <= r2).count() >= min_pts).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && d2(&points[i], &points[j]) <= r2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut labels = vec![-1i64; n];
    for i in 0..n {
        if core[i] {
            labels[i] = find(&mut parent, i) as i64;
        }
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let best = (0..n).filter(|&j| core[j] && d2(&points[i], &points[j]) <= r2).min_by(|&a, &b| {
            let ka = (d2(&points[i], &points[a]), points[a].x, points[a].y, points[a].z);
            let kb = (d2(&points[i], &points[b]), points[b].x, points[b].y, points[b].z);
            ka.partial_cmp(&kb).unwrap()
        });
        if let Some(j) = best {
            labels[i] = labels[j];
        }
    }
    labels
}

/// True when the two labelings are equal up to a bijective renaming of
/// non-negative ids; `-1` must match exactly.
pub fn same_partition(a: &[i64], b: &[i64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: HashMap<i64, i64> = HashMap::new();
    let mut back: HashMap<i64, i64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

/// Voting rule applied per cluster by direct counting.
pub fn brute_vote(labels: &[ClassId], clusters: &[i64], cfg: &RefineConfig) -> Vec<ClassId> {
    let mut out = labels.to_vec();
    let ids: std::collections::BTreeSet<i64> = clusters.iter().copied().filter(|&c| c >= 0).collect();
    for id in ids {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| clusters[i] == id).collect();
        let winners: Vec<ClassId> = ClassId::OBJECTS
            .into_iter()
            .filter(|&c| {
                let frac = members.iter().filter(|&&i| labels[i] == c).count() as f64 / members.len() as f64;
                frac > cfg.vote_thresholds.get(c).unwrap()
            })
            .collect();
        let new = if winners.len() == 1 { winners[0] } else { ClassId::Background };
        for i in members {
            out[i] = new;
        }
    }
    out
}

/// Object labels whose nearest other same-label point is farther than the
/// class radius become background.
pub fn brute_validate(lpc: &LabeledPointCloud, cfg: &RefineConfig) -> Vec<ClassId> {
    let n = lpc.len();
    (0..n)
        .map(|i| {
            let c = lpc.labels[i];
            let Some(radius) = cfg.validation_radius.get(c) else { return c };
            let nearest = (0..n)
                .filter(|&j| j != i && lpc.labels[j] == c)
                .map(|j| d2(&lpc.points[i], &lpc.points[j]))
                .fold(f64::INFINITY, f64::min);
            if nearest <= radius * radius {
                c
            } else {
                ClassId::Background
            }
        })
        .collect()
}

/// Double-loop Chamfer distance, half-sum convention.
pub fn brute_chamfer(a: &[Point3<f64>], b: &[Point3<f64>]) -> f64 {
    let directed = |from: &[Point3<f64>], to: &[Point3<f64>]| {
        from.iter().map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).sum::<f64>()
            / from.len() as f64
    };
    0.5 * (directed(a, b) + directed(b, a))
}

pub fn max_abs_diff<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
