//! Voxel-level detection / false-alarm probabilities and Chamfer distance.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_transform, is_visible, project_point, Calibration};
use crate::labels::{ClassId, LabeledPointCloud};
use crate::spatial::KdTree;

/// Cartesian comparison grid over an axis-aligned box, with a depth crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalGrid {
    pub voxel_size: f64,
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
    pub crop_depth: f64,
}

impl Default for EvalGrid {
    fn default() -> Self {
        EvalGrid { voxel_size: 0.5, bounds_min: [0.0, -25.0, -3.0], bounds_max: [50.0, 25.0, 5.0], crop_depth: 50.0 }
    }
}

impl EvalGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::Config(format!("voxel_size must be positive, got {}", self.voxel_size)));
        }
        for k in 0..3 {
            let (lo, hi) = (self.bounds_min[k], self.bounds_max[k]);
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Config(format!("degenerate bounds on axis {k}: [{lo}, {hi})")));
            }
        }
        if !(self.crop_depth > 0.0) {
            return Err(Error::Config(format!("crop_depth must be positive, got {}", self.crop_depth)));
        }
        Ok(())
    }

    /// Cells per axis.
    pub fn dims(&self) -> [usize; 3] {
        std::array::from_fn(|k| ((self.bounds_max[k] - self.bounds_min[k]) / self.voxel_size).ceil() as usize)
    }

    pub fn cell_count(&self) -> u64 {
        self.dims().iter().map(|&d| d as u64).product()
    }

    /// Cell containing `p`, `None` outside the half-open bounds.
    pub fn cell_of(&self, p: &Point3<f64>) -> Option<[usize; 3]> {
        let dims = self.dims();
        let mut cell = [0usize; 3];
        for k in 0..3 {
            let f = ((p[k] - self.bounds_min[k]) / self.voxel_size).floor();
            if !(f >= 0.0 && f < dims[k] as f64) {
                return None;
            }
            cell[k] = f as usize;
        }
        Some(cell)
    }
}

/// Class groups reported as separate metric columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassGroup {
    All,
    Scenario,
    Vehicles,
    Vru,
}

impl ClassGroup {
    pub const ALL: [ClassGroup; 4] = [ClassGroup::All, ClassGroup::Scenario, ClassGroup::Vehicles, ClassGroup::Vru];

    pub fn contains(self, class: ClassId) -> bool {
        match self {
            ClassGroup::All => class != ClassId::Background,
            ClassGroup::Scenario => class == ClassId::Scenario,
            ClassGroup::Vehicles => class == ClassId::Vehicle,
            ClassGroup::Vru => matches!(class, ClassId::Pedestrian | ClassId::Bicycle),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassGroup::All => "all",
            ClassGroup::Scenario => "scenario",
            ClassGroup::Vehicles => "vehicles",
            ClassGroup::Vru => "vru",
        }
    }
}

impl fmt::Display for ClassGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Occupied cells of a grid with one class each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VoxelMap {
    pub cells: BTreeMap<[usize; 3], ClassId>,
    pub total_cells: u64,
}

impl VoxelMap {
    pub fn get(&self, cell: &[usize; 3]) -> ClassId {
        self.cells.get(cell).copied().unwrap_or(ClassId::Background)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Rarer classes win when several share a cell.
fn cell_priority(class: ClassId) -> u8 {
    match class {
        ClassId::Background => 0,
        ClassId::Scenario => 1,
        ClassId::Vehicle => 2,
        ClassId::Bicycle => 3,
        ClassId::Pedestrian => 4,
    }
}

/// Selects the points kept for evaluation.
///
/// With a calibration the camera visibility mask applies with `crop_depth`
/// as the far limit; without one, points farther than `crop_depth` from the
/// sensor origin are dropped.
#[derive(Debug, Clone)]
pub struct DepthCrop {
    crop_depth: f64,
    camera: Option<(Calibration, crate::geometry::RigidTransform)>,
}

impl DepthCrop {
    pub fn new(grid: &EvalGrid, calibration: Option<&Calibration>) -> Result<Self> {
        let camera = match calibration {
            Some(c) => {
                let calib = Calibration { max_depth: grid.crop_depth, ..c.clone() };
                let t = build_transform(&calib)?;
                Some((calib, t))
            }
            None => None,
        };
        Ok(DepthCrop { crop_depth: grid.crop_depth, camera })
    }

    pub fn keeps(&self, p: &Point3<f64>) -> bool {
        match &self.camera {
            Some((calib, t)) => {
                let pc = t.apply(p);
                project_point(&pc, &calib.intrinsics).is_some_and(|proj| is_visible(&proj, calib))
            }
            None => p.coords.norm() <= self.crop_depth,
        }
    }

    pub fn apply(&self, lpc: &LabeledPointCloud) -> LabeledPointCloud {
        let keep: Vec<usize> = (0..lpc.len()).filter(|&i| self.keeps(&lpc.points[i])).collect();
        LabeledPointCloud {
            frame_id: lpc.frame_id,
            points: keep.iter().map(|&i| lpc.points[i]).collect(),
            labels: keep.iter().map(|&i| lpc.labels[i]).collect(),
            projected: keep.iter().map(|&i| lpc.projected[i]).collect(),
        }
    }
}

/// Bins labeled points into grid cells. Background-only cells stay empty and
/// points outside the bounds are dropped. Apply a [`DepthCrop`] first.
pub fn voxelize(lpc: &LabeledPointCloud, grid: &EvalGrid) -> VoxelMap {
    let mut cells: BTreeMap<[usize; 3], ClassId> = BTreeMap::new();
    for (p, &class) in lpc.points.iter().zip(&lpc.labels) {
        if class == ClassId::Background {
            continue;
        }
        let Some(cell) = grid.cell_of(p) else { continue };
        cells
            .entry(cell)
            .and_modify(|c| {
                if cell_priority(class) > cell_priority(*c) {
                    *c = class;
                }
            })
            .or_insert(class);
    }
    VoxelMap { cells, total_cells: grid.cell_count() }
}

/// Cell tallies behind Pd and Pfa for one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupCounts {
    /// Cells whose truth class is in the group.
    pub truth_positive: u64,
    /// Of those, cells also predicted in the group.
    pub detected: u64,
    /// Cells predicted in the group whose truth class is not.
    pub false_alarm: u64,
    /// All grid cells whose truth class is not in the group.
    pub negatives: u64,
}

impl GroupCounts {
    pub fn pd(&self) -> Option<f64> {
        (self.truth_positive > 0).then(|| self.detected as f64 / self.truth_positive as f64)
    }

    pub fn pfa(&self) -> Option<f64> {
        (self.negatives > 0).then(|| self.false_alarm as f64 / self.negatives as f64)
    }

    pub fn merge(&mut self, other: &GroupCounts) {
        self.truth_positive += other.truth_positive;
        self.detected += other.detected;
        self.false_alarm += other.false_alarm;
        self.negatives += other.negatives;
    }
}

pub fn group_counts(pred: &VoxelMap, truth: &VoxelMap, group: ClassGroup) -> GroupCounts {
    let mut c = GroupCounts::default();
    for (cell, &t) in &truth.cells {
        if group.contains(t) {
            c.truth_positive += 1;
            if group.contains(pred.get(cell)) {
                c.detected += 1;
            }
        }
    }
    for (cell, &p) in &pred.cells {
        if group.contains(p) && !group.contains(truth.get(cell)) {
            c.false_alarm += 1;
        }
    }
    c.negatives = truth.total_cells.max(pred.total_cells) - c.truth_positive;
    c
}

/// `(pd, pfa)` for one group; `None` marks an undefined (zero-denominator) value.
pub fn pd_pfa(pred: &VoxelMap, truth: &VoxelMap, group: ClassGroup) -> (Option<f64>, Option<f64>) {
    let c = group_counts(pred, truth, group);
    (c.pd(), c.pfa())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChamferMode {
    /// Half the sum of both directed mean distances.
    #[default]
    HalfSum,
    /// Sum of both directed mean distances.
    Sum,
}

fn directed_mean(from: &[Point3<f64>], to: &KdTree) -> f64 {
    let total: f64 = from.iter().map(|p| to.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2.sqrt())).sum();
    total / from.len() as f64
}

/// Symmetric Chamfer distance in meters; `None` when either cloud is empty.
pub fn chamfer(pred: &[Point3<f64>], truth: &[Point3<f64>], mode: ChamferMode) -> Option<f64> {
    if pred.is_empty() || truth.is_empty() {
        return None;
    }
    let forward = directed_mean(pred, &KdTree::new(truth));
    let backward = directed_mean(truth, &KdTree::new(pred));
    Some(match mode {
        ChamferMode::HalfSum => 0.5 * (forward + backward),
        ChamferMode::Sum => forward + backward,
    })
}

/// Point subsets compared by Chamfer distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChamferSubset {
    All,
    Scenario,
    Target,
}

impl ChamferSubset {
    pub const ALL: [ChamferSubset; 3] = [ChamferSubset::All, ChamferSubset::Scenario, ChamferSubset::Target];

    pub fn contains(self, class: ClassId) -> bool {
        match self {
            ChamferSubset::All => class != ClassId::Background,
            ChamferSubset::Scenario => class == ClassId::Scenario,
            ChamferSubset::Target => class.is_object(),
        }
    }
}

fn subset_points(lpc: &LabeledPointCloud, subset: ChamferSubset) -> Vec<Point3<f64>> {
    lpc.points.iter().zip(&lpc.labels).filter(|(_, &c)| subset.contains(c)).map(|(p, _)| *p).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: ClassGroup,
    pub counts: GroupCounts,
    pub pd: Option<f64>,
    pub pfa: Option<f64>,
}

impl GroupMetrics {
    fn from_counts(group: ClassGroup, counts: GroupCounts) -> Self {
        GroupMetrics { group, counts, pd: counts.pd(), pfa: counts.pfa() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `None` for multi-frame aggregates.
    pub frame_id: Option<u64>,
    pub frames: usize,
    /// One entry per [`ClassGroup::ALL`], in that order.
    pub groups: Vec<GroupMetrics>,
    pub cd_all: Option<f64>,
    pub cd_scenario: Option<f64>,
    pub cd_target: Option<f64>,
}

impl MetricsReport {
    pub fn group(&self, group: ClassGroup) -> &GroupMetrics {
        self.groups.iter().find(|g| g.group == group).expect("report covers every group")
    }

    pub fn pd(&self, group: ClassGroup) -> Option<f64> {
        self.group(group).pd
    }

    pub fn pfa(&self, group: ClassGroup) -> Option<f64> {
        self.group(group).pfa
    }

    pub fn chamfer(&self, subset: ChamferSubset) -> Option<f64> {
        match subset {
            ChamferSubset::All => self.cd_all,
            ChamferSubset::Scenario => self.cd_scenario,
            ChamferSubset::Target => self.cd_target,
        }
    }
}

/// Evaluation settings shared by every frame of a run.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub grid: EvalGrid,
    pub crop: DepthCrop,
    pub chamfer: ChamferMode,
}

impl EvalContext {
    pub fn new(grid: EvalGrid, calibration: Option<&Calibration>, chamfer: ChamferMode) -> Result<Self> {
        grid.validate()?;
        let crop = DepthCrop::new(&grid, calibration)?;
        Ok(EvalContext { grid, crop, chamfer })
    }
}

pub fn evaluate_frame(pred: &LabeledPointCloud, truth: &LabeledPointCloud, ctx: &EvalContext) -> MetricsReport {
    let pred = ctx.crop.apply(pred);
    let truth = ctx.crop.apply(truth);
    let pv = voxelize(&pred, &ctx.grid);
    let tv = voxelize(&truth, &ctx.grid);
    let groups = ClassGroup::ALL.iter().map(|&g| GroupMetrics::from_counts(g, group_counts(&pv, &tv, g))).collect();
    let cd = |s| chamfer(&subset_points(&pred, s), &subset_points(&truth, s), ctx.chamfer);
    MetricsReport {
        frame_id: Some(truth.frame_id),
        frames: 1,
        groups,
        cd_all: cd(ChamferSubset::All),
        cd_scenario: cd(ChamferSubset::Scenario),
        cd_target: cd(ChamferSubset::Target),
    }
}

/// Micro-averaged Pd/Pfa (summed cell counts) and per-frame mean Chamfer
/// distance over the frames where it is defined.
pub fn aggregate(reports: &[MetricsReport]) -> MetricsReport {
    let mut counts: BTreeMap<ClassGroup, GroupCounts> = BTreeMap::new();
    for r in reports {
        for g in &r.groups {
            counts.entry(g.group).or_default().merge(&g.counts);
        }
    }
    let groups = ClassGroup::ALL
        .iter()
        .map(|&g| GroupMetrics::from_counts(g, counts.get(&g).copied().unwrap_or_default()))
        .collect();
    let mean_of = |subset: ChamferSubset| {
        let vals: Vec<f64> = reports.iter().filter_map(|r| r.chamfer(subset)).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    MetricsReport {
        frame_id: None,
        frames: reports.iter().map(|r| r.frames).sum(),
        groups,
        cd_all: mean_of(ChamferSubset::All),
        cd_scenario: mean_of(ChamferSubset::Scenario),
        cd_target: mean_of(ChamferSubset::Target),
    }
}
