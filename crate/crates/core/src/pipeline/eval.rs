//! `eval`: voxel Pd/Pfa and Chamfer distance of predicted against reference
//! labeled clouds.
//!
//! Both directories are scanned recursively for `.ply` files and frames are
//! paired by relative path. Unpaired or unreadable frames are reported as
//! skipped and excluded from the aggregate. Outputs under `eval/`:
//!
//! | file            | content                                           |
//! |-----------------|---------------------------------------------------|
//! | `per_frame.csv` | one row per frame, skipped frames included        |
//! | `aggregate.csv` | one row, micro-averaged over evaluated frames     |
//! | `report.json`   | per-frame and aggregate reports with cell counts  |
//! | `summary.txt`   | human-readable aggregate and skip list            |
//!
//! Undefined values are written as `NA`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Component, Path};

use serde::Serialize;

use super::{frames, run_pool, PipelineConfig};
use crate::error::{Error, Result};
use crate::geometry::Calibration;
use crate::io::calib::read_calibration;
use crate::io::ply::{self, Palette};
use crate::labels::LabeledPointCloud;
use crate::metrics::{aggregate, evaluate_frame, ChamferSubset, ClassGroup, EvalContext, MetricsReport};

pub const EVAL_DIR: &str = "eval";

pub const CSV_COLUMNS: [&str; 15] = [
    "fog",
    "method",
    "frame",
    "status",
    "pd_all",
    "pfa_all",
    "pd_scenario",
    "pfa_scenario",
    "pd_vehicles",
    "pfa_vehicles",
    "pd_vru",
    "pfa_vru",
    "cd_all",
    "cd_scenario",
    "cd_target",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameEval {
    /// Relative path shared by the prediction and reference files.
    pub key: String,
    pub report: Option<MetricsReport>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutcome {
    pub fog: f64,
    pub method: String,
    pub frames: Vec<FrameEval>,
    pub aggregate: MetricsReport,
}

impl EvalOutcome {
    pub fn skipped(&self) -> usize {
        self.frames.iter().filter(|f| f.skipped.is_some()).count()
    }
}

fn collect_ply(root: &Path) -> Result<BTreeSet<String>> {
    if !root.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", root.display())));
    }
    let mut out = BTreeSet::new();
    for entry in walkdir::WalkDir::new(root) {
        let entry = entry.map_err(|e| Error::Config(format!("{}: {e}", root.display())))?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply")) {
            let rel = path.strip_prefix(root).expect("walk stays under root");
            let parts: Vec<String> = rel
                .components()
                .filter_map(|c| match c {
                    Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
                    _ => None,
                })
                .collect();
            out.insert(parts.join("/"));
        }
    }
    Ok(out)
}

/// Reads a labeled cloud; files without a `label` property fall back to
/// mapping palette colors to classes.
pub fn read_labeled(path: &Path) -> Result<LabeledPointCloud> {
    let mut cloud = ply::read_ply(path)?;
    if cloud.labels.is_none() {
        if let Some(colors) = &cloud.colors {
            let palette = Palette::default();
            let labels = colors
                .iter()
                .map(|&rgb| palette.class_of(rgb).map(|c| c as u8))
                .collect::<Option<Vec<u8>>>()
                .ok_or_else(|| Error::Parse(format!("{}: color outside the class palette", path.display())))?;
            cloud.labels = Some(labels);
        }
    }
    cloud.into_labeled(0)
}

/// Scene id encoded in a `scene_<id>/...` key.
fn scene_of(key: &str) -> Option<u32> {
    key.split('/').next()?.strip_prefix("scene_")?.parse().ok()
}

pub fn run_eval(config: &PipelineConfig, pred_dir: &Path, truth_dir: &Path) -> Result<EvalOutcome> {
    let pred = collect_ply(pred_dir)?;
    let truth = collect_ply(truth_dir)?;
    let keys: Vec<String> = pred.union(&truth).cloned().collect();

    let override_calib = match &config.calibration {
        Some(p) => Some(read_calibration(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut calibs: BTreeMap<u32, Calibration> = BTreeMap::new();
    for scene in keys.iter().filter_map(|k| scene_of(k)).collect::<BTreeSet<_>>() {
        let calib = match &override_calib {
            Some(c) => Some(c.clone()),
            None => {
                let p = frames::scene_dir(&config.dataset_root, scene).join(frames::CALIB_FILE);
                if p.is_file() {
                    Some(read_calibration(&p).map_err(|e| Error::Config(format!("scene {scene}: {e}")))?)
                } else {
                    None
                }
            }
        };
        if let Some(c) = calib {
            calibs.insert(scene, c);
        }
    }
    let mut contexts: BTreeMap<Option<u32>, EvalContext> = BTreeMap::new();
    for key in &keys {
        let scene = scene_of(key);
        if contexts.contains_key(&scene) {
            continue;
        }
        // Config override first, then the scene's calib.txt, else a range crop.
        let calib = scene.and_then(|s| calibs.get(&s).cloned()).or_else(|| override_calib.clone());
        let ctx = EvalContext::new(config.eval.grid.clone(), calib.as_ref(), config.eval.chamfer)
            .map_err(|e| Error::Config(e.to_string()))?;
        contexts.insert(scene, ctx);
    }

    let frames = run_pool(config.workers, &keys, |key| {
        let skip = |reason: String| {
            log::warn!("frame={key} status=skipped reason={reason}");
            FrameEval { key: key.clone(), report: None, skipped: Some(reason) }
        };
        if !pred.contains(key) {
            return skip("missing prediction".into());
        }
        if !truth.contains(key) {
            return skip("missing reference".into());
        }
        let load = |root: &Path| read_labeled(&root.join(key));
        let (p, t) = match (load(pred_dir), load(truth_dir)) {
            (Ok(p), Ok(t)) => (p, t),
            (Err(e), _) => return skip(format!("prediction: {e}")),
            (_, Err(e)) => return skip(format!("reference: {e}")),
        };
        let report = evaluate_frame(&p, &t, &contexts[&scene_of(key)]);
        FrameEval { key: key.clone(), report: Some(report), skipped: None }
    })?;

    let evaluated: Vec<MetricsReport> = frames.iter().filter_map(|f| f.report.clone()).collect();
    let outcome = EvalOutcome {
        fog: config.eval.fog_level,
        method: config.method_name(),
        aggregate: aggregate(&evaluated),
        frames,
    };
    write_outputs(&outcome, &config.output_dir.join(EVAL_DIR))?;
    Ok(outcome)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

fn csv_row(fog: f64, method: &str, frame: &str, status: &str, report: Option<&MetricsReport>) -> Vec<String> {
    let mut row = vec![format!("{fog}"), method.to_string(), frame.to_string(), status.to_string()];
    for g in ClassGroup::ALL {
        row.push(fmt_opt(report.and_then(|r| r.pd(g))));
        row.push(fmt_opt(report.and_then(|r| r.pfa(g))));
    }
    for s in ChamferSubset::ALL {
        row.push(fmt_opt(report.and_then(|r| r.chamfer(s))));
    }
    row
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    crate::io::write_bytes(path, &bytes)
}

/// Human-readable summary of an evaluation.
pub fn summary_text(outcome: &EvalOutcome) -> String {
    let a = &outcome.aggregate;
    let mut s = String::new();
    let _ = writeln!(s, "method: {}", outcome.method);
    let _ = writeln!(s, "fog: {}", outcome.fog);
    let _ = writeln!(s, "frames evaluated: {}", a.frames);
    let _ = writeln!(s, "frames skipped: {}", outcome.skipped());
    for g in ClassGroup::ALL {
        let _ = writeln!(s, "{:<9} pd={} pfa={}", g.name(), fmt_opt(a.pd(g)), fmt_opt(a.pfa(g)));
    }
    let _ = writeln!(
        s,
        "chamfer   all={} scenario={} target={}",
        fmt_opt(a.cd_all),
        fmt_opt(a.cd_scenario),
        fmt_opt(a.cd_target)
    );
    for f in &outcome.frames {
        if let Some(reason) = &f.skipped {
            let _ = writeln!(s, "skipped {}: {reason}", f.key);
        }
    }
    s
}

fn write_outputs(outcome: &EvalOutcome, dir: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = outcome
        .frames
        .iter()
        .map(|f| {
            let status = if f.skipped.is_some() { "skipped" } else { "ok" };
            csv_row(outcome.fog, &outcome.method, &f.key, status, f.report.as_ref())
        })
        .collect();
    write_csv(&dir.join("per_frame.csv"), &rows)?;
    write_csv(
        &dir.join("aggregate.csv"),
        &[csv_row(outcome.fog, &outcome.method, "all", "ok", Some(&outcome.aggregate))],
    )?;
    let json = serde_json::to_string_pretty(outcome).expect("report serializes") + "\n";
    crate::io::write_bytes(&dir.join("report.json"), json.as_bytes())?;
    crate::io::write_bytes(&dir.join("summary.txt"), summary_text(outcome).as_bytes())
}
