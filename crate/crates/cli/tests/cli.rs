use std::path::Path;
use std::process::{Command, Output};

use radlabel::io::{ply, tensor};
use radlabel::labels::{ClassId, LabeledPointCloud};
use radlabel_fixture::{write_fixture, SceneSpec};

fn radlabel(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radlabel"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn label_fog_sweep_and_eval_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &[SceneSpec::new(0, 3), SceneSpec::new(1, 2)]).unwrap();
    let cfg = fx.config.to_str().unwrap();

    let o = radlabel(&["label", "--config", cfg, "--workers", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("label: 5 ok, 0 skipped, 0 failed"));
    assert!(dir.path().join("out/labels/scene_1/frame_000001.ply").is_file());

    let o = radlabel(&["fog-sweep", "--config", cfg, "--scene", "1", "--betas", "0.02,0.15"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("out/fog/scene_1/frame_000000_b0.15.png").is_file());
    assert!(!dir.path().join("out/fog/scene_0").exists());

    let truth = fx.truth_dir.to_str().unwrap();
    let o =
        radlabel(&["eval", "--config", cfg, "--pred", truth, "--truth", truth, "--method", "reference"], dir.path());
    assert_eq!(code(&o), 0);
    let report = std::fs::read_to_string(dir.path().join("out/eval/aggregate.csv")).unwrap();
    assert!(report.contains("reference"));
}

#[test]
fn partial_runs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &[SceneSpec::new(0, 2)]).unwrap();
    std::fs::remove_file(fx.member(0, "points", 0)).unwrap();
    let o = radlabel(&["label", "--config", fx.config.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("1 ok, 1 skipped"));

    let o = radlabel(
        &["eval", "--pred", "out/labels", "--truth", fx.truth_dir.to_str().unwrap(), "--out", "ev"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    assert!(dir.path().join("ev/eval/per_frame.csv").is_file());
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &[SceneSpec::new(0, 1)]).unwrap();
    let cfg = fx.config.to_str().unwrap();
    for args in [
        vec!["label"],
        vec!["label", "--config", "missing.toml"],
        vec!["label", "--config", cfg, "--scene", "7"],
        vec!["label", "--config", cfg, "--workers", "0"],
        vec!["label", "--config", cfg, "--frames", "3..1"],
        vec!["fog-sweep", "--config", cfg, "--betas", "-1"],
        vec!["frobnicate"],
        vec!["encode", "--input", "nope.rlt", "--out", "x.rlt"],
    ] {
        let o = radlabel(&args, dir.path());
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(code(&radlabel(&["--help"], dir.path())), 0);
}

#[test]
fn encode_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let mut power = ndarray::Array3::<f32>::zeros((2, 2, 3));
    power[(1, 0, 2)] = 5.0;
    let raed = radlabel::encode::RaedTensor::new(power, ndarray::Array3::from_elem((2, 2, 3), 4u8)).unwrap();
    std::fs::write(dir.path().join("cube.rlt"), tensor::encode_raed(&raed)).unwrap();
    let o = radlabel(&["encode", "--input", "cube.rlt", "--out", "rae.rlt"], dir.path());
    assert_eq!(code(&o), 1, "non-standard shape must be rejected by default");
    let o =
        radlabel(&["encode", "--input", "cube.rlt", "--out", "rae.rlt", "--any-shape", "--no-normalize"], dir.path());
    assert_eq!(code(&o), 0);
    let rae = tensor::read_rae(&dir.path().join("rae.rlt"), false).unwrap();
    assert_eq!(rae.power[(2, 0, 3)], 5.0);

    let lpc = LabeledPointCloud::new(2, vec![nalgebra::Point3::new(1.0, 2.0, 3.0)], vec![ClassId::Bicycle]).unwrap();
    ply::write_labeled(
        &dir.path().join("in/a.ply"),
        &lpc,
        &ply::Palette::default(),
        ply::PlyFormat::BinaryLittleEndian,
    )
    .unwrap();
    let o = radlabel(&["export", "--input", "in", "--out", "exported", "--format", "ascii"], dir.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("exported/a.ply")).unwrap();
    assert!(text.contains("format ascii 1.0"));
    assert_eq!(ply::decode(text.as_bytes()).unwrap().into_labeled(0).unwrap(), lpc);
}
