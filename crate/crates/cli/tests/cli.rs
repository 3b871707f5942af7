//! Black-box tests of the `rotavat` binary: exit codes, determinism,
//! config/flag precedence, and the behavior of each subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rotavat::scene::{load_scene, save_scene};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotavat"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_expect(args: &[&str], code: i32) -> Output {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "args {:?}\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_slice(&read(p)).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// synth into the given dir and return (gt, pred) paths.
fn synth(dir: &TempDir, extra: &[&str]) -> (PathBuf, PathBuf) {
    let gt = path(dir, "gt.json");
    let pred = path(dir, "pred.json");
    let mut args = vec!["synth", "--out-gt", s(&gt), "--out-pred", s(&pred)];
    args.extend_from_slice(extra);
    run_expect(&args, 0);
    (gt, pred)
}

#[test]
fn synth_writes_loadable_deterministic_scenes() {
    let dir = TempDir::new().unwrap();
    let (gt, pred) = synth(&dir, &["--persons", "7", "--seed", "42"]);
    let truth = load_scene(&read(&gt)).unwrap();
    let noisy = load_scene(&read(&pred)).unwrap();
    assert_eq!(truth.meshes.len(), 7);
    assert_eq!(noisy.meshes.len(), 7);
    assert!(truth.camera.is_some());
    assert_ne!(read(&gt), read(&pred));

    // Same seed, fresh dir: byte-identical artifacts.
    let dir2 = TempDir::new().unwrap();
    let (gt2, pred2) = synth(&dir2, &["--persons", "7", "--seed", "42"]);
    assert_eq!(read(&gt), read(&gt2));
    assert_eq!(read(&pred), read(&pred2));

    // Different seed: different scenes.
    let dir3 = TempDir::new().unwrap();
    let (gt3, _) = synth(&dir3, &["--persons", "7", "--seed", "43"]);
    assert_ne!(read(&gt), read(&gt3));
}

#[test]
fn synth_zero_persons_is_valid() {
    let dir = TempDir::new().unwrap();
    let (gt, pred) = synth(&dir, &["--persons", "0"]);
    assert!(load_scene(&read(&gt)).unwrap().meshes.is_empty());
    assert!(load_scene(&read(&pred)).unwrap().meshes.is_empty());
}

#[test]
fn synth_config_merges_under_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "cfg.json");
    // Config asks for 3 persons and a corruption-free copy.
    std::fs::write(
        &cfg,
        r#"{
            "scene": {"person_count": 3, "seed": 5},
            "corruption": {
                "tilt_toward_camera": 0.0, "tilt_jitter": 0.0,
                "scale_error": 0.0, "depth_error": 0.0, "elevation_error": 0.0
            }
        }"#,
    )
    .unwrap();
    let (gt, pred) = synth(&dir, &["--config", s(&cfg)]);
    // Zero corruption: the "corrupted" scene is the ground truth, byte for byte.
    assert_eq!(read(&gt), read(&pred));
    assert_eq!(load_scene(&read(&gt)).unwrap().meshes.len(), 3);

    // The --persons flag outranks the config.
    let dir2 = TempDir::new().unwrap();
    let cfg2 = path(&dir2, "cfg.json");
    std::fs::copy(&cfg, &cfg2).unwrap();
    let (gt2, _) = synth(&dir2, &["--config", s(&cfg2), "--persons", "5"]);
    assert_eq!(load_scene(&read(&gt2)).unwrap().meshes.len(), 5);
}

/// Shared fixture: a scene generated from a camera that sits exactly on a
/// small calibration lattice (every lattice value is representable, so
/// recovery can be compared bit for bit).
fn lattice_config() -> &'static str {
    r#"{
        "scene": {
            "person_count": 6,
            "ground_region": {"x": [-300.0, 300.0], "z": [1700.0, 2700.0]},
            "camera": {"f": 1200.0, "pitch": -0.5, "height": 3000.0},
            "seed": 9
        },
        "grid": {
            "bins": 3,
            "f_range": [800.0, 1600.0],
            "pitch_range": [-1.0, 0.0],
            "height_range": [2000.0, 4000.0]
        }
    }"#
}

#[test]
fn calibrate_recovers_lattice_camera_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, lattice_config()).unwrap();
    let (gt, _) = synth(&dir, &["--config", s(&cfg)]);

    let calib = path(&dir, "calib.json");
    run_expect(
        &[
            "calibrate",
            "--scene",
            s(&gt),
            "--out",
            s(&calib),
            "--config",
            s(&cfg),
        ],
        0,
    );
    let v = json(&calib);
    assert_eq!(v["f"].as_f64().unwrap(), 1200.0);
    assert_eq!(v["pitch"].as_f64().unwrap(), -0.5);
    assert_eq!(v["height"].as_f64().unwrap(), 3000.0);
    assert!(v["mse"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["evaluations"].as_u64().unwrap(), 27);
    assert_eq!(v["residuals"].as_array().unwrap().len(), 6);

    // Idempotent: a second run writes identical bytes.
    let calib2 = path(&dir, "calib2.json");
    run_expect(
        &[
            "calibrate",
            "--scene",
            s(&gt),
            "--out",
            s(&calib2),
            "--config",
            s(&cfg),
        ],
        0,
    );
    assert_eq!(read(&calib), read(&calib2));
}

#[test]
fn calibrate_reports_grid_size_and_warns_on_few_pairs() {
    let dir = TempDir::new().unwrap();
    let (gt, _) = synth(&dir, &["--persons", "2", "--seed", "1"]);
    let calib = path(&dir, "calib.json");
    let out = run_expect(
        &[
            "calibrate",
            "--scene",
            s(&gt),
            "--out",
            s(&calib),
            "--bins",
            "10",
        ],
        0,
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("only 2 usable pair(s)"));
    assert_eq!(json(&calib)["evaluations"].as_u64().unwrap(), 1000);
}

#[test]
fn calibrate_empty_scene_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let (gt, _) = synth(&dir, &["--persons", "0"]);
    let calib = path(&dir, "calib.json");
    let out = run_expect(&["calibrate", "--scene", s(&gt), "--out", s(&calib)], 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no foot/head pairs"), "stderr: {stderr}");
    assert!(!calib.exists());
}

#[test]
fn align_verifies_and_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, lattice_config()).unwrap();
    let (_, pred) = synth(
        &dir,
        &["--config", s(&cfg), "--tilt", "0.25", "--tilt-jitter", "0"],
    );

    let aligned = path(&dir, "aligned.json");
    let traces = path(&dir, "traces.json");
    run_expect(
        &[
            "align",
            "--scene",
            s(&pred),
            "--use-scene-camera",
            "--out",
            s(&aligned),
            "--trace",
            s(&traces),
            "--verify",
        ],
        0,
    );
    let trace_list = json(&traces);
    assert_eq!(trace_list.as_array().unwrap().len(), 6);

    // Aligning the aligned output again is the identity transform.
    let aligned2 = path(&dir, "aligned2.json");
    let traces2 = path(&dir, "traces2.json");
    run_expect(
        &[
            "align",
            "--scene",
            s(&aligned),
            "--use-scene-camera",
            "--out",
            s(&aligned2),
            "--trace",
            s(&traces2),
            "--verify",
        ],
        0,
    );
    // The scene file quantizes coordinates to 9 significant digits, so the
    // second pass sees identity transforms up to that quantization.
    for entry in json(&traces2).as_array().unwrap() {
        assert!((entry["lambda_ground"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
        assert!(entry["rotation_angle"].as_f64().unwrap().abs() <= 1e-7);
        assert!((entry["scale_head"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn align_without_any_camera_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let (gt, _) = synth(&dir, &["--persons", "2", "--seed", "3"]);
    let mut scene = load_scene(&read(&gt)).unwrap();
    scene.camera = None;
    let cameraless = path(&dir, "cameraless.json");
    std::fs::write(&cameraless, save_scene(&scene).unwrap()).unwrap();

    let out_path = path(&dir, "aligned.json");
    let out = run_expect(
        &["align", "--scene", s(&cameraless), "--out", s(&out_path)],
        3,
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("no camera"));

    // An empty scene aligns successfully (there is nothing to fail).
    let (empty_gt, _) = synth(&dir, &["--persons", "0"]);
    run_expect(
        &["align", "--scene", s(&empty_gt), "--out", s(&out_path)],
        0,
    );
}

#[test]
fn evaluate_identity_and_pure_translation() {
    let dir = TempDir::new().unwrap();
    let (gt, _) = synth(&dir, &["--persons", "4", "--seed", "8"]);

    let report = path(&dir, "report.json");
    run_expect(
        &[
            "evaluate",
            "--pred",
            s(&gt),
            "--gt",
            s(&gt),
            "--out",
            s(&report),
        ],
        0,
    );
    let agg = &json(&report)["aggregate"];
    for key in ["mpjpe", "pa_mpjpe", "pve", "w_mpjpe", "w_pve"] {
        assert!(agg[key].as_f64().unwrap().abs() <= 1e-9, "{key} nonzero");
    }

    // Translate every mesh by a fixed offset: only the world-frame metrics
    // see it, and they see exactly its norm.
    let scene = load_scene(&read(&gt)).unwrap();
    let t = nalgebra::Vector3::new(3.0, 0.0, 4.0); // |t| = 5
    let translated = rotavat::Scene {
        meshes: scene
            .meshes
            .iter()
            .map(|m| m.map_vertices(|v| v + t))
            .collect(),
        ..scene.clone()
    };
    let moved = path(&dir, "moved.json");
    std::fs::write(&moved, save_scene(&translated).unwrap()).unwrap();
    run_expect(
        &[
            "evaluate",
            "--pred",
            s(&moved),
            "--gt",
            s(&gt),
            "--out",
            s(&report),
        ],
        0,
    );
    let agg = &json(&report)["aggregate"];
    assert!((agg["w_mpjpe"].as_f64().unwrap() - 5.0).abs() <= 1e-9);
    assert!((agg["w_pve"].as_f64().unwrap() - 5.0).abs() <= 1e-9);
    assert!(agg["mpjpe"].as_f64().unwrap() <= 1e-9);
    assert!(agg["pa_mpjpe"].as_f64().unwrap() <= 1e-9);
    assert!(agg["pve"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn evaluate_unmatched_person_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let (gt, _) = synth(&dir, &["--persons", "3", "--seed", "2"]);
    let scene = load_scene(&read(&gt)).unwrap();
    let mut extra = scene.clone();
    extra.meshes[0].person_id = "stranger".to_string();
    let pred = path(&dir, "pred-extra.json");
    std::fs::write(&pred, save_scene(&extra).unwrap()).unwrap();
    let report = path(&dir, "report.json");
    let out = run_expect(
        &[
            "evaluate",
            "--pred",
            s(&pred),
            "--gt",
            s(&gt),
            "--out",
            s(&report),
        ],
        3,
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("stranger"));
}

#[test]
fn render_views_and_camera_requirements() {
    let dir = TempDir::new().unwrap();
    let (gt, _) = synth(&dir, &["--persons", "3", "--seed", "4"]);

    // Front and pair need the camera; side does not.
    let front = path(&dir, "front.svg");
    run_expect(
        &[
            "render",
            "--scene",
            s(&gt),
            "--view",
            "front",
            "--out",
            s(&front),
        ],
        0,
    );
    assert!(read(&front).starts_with(b"<svg "));

    let pair = path(&dir, "pair.svg");
    run_expect(
        &[
            "render",
            "--scene",
            s(&gt),
            "--view",
            "pair",
            "--out",
            s(&pair),
        ],
        0,
    );
    let pair_svg = String::from_utf8(read(&pair)).unwrap();
    assert_eq!(pair_svg.matches("<g transform=").count(), 2);

    let mut scene = load_scene(&read(&gt)).unwrap();
    scene.camera = None;
    let cameraless = path(&dir, "cameraless.json");
    std::fs::write(&cameraless, save_scene(&scene).unwrap()).unwrap();
    let side = path(&dir, "side.svg");
    run_expect(
        &[
            "render",
            "--scene",
            s(&cameraless),
            "--view",
            "side",
            "--out",
            s(&side),
        ],
        0,
    );
    run_expect(
        &[
            "render",
            "--scene",
            s(&cameraless),
            "--view",
            "front",
            "--out",
            s(&front),
        ],
        3,
    );

    // Determinism.
    let side2 = path(&dir, "side2.svg");
    run_expect(
        &[
            "render",
            "--scene",
            s(&cameraless),
            "--view",
            "side",
            "--out",
            s(&side2),
        ],
        0,
    );
    assert_eq!(read(&side), read(&side2));

    // Flag variants change the output but stay well-formed.
    let styled = path(&dir, "styled.svg");
    run_expect(
        &[
            "render",
            "--scene",
            s(&gt),
            "--view",
            "side",
            "--side-axis",
            "z",
            "--no-ground",
            "--stroke-width",
            "3.5",
            "--palette-seed",
            "7",
            "--out",
            s(&styled),
        ],
        0,
    );
    let styled_svg = String::from_utf8(read(&styled)).unwrap();
    assert!(!styled_svg.contains("id=\"ground\""));
    assert!(styled_svg.contains("stroke-width=\"3.50\""));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();

    // Unknown flag (clap).
    run_expect(&["synth", "--nope"], 2);
    // Missing required flag (clap).
    run_expect(&["calibrate"], 2);

    // Malformed scene JSON.
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, b"{]").unwrap();
    let out_file = path(&dir, "out.json");
    run_expect(&["calibrate", "--scene", s(&bad), "--out", s(&out_file)], 2);

    // Schema violation: wrong units.
    let wrong_units = path(&dir, "units.json");
    std::fs::write(
        &wrong_units,
        br#"{"units":"m","image":{"width":10,"height":10},"camera":null,"meshes":[]}"#,
    )
    .unwrap();
    run_expect(
        &[
            "render",
            "--scene",
            s(&wrong_units),
            "--view",
            "side",
            "--out",
            s(&out_file),
        ],
        2,
    );

    // Config with an unknown key.
    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, br#"{"personz": 3}"#).unwrap();
    let gt = path(&dir, "gt.json");
    let pred = path(&dir, "pred.json");
    run_expect(
        &[
            "synth",
            "--out-gt",
            s(&gt),
            "--out-pred",
            s(&pred),
            "--config",
            s(&cfg),
        ],
        2,
    );

    // Invalid grid: one bin cannot span a range.
    let (gt, _) = synth(&dir, &["--persons", "2", "--seed", "1"]);
    run_expect(
        &[
            "calibrate",
            "--scene",
            s(&gt),
            "--out",
            s(&out_file),
            "--bins",
            "1",
        ],
        2,
    );

    // Conflicting camera sources.
    let calib = path(&dir, "calib.whatever");
    run_expect(
        &[
            "align",
            "--scene",
            s(&gt),
            "--out",
            s(&out_file),
            "--calibration",
            s(&calib),
            "--use-scene-camera",
        ],
        2,
    );
}

#[test]
fn io_errors_exit_4() {
    let dir = TempDir::new().unwrap();

    // Input file does not exist.
    let missing = path(&dir, "missing.json");
    let out_file = path(&dir, "out.json");
    run_expect(
        &["calibrate", "--scene", s(&missing), "--out", s(&out_file)],
        4,
    );

    // Output parent is a file, not a directory.
    let (gt, _) = synth(&dir, &["--persons", "1", "--seed", "0"]);
    let blocked = gt.join("out.json"); // gt.json is a file
    run_expect(
        &[
            "render",
            "--scene",
            s(&gt),
            "--view",
            "side",
            "--out",
            s(&blocked),
        ],
        4,
    );
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "cfg.json");
    std::fs::write(&cfg, lattice_config()).unwrap();
    let (gt, _) = synth(&dir, &["--config", s(&cfg)]);

    let multi = path(&dir, "multi.json");
    run_expect(
        &[
            "calibrate",
            "--scene",
            s(&gt),
            "--out",
            s(&multi),
            "--config",
            s(&cfg),
        ],
        0,
    );

    let single = path(&dir, "single.json");
    let out = bin()
        .env("ROTAVAT_THREADS", "1")
        .args([
            "calibrate",
            "--scene",
            s(&gt),
            "--out",
            s(&single),
            "--config",
            s(&cfg),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read(&multi), read(&single));
}
