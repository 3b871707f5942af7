//! Command-line pipeline around the `rotavat` library.
//!
//! Subcommands: `synth` (generate a ground-truth crowd plus a corrupted
//! copy), `calibrate` (fit camera parameters to foot/head observations),
//! `align` (re-ground meshes), `evaluate` (the five pose metrics), and
//! `render` (SVG views).
//!
//! Exit codes are a stable contract for scripting: 0 success, 2 usage or
//! schema errors, 3 domain errors (degenerate or inconsistent data),
//! 4 I/O errors. All randomness flows from `--seed`; identical inputs and
//! flags produce byte-identical outputs. Files are written atomically
//! (temp file + rename). `ROTAVAT_THREADS` caps internal parallelism
//! (0 or unset = automatic).

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use rotavat::align::align_scene;
use rotavat::calibration::{
    default_grid, grid_search_calibrate, CalibrationGrid, DEFAULT_PEDESTRIAN_HEIGHT,
};
use rotavat::geometry::{build_projection, CameraParams};
use rotavat::metrics::evaluate_scene;
use rotavat::render::{render, render_pair, RenderOptions, SideAxis, View};
use rotavat::scene::{load_scene, save_scene, Scene};
use rotavat::synth::{corrupt_scene, generate_scene, observed_pairs, CorruptionParams, SceneSpec};

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
enum CliError {
    /// Bad flags, bad config, or malformed input schema (exit 2).
    #[error("{0}")]
    Usage(String),
    /// Structurally valid input the math cannot accept (exit 3).
    #[error("{0}")]
    Domain(String),
    /// Filesystem trouble (exit 4).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn usage(context: &str, e: impl Display) -> CliError {
    CliError::Usage(format!("{context}: {e}"))
}

fn domain(context: &str, e: impl Display) -> CliError {
    CliError::Domain(format!("{context}: {e}"))
}

fn io_error(path: &Path, e: impl Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "rotavat",
    version,
    about = "Synthesize crowds, calibrate a static camera from pedestrians, \
             re-ground meshes, score them, and draw the result"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth scene and a corrupted copy of it.
    Synth(SynthArgs),
    /// Fit f, pitch, and camera height to a scene's foot/head observations.
    Calibrate(CalibrateArgs),
    /// Re-ground every mesh while preserving its image evidence.
    Align(AlignArgs),
    /// Compute MPJPE, PA-MPJPE, PVE, W-MPJPE, and W-PVE between two scenes.
    Evaluate(EvaluateArgs),
    /// Draw a scene as an SVG document.
    Render(RenderArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output path for the ground-truth scene JSON.
    #[arg(long, value_name = "PATH")]
    out_gt: PathBuf,
    /// Output path for the corrupted scene JSON.
    #[arg(long, value_name = "PATH")]
    out_pred: PathBuf,
    /// Number of pedestrians.
    #[arg(long)]
    persons: Option<usize>,
    /// Master seed: the scene draws from S, the corruption from S + 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Std of per-person height deviation, cm.
    #[arg(long)]
    height_jitter: Option<f64>,
    /// Systematic lean toward the camera, radians.
    #[arg(long)]
    tilt: Option<f64>,
    /// Std of per-person lean deviation, radians.
    #[arg(long)]
    tilt_jitter: Option<f64>,
    /// Std of ln(scale factor).
    #[arg(long)]
    scale_error: Option<f64>,
    /// Std of displacement along the camera ray, cm.
    #[arg(long)]
    depth_error: Option<f64>,
    /// Std of vertical displacement, cm.
    #[arg(long)]
    elevation_error: Option<f64>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Scene to observe (must carry a camera to project with).
    #[arg(long, value_name = "PATH")]
    scene: PathBuf,
    /// Output path for the calibration JSON.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Lattice resolution per axis (default 50).
    #[arg(long)]
    bins: Option<usize>,
    /// Assumed pedestrian height in cm (default 170).
    #[arg(long)]
    pedestrian_height: Option<f64>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    /// Scene whose meshes to re-ground.
    #[arg(long, value_name = "PATH")]
    scene: PathBuf,
    /// Output path for the aligned scene JSON.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Camera source: a calibration JSON (as written by `calibrate`).
    #[arg(long, value_name = "PATH", conflicts_with = "use_scene_camera")]
    calibration: Option<PathBuf>,
    /// Camera source: the camera embedded in the scene file.
    #[arg(long)]
    use_scene_camera: bool,
    /// Also write per-person transform traces to this path.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Recompute ground-contact and anchoring guarantees on the output.
    #[arg(long)]
    verify: bool,
    /// JSON config file; explicit flags win over its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted scene.
    #[arg(long, value_name = "PATH")]
    pred: PathBuf,
    /// Ground-truth scene.
    #[arg(long, value_name = "PATH")]
    gt: PathBuf,
    /// Output path for the metric report JSON.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Scene to draw.
    #[arg(long, value_name = "PATH")]
    scene: PathBuf,
    /// Output path for the SVG.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Which view to draw.
    #[arg(long, value_enum)]
    view: Option<ViewArg>,
    /// Horizontal world axis dropped by the side view.
    #[arg(long, value_enum)]
    side_axis: Option<AxisArg>,
    /// Suppress the ground/horizon line.
    #[arg(long)]
    no_ground: bool,
    /// Stroke width in px.
    #[arg(long)]
    stroke_width: Option<f64>,
    /// Seed for the per-person color palette.
    #[arg(long)]
    palette_seed: Option<u64>,
    /// JSON config file; explicit flags win over its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ViewArg {
    Front,
    Side,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AxisArg {
    X,
    Z,
}

impl From<AxisArg> for SideAxis {
    fn from(a: AxisArg) -> SideAxis {
        match a {
            AxisArg::X => SideAxis::X,
            AxisArg::Z => SideAxis::Z,
        }
    }
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

/// Optional JSON config. Every field is optional; explicit command-line
/// flags override whatever the file says.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    pedestrian_height_cm: Option<f64>,
    /// Master seed, same meaning as --seed.
    seed: Option<u64>,
    /// Partial scene spec (missing fields take the built-in defaults).
    scene: Option<serde_json::Value>,
    corruption: Option<CorruptionPatch>,
    grid: Option<GridConfig>,
    render: Option<RenderConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CorruptionPatch {
    tilt_toward_camera: Option<f64>,
    tilt_jitter: Option<f64>,
    scale_error: Option<f64>,
    depth_error: Option<f64>,
    elevation_error: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridConfig {
    bins: Option<usize>,
    f_range: Option<(f64, f64)>,
    pitch_range: Option<(f64, f64)>,
    height_range: Option<(f64, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RenderConfig {
    view: Option<ViewArg>,
    side_axis: Option<AxisArg>,
    show_ground: Option<bool>,
    stroke_width: Option<f64>,
    palette_seed: Option<u64>,
}

fn load_config(path: Option<&PathBuf>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| io_error(p, e))?;
            serde_json::from_slice(&bytes).map_err(|e| usage(&format!("{}", p.display()), e))
        }
    }
}

// ---------------------------------------------------------------------------
// IO helpers
// ---------------------------------------------------------------------------

/// Write via a sibling temp file and rename, so readers never observe a
/// half-written artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

fn load_scene_file(path: &Path) -> Result<Scene, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    load_scene(&bytes).map_err(|e| usage(&format!("{}", path.display()), e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| usage(&format!("{}", path.display()), e))
}

fn pretty_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

/// Representative monocular-estimator noise; `synth` corrupts with these
/// unless the config or flags say otherwise.
fn default_corruption() -> CorruptionParams {
    CorruptionParams {
        tilt_toward_camera: 0.35,
        tilt_jitter: 0.1,
        scale_error: 0.15,
        depth_error: 60.0,
        elevation_error: 20.0,
        seed: 0,
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_ref())?;

    let mut spec: SceneSpec = match &config.scene {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| usage("config scene", e))?,
        None => SceneSpec::default(),
    };
    if let Some(s) = args.seed.or(config.seed) {
        spec.seed = s;
    }
    if let Some(p) = args.persons {
        spec.person_count = p;
    }
    if let Some(j) = args.height_jitter {
        spec.height_jitter = j;
    }

    let patch = config.corruption.unwrap_or_default();
    let mut corruption = default_corruption();
    // Precedence (lowest to highest): defaults, corruption section, scene
    // seed + 1, explicit --seed + 1, individual flags.
    corruption.seed = patch.seed.unwrap_or_else(|| spec.seed.wrapping_add(1));
    if let Some(s) = args.seed {
        corruption.seed = s.wrapping_add(1);
    }
    if let Some(v) = patch.tilt_toward_camera {
        corruption.tilt_toward_camera = v;
    }
    if let Some(v) = patch.tilt_jitter {
        corruption.tilt_jitter = v;
    }
    if let Some(v) = patch.scale_error {
        corruption.scale_error = v;
    }
    if let Some(v) = patch.depth_error {
        corruption.depth_error = v;
    }
    if let Some(v) = patch.elevation_error {
        corruption.elevation_error = v;
    }
    if let Some(v) = args.tilt {
        corruption.tilt_toward_camera = v;
    }
    if let Some(v) = args.tilt_jitter {
        corruption.tilt_jitter = v;
    }
    if let Some(v) = args.scale_error {
        corruption.scale_error = v;
    }
    if let Some(v) = args.depth_error {
        corruption.depth_error = v;
    }
    if let Some(v) = args.elevation_error {
        corruption.elevation_error = v;
    }

    let truth = generate_scene(&spec).map_err(|e| usage("scene spec", e))?;
    let corrupted = corrupt_scene(&truth, &corruption).map_err(|e| usage("corruption", e))?;

    write_atomic(
        &args.out_gt,
        &save_scene(&truth).map_err(|e| domain("ground truth", e))?,
    )?;
    write_atomic(
        &args.out_pred,
        &save_scene(&corrupted).map_err(|e| domain("corrupted scene", e))?,
    )?;
    println!(
        "wrote {} and {} ({} persons, seed {})",
        args.out_gt.display(),
        args.out_pred.display(),
        truth.meshes.len(),
        spec.seed
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

fn resolve_grid(
    config: &Option<GridConfig>,
    bins_flag: Option<usize>,
    image_height: u32,
) -> Result<CalibrationGrid, CliError> {
    let base = default_grid(image_height);
    let g = config.as_ref();
    let f_range = g.and_then(|g| g.f_range).unwrap_or(base.f_range);
    let pitch_range = g.and_then(|g| g.pitch_range).unwrap_or(base.pitch_range);
    let height_range = g.and_then(|g| g.height_range).unwrap_or(base.height_range);
    let bins = bins_flag
        .or_else(|| g.and_then(|g| g.bins))
        .unwrap_or(base.bins_per_axis);
    CalibrationGrid::new(f_range, pitch_range, height_range, bins).map_err(|e| usage("grid", e))
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_ref())?;
    let scene = load_scene_file(&args.scene)?;

    let (pairs, skipped) = observed_pairs(&scene).map_err(|e| domain("observations", e))?;
    for (id, err) in &skipped {
        eprintln!("warning: skipping {id}: {err}");
    }
    if pairs.len() < 3 {
        eprintln!(
            "warning: only {} usable pair(s) to fit 3 camera parameters; \
             expect an under-determined result",
            pairs.len()
        );
    }

    let grid = resolve_grid(&config.grid, args.bins, scene.image.height)?;
    let height = args
        .pedestrian_height
        .or(config.pedestrian_height_cm)
        .unwrap_or(DEFAULT_PEDESTRIAN_HEIGHT);
    if !(height.is_finite() && height > 0.0) {
        return Err(CliError::Usage(format!(
            "pedestrian height must be positive and finite, got {height}"
        )));
    }

    let result =
        grid_search_calibrate(&pairs, &grid, height).map_err(|e| domain("calibration", e))?;
    write_atomic(&args.out, &pretty_json(&result))?;
    println!(
        "calibrated f={:.6} pitch={:.6} height={:.6} mse={:.6e} ({} evaluations) -> {}",
        result.params.f(),
        result.params.pitch(),
        result.params.height(),
        result.mse,
        result.evaluations,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

fn cmd_align(args: AlignArgs) -> Result<(), CliError> {
    // The config file is accepted for interface uniformity (e.g. a shared
    // file across subcommands); align itself takes no values from it today.
    let _config = load_config(args.config.as_ref())?;
    let scene = load_scene_file(&args.scene)?;

    let camera: CameraParams = if let Some(path) = &args.calibration {
        read_json(path)?
    } else {
        scene.camera.ok_or_else(|| {
            CliError::Domain(
                "scene has no camera; pass --calibration or embed one in the scene".to_string(),
            )
        })?
    };

    let (aligned, traces, failures) = align_scene(&scene, &camera);
    for (id, err) in &failures {
        eprintln!("warning: {id}: {} phase: {err}", err.phase());
    }
    let successes = aligned.meshes.len() - failures.len();
    if successes == 0 && !aligned.meshes.is_empty() {
        return Err(CliError::Domain(format!(
            "alignment failed for all {} meshes",
            aligned.meshes.len()
        )));
    }

    if args.verify {
        verify_alignment(&scene, &aligned, &camera, &failures)?;
        println!("verified {successes} meshes: ground contact and anchoring hold");
    }

    write_atomic(
        &args.out,
        &save_scene(&aligned).map_err(|e| domain("aligned scene", e))?,
    )?;

    if let Some(trace_path) = &args.trace {
        let failed: std::collections::BTreeSet<&str> =
            failures.iter().map(|(id, _)| id.as_str()).collect();
        let mut entries = Vec::with_capacity(traces.len());
        for (mesh, trace) in scene
            .meshes
            .iter()
            .filter(|m| !failed.contains(m.person_id.as_str()))
            .zip(&traces)
        {
            let mut obj = serde_json::to_value(trace).expect("trace serializes");
            obj.as_object_mut()
                .expect("trace is an object")
                .insert("person_id".to_string(), serde_json::json!(mesh.person_id));
            entries.push(obj);
        }
        write_atomic(trace_path, &pretty_json(&entries))?;
    }

    println!(
        "aligned {successes}/{} meshes -> {}",
        aligned.meshes.len(),
        args.out.display()
    );
    Ok(())
}

/// Recompute the alignment guarantees on the written output: grounded foot
/// midpoint and preserved foot/head projections for every aligned mesh.
fn verify_alignment(
    input: &Scene,
    output: &Scene,
    camera: &CameraParams,
    failures: &[(String, rotavat::align::AlignError)],
) -> Result<(), CliError> {
    let failed: std::collections::BTreeSet<&str> =
        failures.iter().map(|(id, _)| id.as_str()).collect();
    let proj = build_projection(camera);
    for (before, after) in input.meshes.iter().zip(&output.meshes) {
        if failed.contains(before.person_id.as_str()) {
            continue;
        }
        let id = &before.person_id;
        let foot_y = after
            .foot_mid()
            .ok_or_else(|| domain(id, "missing foot joints"))?
            .y;
        if foot_y.abs() > 1e-9 {
            return Err(domain(
                id,
                format!("foot midpoint off the ground by {foot_y:e} cm"),
            ));
        }
        let anchors = [
            ("foot", before.foot_mid(), after.foot_mid()),
            ("head", before.head(), after.head()),
        ];
        for (what, a, b) in anchors {
            let (a, b) = (
                a.ok_or_else(|| domain(id, "missing joints"))?,
                b.ok_or_else(|| domain(id, "missing joints"))?,
            );
            let (ia, _) = proj.project_point(a).map_err(|e| domain(id, e))?;
            let (ib, _) = proj.project_point(b).map_err(|e| domain(id, e))?;
            let drift = ia.distance(&ib);
            if drift > 1e-6 {
                return Err(domain(
                    id,
                    format!("{what} projection drifted {drift:e} image units"),
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let pred = load_scene_file(&args.pred)?;
    let gt = load_scene_file(&args.gt)?;
    let report = evaluate_scene(&pred, &gt).map_err(|e| domain("evaluate", e))?;
    write_atomic(&args.out, &pretty_json(&report))?;
    let a = &report.aggregate;
    println!(
        "persons={} mpjpe={:.4} pa_mpjpe={:.4} pve={:.4} w_mpjpe={:.4} w_pve={:.4} ({})",
        report.person_count, a.mpjpe, a.pa_mpjpe, a.pve, a.w_mpjpe, a.w_pve, report.units
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

fn cmd_render(args: RenderArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_ref())?;
    let scene = load_scene_file(&args.scene)?;
    let rc = config.render.unwrap_or_default();

    let view = args.view.or(rc.view).unwrap_or(ViewArg::Front);
    let side_axis: SideAxis = args.side_axis.or(rc.side_axis).unwrap_or(AxisArg::X).into();
    let show_ground = if args.no_ground {
        false
    } else {
        rc.show_ground.unwrap_or(true)
    };
    let stroke_width = args.stroke_width.or(rc.stroke_width).unwrap_or(2.0);
    if !(stroke_width.is_finite() && stroke_width > 0.0) {
        return Err(CliError::Usage(format!(
            "stroke width must be positive and finite, got {stroke_width}"
        )));
    }
    let palette_seed = args.palette_seed.or(rc.palette_seed).unwrap_or(0);

    let opts = RenderOptions {
        view: match view {
            ViewArg::Side => View::Side,
            ViewArg::Front | ViewArg::Pair => View::Front,
        },
        side_axis,
        show_ground,
        stroke_width,
        palette_seed,
    };
    let svg = match view {
        ViewArg::Pair => render_pair(&scene, &opts),
        _ => render(&scene, &opts),
    }
    .map_err(|e| domain("render", e))?;

    write_atomic(&args.out, svg.as_bytes())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

fn init_threads() {
    if let Ok(raw) = std::env::var("ROTAVAT_THREADS") {
        match raw.parse::<usize>() {
            Ok(0) => {}
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            Err(_) => {
                eprintln!("warning: ignoring non-numeric ROTAVAT_THREADS={raw:?}");
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Align(args) => cmd_align(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Render(args) => cmd_render(args),
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
