//! Synthetic crowd scenes with known ground truth, plus parameterized
//! corruptions mimicking typical monocular-estimation failures (body tilt,
//! wrong scale, wrong depth, floating or sunken feet).
//!
//! Everything here is deterministic: a scene is a pure function of its
//! [`SceneSpec`], and a corruption of its [`CorruptionParams`]. Randomness
//! comes from a ChaCha8 generator seeded with [`SceneSpec::seed`], using one
//! independent stream per person index, so results do not depend on
//! evaluation order.
//!
//! All generated coordinates are snapped to a 1e-4 cm grid. The snapping
//! scheme keeps the key exact identities intact — foot joints at Y = 0
//! exactly, the head joint exactly above the foot midpoint — and makes
//! every coordinate survive the scene JSON encoding bit-for-bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{extract_foot_head, CalibrationError, FootHeadPair};
use crate::geometry::{build_projection, CameraParams, Point3};
use crate::mesh::{Mesh, JOINT_FOOT_LEFT, JOINT_FOOT_RIGHT, JOINT_HEAD, JOINT_ROOT};
use crate::scene::{ImageDims, Scene};

use nalgebra::{Rotation3, Unit, Vector3};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("scene has no camera")]
    MissingCamera,
    #[error("invalid scene spec: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid corruption params: {0}")]
    InvalidParams(&'static str),
}

/// Snap a coordinate to the 1e-4 cm grid (normalizing −0 to 0).
pub fn snap4(v: f64) -> f64 {
    let s = (v * 1e4).round() / 1e4;
    if s == 0.0 {
        0.0
    } else {
        s
    }
}

fn snap_point(p: Point3) -> Point3 {
    Point3::new(snap4(p.x), snap4(p.y), snap4(p.z))
}

/// Canonical stick figure: foot midpoint at the origin, +Y up, height 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianTemplate {
    pub vertices: Vec<Point3>,
    pub segments: Vec<[usize; 2]>,
    pub joints: BTreeMap<String, usize>,
}

/// The 16-vertex stick figure used for all generated pedestrians: two legs,
/// a torso, two arms, and a head point, every vertex a named joint.
pub fn pedestrian_template() -> PedestrianTemplate {
    let named: [(&str, [f64; 3]); 16] = [
        (JOINT_FOOT_LEFT, [-0.10, 0.0, 0.0]),
        (JOINT_FOOT_RIGHT, [0.10, 0.0, 0.0]),
        ("knee_left", [-0.09, 0.28, 0.02]),
        ("knee_right", [0.09, 0.28, 0.02]),
        ("hip_left", [-0.09, 0.52, 0.0]),
        ("hip_right", [0.09, 0.52, 0.0]),
        (JOINT_ROOT, [0.0, 0.52, 0.0]),
        ("spine", [0.0, 0.70, 0.0]),
        ("shoulder_left", [-0.13, 0.82, 0.0]),
        ("shoulder_right", [0.13, 0.82, 0.0]),
        ("elbow_left", [-0.16, 0.65, 0.0]),
        ("elbow_right", [0.16, 0.65, 0.0]),
        ("hand_left", [-0.17, 0.50, 0.05]),
        ("hand_right", [0.17, 0.50, 0.05]),
        ("neck", [0.0, 0.88, 0.0]),
        (JOINT_HEAD, [0.0, 1.0, 0.0]),
    ];
    let vertices = named
        .iter()
        .map(|(_, [x, y, z])| Point3::new(*x, *y, *z))
        .collect();
    let joints = named
        .iter()
        .enumerate()
        .map(|(i, (name, _))| (name.to_string(), i))
        .collect();
    let segments = vec![
        [0, 2],   // foot_left – knee_left
        [2, 4],   // knee_left – hip_left
        [1, 3],   // foot_right – knee_right
        [3, 5],   // knee_right – hip_right
        [4, 6],   // hip_left – root
        [5, 6],   // hip_right – root
        [6, 7],   // root – spine
        [7, 14],  // spine – neck
        [8, 14],  // shoulder_left – neck
        [9, 14],  // shoulder_right – neck
        [8, 10],  // shoulder_left – elbow_left
        [10, 12], // elbow_left – hand_left
        [9, 11],  // shoulder_right – elbow_right
        [11, 13], // elbow_right – hand_right
        [14, 15], // neck – head
    ];
    PedestrianTemplate {
        vertices,
        segments,
        joints,
    }
}

impl PedestrianTemplate {
    /// Place the template at ground position (x, 0, z) with the given
    /// height (cm) and yaw about +Y.
    ///
    /// Offsets are snapped before the position is added, and again after:
    /// the yaw rotation leaves Y untouched, so foot joints land at exactly
    /// Y = 0, the head at exactly Y = height, and the head directly above
    /// the (x, z) anchor shared by the symmetric foot offsets.
    pub fn instantiate(&self, person_id: &str, x: f64, z: f64, height: f64, yaw: f64) -> Mesh {
        let (sy, cy) = yaw.sin_cos();
        let pos = Point3::new(snap4(x), 0.0, snap4(z));
        let h = snap4(height);
        let vertices = self
            .vertices
            .iter()
            .map(|t| {
                let rotated = Point3::new(cy * t.x + sy * t.z, t.y, -sy * t.x + cy * t.z);
                let offset = snap_point(Point3::new(h * rotated.x, h * rotated.y, h * rotated.z));
                snap_point(Point3::new(
                    pos.x + offset.x,
                    pos.y + offset.y,
                    pos.z + offset.z,
                ))
            })
            .collect();
        Mesh {
            person_id: person_id.to_string(),
            vertices,
            segments: self.segments.clone(),
            joints: self.joints.clone(),
        }
    }
}

/// Axis-aligned ground rectangle, in cm: x ∈ [x.0, x.1], z ∈ [z.0, z.1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundRegion {
    pub x: (f64, f64),
    pub z: (f64, f64),
}

/// Recipe for a ground-truth scene. Deserializes with per-field fallbacks
/// to the default demo values, so a config file may specify any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub person_count: usize,
    pub ground_region: GroundRegion,
    /// Nominal pedestrian height in cm.
    pub height_cm: f64,
    /// Std of the per-person height deviation, cm.
    pub height_jitter: f64,
    pub camera: CameraParams,
    pub image: ImageDims,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            person_count: 20,
            ground_region: GroundRegion {
                x: (-500.0, 500.0),
                z: (800.0, 3800.0),
            },
            height_cm: 170.0,
            height_jitter: 0.0,
            camera: CameraParams::new(1000.0, -0.35, 400.0).expect("default camera is valid"),
            image: ImageDims {
                width: 1280,
                height: 800,
            },
            seed: 0,
        }
    }
}

fn validate_spec(spec: &SceneSpec) -> Result<(), SynthError> {
    let GroundRegion { x, z } = spec.ground_region;
    for (lo, hi) in [x, z] {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(SynthError::InvalidSpec(
                "ground region needs finite low <= high",
            ));
        }
    }
    if !(spec.height_cm.is_finite() && spec.height_cm > 0.0) {
        return Err(SynthError::InvalidSpec("height_cm must be positive"));
    }
    if !(spec.height_jitter.is_finite() && spec.height_jitter >= 0.0) {
        return Err(SynthError::InvalidSpec("height_jitter must be >= 0"));
    }
    if spec.image.width == 0 || spec.image.height == 0 {
        return Err(SynthError::InvalidSpec("image dimensions must be positive"));
    }
    Ok(())
}

/// Per-person generator: one ChaCha8 stream per person index, all derived
/// from the scene seed. Draw order is fixed (position x, position z,
/// height deviation, yaw) and every value is drawn even when its parameter
/// is zero, so adding jitter never reshuffles the other draws.
fn person_rng(seed: u64, person_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(person_index as u64);
    rng
}

/// Generate `person_count` upright pedestrians at uniform-random positions
/// in the ground region, each scaled to its sampled height (clamped to at
/// least 1 cm) and given a random yaw. Deterministic in the spec.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SynthError> {
    validate_spec(spec)?;
    let template = pedestrian_template();
    let meshes = (0..spec.person_count)
        .map(|i| {
            let mut rng = person_rng(spec.seed, i);
            let x = rng.random_range(spec.ground_region.x.0..=spec.ground_region.x.1);
            let z = rng.random_range(spec.ground_region.z.0..=spec.ground_region.z.1);
            let dh: f64 = rng.sample(StandardNormal);
            let height = (spec.height_cm + spec.height_jitter * dh).max(1.0);
            let yaw = rng.random_range(0.0..std::f64::consts::TAU);
            template.instantiate(&format!("p{i:04}"), x, z, height, yaw)
        })
        .collect();
    Ok(Scene {
        image: spec.image,
        camera: Some(spec.camera),
        meshes,
    })
}

/// Magnitudes of the per-person corruptions. All standard deviations in
/// natural units (radians, cm); `scale_error` is the std of the log of the
/// multiplicative factor. Deserializes with per-field fallbacks to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionParams {
    /// Systematic lean toward the camera, radians.
    pub tilt_toward_camera: f64,
    /// Std of the per-person lean deviation, radians.
    pub tilt_jitter: f64,
    /// Std of ln(scale factor).
    pub scale_error: f64,
    /// Std of the translation along the camera→foot ray, cm.
    pub depth_error: f64,
    /// Std of the vertical translation, cm.
    pub elevation_error: f64,
    pub seed: u64,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        CorruptionParams {
            tilt_toward_camera: 0.0,
            tilt_jitter: 0.0,
            scale_error: 0.0,
            depth_error: 0.0,
            elevation_error: 0.0,
            seed: 0,
        }
    }
}

fn validate_params(params: &CorruptionParams) -> Result<(), SynthError> {
    if !params.tilt_toward_camera.is_finite() {
        return Err(SynthError::InvalidParams(
            "tilt_toward_camera must be finite",
        ));
    }
    for (v, name) in [
        (params.tilt_jitter, "tilt_jitter"),
        (params.scale_error, "scale_error"),
        (params.depth_error, "depth_error"),
        (params.elevation_error, "elevation_error"),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            let _ = name;
            return Err(SynthError::InvalidParams(
                "standard deviations must be finite and >= 0",
            ));
        }
    }
    Ok(())
}

fn is_identity(params: &CorruptionParams) -> bool {
    params.tilt_toward_camera == 0.0
        && params.tilt_jitter == 0.0
        && params.scale_error == 0.0
        && params.depth_error == 0.0
        && params.elevation_error == 0.0
}

/// Apply the corruption to every mesh, deterministically from the seed
/// (one ChaCha8 stream per person index; four standard-normal draws per
/// person in fixed order: tilt, scale, depth, elevation — drawn even when
/// the corresponding parameter is zero).
///
/// Per mesh, in order: lean by `tilt_toward_camera + jitter` in the
/// vertical plane through the foot midpoint and the camera's ground
/// projection (pivot: foot midpoint); scale about the foot midpoint by
/// exp(scale_error · n); translate along the camera→foot ray by a
/// depth_error-scaled normal (image position of the foot is unchanged);
/// translate vertically by an elevation_error-scaled normal. Results are
/// snapped to the 1e-4 cm grid. The input scene is never modified; the
/// all-zero corruption returns an exact copy.
pub fn corrupt_scene(scene: &Scene, params: &CorruptionParams) -> Result<Scene, SynthError> {
    let camera = scene.camera.ok_or(SynthError::MissingCamera)?;
    validate_params(params)?;
    if is_identity(params) {
        return Ok(scene.clone());
    }
    let center = Point3::new(0.0, camera.height(), 0.0);

    let meshes = scene
        .meshes
        .iter()
        .enumerate()
        .map(|(i, mesh)| {
            let mut rng = person_rng(params.seed, i);
            let n_tilt: f64 = rng.sample(StandardNormal);
            let n_scale: f64 = rng.sample(StandardNormal);
            let n_depth: f64 = rng.sample(StandardNormal);
            let n_elev: f64 = rng.sample(StandardNormal);

            let Some(foot_mid) = mesh.foot_mid() else {
                // No foot joints to anchor the corruption: leave untouched.
                return mesh.clone();
            };
            let mut out = mesh.clone();

            // Lean toward the camera's ground projection.
            let tilt = params.tilt_toward_camera + params.tilt_jitter * n_tilt;
            let toward = Vector3::new(-foot_mid.x, 0.0, -foot_mid.z);
            if tilt != 0.0 && toward.norm() > 1e-9 {
                let toward = toward / toward.norm();
                let axis = Vector3::y().cross(&toward);
                let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), tilt);
                out = out.map_vertices(|v| foot_mid + rot * (v - foot_mid));
            }

            // Multiplicative scale about the foot midpoint.
            let factor = (params.scale_error * n_scale).exp();
            if factor != 1.0 {
                out = out.map_vertices(|v| foot_mid + factor * (v - foot_mid));
            }

            // Slide along the viewing ray of the foot midpoint: the foot's
            // image position is preserved while its 3D position is not.
            let depth_shift = params.depth_error * n_depth;
            let ray = foot_mid - center;
            if depth_shift != 0.0 && ray.norm() > 1e-9 {
                let dir = ray / ray.norm();
                out = out.map_vertices(|v| v + depth_shift * dir);
            }

            // Vertical offset: floating or sunken feet.
            let lift = params.elevation_error * n_elev;
            if lift != 0.0 {
                out = out.map_vertices(|v| v + Vector3::new(0.0, lift, 0.0));
            }

            out.map_vertices(snap_point)
        })
        .collect();

    Ok(Scene {
        image: scene.image,
        camera: scene.camera,
        meshes,
    })
}

/// Successful observations plus the persons skipped along the way.
pub type ObservedPairs = (Vec<FootHeadPair>, Vec<(String, CalibrationError)>);

/// Project every mesh's foot midpoint and head through the scene camera.
/// Persons whose keypoints cannot be observed (behind the camera, missing
/// joints, coincident projections) are skipped and reported.
pub fn observed_pairs(scene: &Scene) -> Result<ObservedPairs, SynthError> {
    let camera = scene.camera.ok_or(SynthError::MissingCamera)?;
    let proj = build_projection(&camera);
    let mut pairs = Vec::with_capacity(scene.meshes.len());
    let mut skipped = Vec::new();
    for mesh in &scene.meshes {
        match extract_foot_head(mesh, &proj) {
            Ok(pair) => pairs.push(pair),
            Err(e) => skipped.push((mesh.person_id.clone(), e)),
        }
    }
    Ok((pairs, skipped))
}
