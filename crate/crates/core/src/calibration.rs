//! Auto-calibration of a static camera from pedestrian keypoints.
//!
//! Each standing pedestrian contributes one observation: the image point of
//! the midpoint between their feet and the image point of their head. Under
//! a known camera, the foot point fixes a ground position, and lifting that
//! position by the assumed pedestrian height predicts where the head must
//! appear. The calibration objective is the summed squared discrepancy
//! between predicted and observed head points; an exhaustive grid search
//! over (f, pitch, height) minimizes it.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    build_projection, CameraParams, GeometryError, Point2, Point3, ProjectionMatrix,
};
use crate::mesh::{Mesh, JOINT_HEAD};

/// Objective contribution of a pair the candidate camera cannot explain
/// (degenerate depth or horizon).
pub const PENALTY: f64 = 1e18;

/// Default assumed pedestrian height in cm.
pub const DEFAULT_PEDESTRIAN_HEIGHT: f64 = 170.0;

/// Minimum image-space separation between the foot and head points of a
/// valid observation.
pub const EPS_PAIR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("mesh {person_id:?} has no joint {joint:?}")]
    MissingJoint { person_id: String, joint: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("foot and head image points of {person_id:?} coincide")]
    DegeneratePair { person_id: String },
    #[error("no foot/head pairs supplied")]
    EmptyInput,
    #[error("every grid point was degenerate for every pair")]
    AllDegenerate,
    #[error("invalid search grid: {0}")]
    InvalidGrid(&'static str),
}

/// One pedestrian observation: foot-midpoint and head image points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootHeadPair {
    pub person_id: String,
    pub foot: Point2,
    pub head: Point2,
}

impl FootHeadPair {
    /// Validates that foot and head are distinct (separation > [`EPS_PAIR`]).
    pub fn new(person_id: String, foot: Point2, head: Point2) -> Result<Self, CalibrationError> {
        if foot.distance(&head) <= EPS_PAIR {
            return Err(CalibrationError::DegeneratePair { person_id });
        }
        Ok(Self {
            person_id,
            foot,
            head,
        })
    }
}

/// Project a mesh's foot midpoint and head joint into the image.
///
/// Both points (and the foot midpoint in particular) must sit strictly in
/// front of the camera; non-positive depth is reported as degenerate.
pub fn extract_foot_head(
    mesh: &Mesh,
    proj: &ProjectionMatrix,
) -> Result<FootHeadPair, CalibrationError> {
    let missing = |joint: &str| CalibrationError::MissingJoint {
        person_id: mesh.person_id.clone(),
        joint: joint.to_string(),
    };
    let foot_mid = mesh.foot_mid().ok_or_else(|| {
        let name = if mesh.joint_point(crate::mesh::JOINT_FOOT_LEFT).is_none() {
            crate::mesh::JOINT_FOOT_LEFT
        } else {
            crate::mesh::JOINT_FOOT_RIGHT
        };
        missing(name)
    })?;
    let head = mesh.head().ok_or_else(|| missing(JOINT_HEAD))?;

    let project_front = |p: Point3| -> Result<Point2, CalibrationError> {
        let (img, w) = proj.project_point(p)?;
        if w <= proj.eps_w() {
            return Err(GeometryError::DegenerateDepth { w }.into());
        }
        Ok(img)
    };
    FootHeadPair::new(
        mesh.person_id.clone(),
        project_front(foot_mid)?,
        project_front(head)?,
    )
}

/// Ground-plane position (X, Z) whose projection is the observed foot point.
///
/// The observation must be in front of the camera; a behind-camera solution
/// is reported as [`GeometryError::DegenerateDepth`].
pub fn solve_ground_position(
    proj: &ProjectionMatrix,
    foot: Point2,
) -> Result<(f64, f64), GeometryError> {
    let w = proj.depth_from_known_height(foot, 0.0)?;
    if w <= proj.eps_w() {
        return Err(GeometryError::DegenerateDepth { w });
    }
    let p = proj.world_point(foot, w);
    Ok((p.x, p.z))
}

/// Predicted head image point for a foot observation of a pedestrian of the
/// given height: solve the ground position, lift it, and reproject.
pub fn predict_head(
    proj: &ProjectionMatrix,
    foot: Point2,
    pedestrian_height: f64,
) -> Result<Point2, GeometryError> {
    let (x, z) = solve_ground_position(proj, foot)?;
    let (img, _) = proj.project_point(Point3::new(x, pedestrian_height, z))?;
    Ok(img)
}

fn pair_sq_residual(
    proj: &ProjectionMatrix,
    pair: &FootHeadPair,
    pedestrian_height: f64,
) -> Option<(f64, f64, f64)> {
    let predicted = predict_head(proj, pair.foot, pedestrian_height).ok()?;
    let dx = pair.head.x - predicted.x;
    let dy = pair.head.y - predicted.y;
    let sq = dx * dx + dy * dy;
    sq.is_finite().then_some((sq, dx, dy))
}

/// Summed squared head-prediction error of a camera over all pairs.
/// Degenerate pairs contribute [`PENALTY`] each.
pub fn mse(proj: &ProjectionMatrix, pairs: &[FootHeadPair], pedestrian_height: f64) -> f64 {
    mse_with_valid_count(proj, pairs, pedestrian_height).0
}

fn mse_with_valid_count(
    proj: &ProjectionMatrix,
    pairs: &[FootHeadPair],
    pedestrian_height: f64,
) -> (f64, usize) {
    let mut total = 0.0;
    let mut valid = 0;
    for pair in pairs {
        match pair_sq_residual(proj, pair, pedestrian_height) {
            Some((sq, _, _)) => {
                total += sq;
                valid += 1;
            }
            None => total += PENALTY,
        }
    }
    (total, valid)
}

/// Inclusive search lattice over (f, pitch, height).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationGrid {
    pub f_range: (f64, f64),
    pub pitch_range: (f64, f64),
    pub height_range: (f64, f64),
    pub bins_per_axis: usize,
}

impl CalibrationGrid {
    pub fn new(
        f_range: (f64, f64),
        pitch_range: (f64, f64),
        height_range: (f64, f64),
        bins_per_axis: usize,
    ) -> Result<Self, CalibrationError> {
        for (lo, hi) in [f_range, pitch_range, height_range] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CalibrationError::InvalidGrid(
                    "each range needs finite low < high",
                ));
            }
        }
        if bins_per_axis < 2 {
            return Err(CalibrationError::InvalidGrid(
                "need at least 2 bins per axis",
            ));
        }
        Ok(Self {
            f_range,
            pitch_range,
            height_range,
            bins_per_axis,
        })
    }

    fn value(range: (f64, f64), bins: usize, k: usize) -> f64 {
        range.0 + (range.1 - range.0) / ((bins - 1) as f64) * (k as f64)
    }

    /// k-th lattice value of the focal axis (endpoints inclusive,
    /// step = (high − low)/(bins − 1)).
    pub fn f_value(&self, k: usize) -> f64 {
        Self::value(self.f_range, self.bins_per_axis, k)
    }

    pub fn pitch_value(&self, k: usize) -> f64 {
        Self::value(self.pitch_range, self.bins_per_axis, k)
    }

    pub fn height_value(&self, k: usize) -> f64 {
        Self::value(self.height_range, self.bins_per_axis, k)
    }

    pub fn step_sizes(&self) -> (f64, f64, f64) {
        let n = (self.bins_per_axis - 1) as f64;
        (
            (self.f_range.1 - self.f_range.0) / n,
            (self.pitch_range.1 - self.pitch_range.0) / n,
            (self.height_range.1 - self.height_range.0) / n,
        )
    }

    pub fn total_evaluations(&self) -> usize {
        self.bins_per_axis.pow(3)
    }
}

/// Default search ranges for an image of the given pixel height: focal
/// length 0.1·H to 6·H, pitch −π/4 to π/2, camera height 50 cm to 40 m,
/// 50 bins per axis (125 000 evaluations).
pub fn default_grid(image_height: u32) -> CalibrationGrid {
    let h = image_height as f64;
    CalibrationGrid::new(
        (0.1 * h, 6.0 * h),
        (-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2),
        (50.0, 4000.0),
        50,
    )
    .expect("default ranges are valid")
}

/// Residual of one pair under the selected camera.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub person_id: String,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    #[serde(flatten)]
    pub params: CameraParams,
    /// Objective value at `params`; equals the recomputed [`mse`] on the
    /// input pairs.
    pub mse: f64,
    /// Number of lattice points evaluated.
    pub evaluations: usize,
    /// Per-pair residuals under `params`. Pairs degenerate under the final
    /// camera are omitted (their PENALTY contribution still appears in
    /// `mse`).
    #[serde(rename = "residuals")]
    pub per_pair_residuals: Vec<PairResidual>,
}

#[derive(Clone, Copy)]
struct Candidate {
    mse: f64,
    idx: usize,
    max_valid: usize,
}

/// Exhaustive search over the grid lattice for the camera minimizing
/// [`mse`]. Deterministic: ties break toward the lowest focal index, then
/// pitch, then height, independent of evaluation order or thread count.
pub fn grid_search_calibrate(
    pairs: &[FootHeadPair],
    grid: &CalibrationGrid,
    pedestrian_height: f64,
) -> Result<CalibrationResult, CalibrationError> {
    if pairs.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    let bins = grid.bins_per_axis;
    let total = grid.total_evaluations();

    let eval = |idx: usize| -> Candidate {
        let ci = idx % bins;
        let pi = (idx / bins) % bins;
        let fi = idx / (bins * bins);
        match CameraParams::new(
            grid.f_value(fi),
            grid.pitch_value(pi),
            grid.height_value(ci),
        ) {
            Ok(cam) => {
                let proj = build_projection(&cam);
                let (m, valid) = mse_with_valid_count(&proj, pairs, pedestrian_height);
                Candidate {
                    mse: m,
                    idx,
                    max_valid: valid,
                }
            }
            // Lattice point outside the valid camera domain: worse than any
            // evaluated point.
            Err(_) => Candidate {
                mse: f64::INFINITY,
                idx,
                max_valid: 0,
            },
        }
    };

    let identity = Candidate {
        mse: f64::INFINITY,
        idx: usize::MAX,
        max_valid: 0,
    };
    let merge = |a: Candidate, b: Candidate| -> Candidate {
        let best = if (b.mse, b.idx) < (a.mse, a.idx) {
            b
        } else {
            a
        };
        Candidate {
            max_valid: a.max_valid.max(b.max_valid),
            ..best
        }
    };
    let best = (0..total)
        .into_par_iter()
        .with_min_len(128)
        .map(eval)
        .reduce(|| identity, merge);

    if best.max_valid == 0 {
        return Err(CalibrationError::AllDegenerate);
    }

    let ci = best.idx % bins;
    let pi = (best.idx / bins) % bins;
    let fi = best.idx / (bins * bins);
    let params = CameraParams::new(
        grid.f_value(fi),
        grid.pitch_value(pi),
        grid.height_value(ci),
    )
    .expect("winning lattice point is a valid camera");
    let proj = build_projection(&params);
    let mut final_mse = 0.0;
    let mut residuals = Vec::with_capacity(pairs.len());
    for pair in pairs {
        match pair_sq_residual(&proj, pair, pedestrian_height) {
            Some((sq, dx, dy)) => {
                final_mse += sq;
                residuals.push(PairResidual {
                    person_id: pair.person_id.clone(),
                    dx,
                    dy,
                });
            }
            None => final_mse += PENALTY,
        }
    }

    Ok(CalibrationResult {
        params,
        mse: final_mse,
        evaluations: total,
        per_pair_residuals: residuals,
    })
}
