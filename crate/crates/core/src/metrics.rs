//! Pose-estimation error metrics, aligned and unaligned.
//!
//! Five metrics are computed per person and aggregated over a scene:
//!
//! * `mpjpe` — mean per-joint position error after translating the
//!   prediction so the two root joints coincide.
//! * `pa_mpjpe` — mean per-joint error after the best-fit similarity
//!   transform (Procrustes alignment: scale, rotation, translation).
//! * `pve` — mean per-vertex error after root translation (same convention
//!   as `mpjpe`; conventions differ across the literature, so this one is
//!   stated explicitly).
//! * `w_mpjpe`, `w_pve` — the same distances in world coordinates with no
//!   realignment of any kind. Because similarity transforms are invisible
//!   to Procrustes alignment, only the W variants can detect a person placed
//!   at the wrong spot, scale, or orientation.
//!
//! Aggregation is the unweighted per-person mean (not per-joint pooling).

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::Point3;
use crate::mesh::{Mesh, JOINT_ROOT};
use crate::scene::Scene;

/// Source point clouds whose variance falls below this are rejected:
/// the similarity scale is undefined on (nearly) coincident points.
pub const EPS_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("shape mismatch for {context}: {detail}")]
    ShapeMismatch { context: String, detail: String },
    #[error("similarity alignment needs at least 3 points, got {count}")]
    TooFewPoints { count: usize },
    #[error("source points are nearly coincident; similarity scale is undefined")]
    DegenerateConfiguration,
    #[error("person {person_id:?} not present in ground truth")]
    UnmatchedPerson { person_id: String },
    #[error("mesh {person_id:?} lacks joint {joint:?}")]
    MissingJoint { person_id: String, joint: String },
    #[error("joint set must be nonempty")]
    Empty,
    #[error("non-finite coordinate in joint set")]
    NonFinite,
    #[error("root index {index} out of range for {count} points")]
    BadRootIndex { index: usize, count: usize },
}

fn shape_mismatch(context: impl Into<String>, detail: impl Into<String>) -> MetricsError {
    MetricsError::ShapeMismatch {
        context: context.into(),
        detail: detail.into(),
    }
}

/// An ordered list of joint positions with a designated root joint.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSet {
    points: Vec<Point3>,
    root_index: usize,
}

impl JointSet {
    pub fn new(points: Vec<Point3>, root_index: usize) -> Result<Self, MetricsError> {
        if points.is_empty() {
            return Err(MetricsError::Empty);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        if root_index >= points.len() {
            return Err(MetricsError::BadRootIndex {
                index: root_index,
                count: points.len(),
            });
        }
        Ok(Self { points, root_index })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    pub fn root(&self) -> Point3 {
        self.points[self.root_index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced nonempty at construction
    }

    /// The named joints of a mesh in sorted-name order. Returns the names
    /// alongside the set so callers can check correspondence between two
    /// meshes.
    pub fn from_mesh(mesh: &Mesh) -> Result<(Vec<String>, JointSet), MetricsError> {
        let mut names = Vec::with_capacity(mesh.joints.len());
        let mut points = Vec::with_capacity(mesh.joints.len());
        let mut root_index = None;
        for (i, (name, &idx)) in mesh.joints.iter().enumerate() {
            let p = mesh.vertices.get(idx).ok_or_else(|| {
                shape_mismatch(
                    format!("person {:?}", mesh.person_id),
                    format!("joint {name:?} index {idx} out of range"),
                )
            })?;
            if name == JOINT_ROOT {
                root_index = Some(i);
            }
            names.push(name.clone());
            points.push(*p);
        }
        let root_index = root_index.ok_or_else(|| MetricsError::MissingJoint {
            person_id: mesh.person_id.clone(),
            joint: JOINT_ROOT.to_string(),
        })?;
        Ok((names, JointSet::new(points, root_index)?))
    }
}

/// A scale–rotation–translation map `p ↦ scale · rotation · p + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        Point3::from_vector(self.scale * (self.rotation * p.to_vector()) + self.translation)
    }
}

fn centroid(points: &[Point3]) -> Vector3<f64> {
    let mut sum = Vector3::zeros();
    for p in points {
        sum += p.to_vector();
    }
    sum / points.len() as f64
}

/// Closed-form best-fit similarity transform from `source` onto `target`,
/// minimizing the summed squared distance Σ|s·R·xᵢ + t − yᵢ|².
///
/// Centroids are removed, the 3×3 cross-covariance is factored by singular
/// value decomposition, and a possible reflection is corrected by negating
/// the smallest singular direction, so the returned rotation always has
/// determinant +1. The scale is the trace ratio against the source
/// variance (source → target direction).
pub fn procrustes_align(
    source: &JointSet,
    target: &JointSet,
) -> Result<SimilarityTransform, MetricsError> {
    let n = source.len();
    if n != target.len() {
        return Err(shape_mismatch(
            "procrustes alignment",
            format!("source has {n} points, target has {}", target.len()),
        ));
    }
    if n < 3 {
        return Err(MetricsError::TooFewPoints { count: n });
    }

    let mu_x = centroid(&source.points);
    let mu_y = centroid(&target.points);
    let inv_n = 1.0 / n as f64;

    let mut var_x = 0.0;
    let mut cross = Matrix3::zeros();
    for (x, y) in source.points.iter().zip(&target.points) {
        let dx = x.to_vector() - mu_x;
        let dy = y.to_vector() - mu_y;
        var_x += dx.norm_squared();
        cross += dy * dx.transpose();
    }
    var_x *= inv_n;
    cross *= inv_n;

    if var_x < EPS_VARIANCE {
        return Err(MetricsError::DegenerateConfiguration);
    }

    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let sigma = svd.singular_values;

    // Reflection fix: if det(U)·det(V) < 0, flip the direction of the
    // smallest singular value so det(R) = +1.
    let mut d = Vector3::new(1.0, 1.0, 1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        let mut min_i = 0;
        for i in 1..3 {
            if sigma[i] < sigma[min_i] {
                min_i = i;
            }
        }
        d[min_i] = -1.0;
    }

    let rotation = u * Matrix3::from_diagonal(&d) * v_t;
    let scale = (sigma[0] * d[0] + sigma[1] * d[1] + sigma[2] * d[2]) / var_x;
    let translation = mu_y - scale * (rotation * mu_x);
    Ok(SimilarityTransform {
        scale,
        rotation,
        translation,
    })
}

fn mean_distance(a: &[Point3], b: &[Point3]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(p, q)| p.distance(q)).sum();
    sum / a.len() as f64
}

fn check_counts(context: &str, pred: usize, gt: usize) -> Result<(), MetricsError> {
    if pred != gt {
        return Err(shape_mismatch(
            context,
            format!("pred has {pred} points, gt has {gt}"),
        ));
    }
    Ok(())
}

/// Mean per-joint position error after translating the prediction so its
/// root joint coincides with the ground-truth root.
pub fn mpjpe(pred: &JointSet, gt: &JointSet) -> Result<f64, MetricsError> {
    check_counts("mpjpe", pred.len(), gt.len())?;
    let shift = gt.root() - pred.root();
    let sum: f64 = pred
        .points
        .iter()
        .zip(&gt.points)
        .map(|(p, q)| (*p + shift).distance(q))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean per-joint position error after Procrustes alignment of the
/// prediction onto the ground truth.
pub fn pa_mpjpe(pred: &JointSet, gt: &JointSet) -> Result<f64, MetricsError> {
    let transform = procrustes_align(pred, gt)?;
    let sum: f64 = pred
        .points
        .iter()
        .zip(&gt.points)
        .map(|(p, q)| transform.apply(*p).distance(q))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean per-joint position error in world coordinates: no alignment.
pub fn w_mpjpe(pred: &JointSet, gt: &JointSet) -> Result<f64, MetricsError> {
    check_counts("w_mpjpe", pred.len(), gt.len())?;
    Ok(mean_distance(&pred.points, &gt.points))
}

/// Mean per-vertex error after root translation (the `mpjpe` convention
/// applied to all vertices).
pub fn pve(
    pred_vertices: &[Point3],
    gt_vertices: &[Point3],
    pred_root: Point3,
    gt_root: Point3,
) -> Result<f64, MetricsError> {
    check_counts("pve", pred_vertices.len(), gt_vertices.len())?;
    if pred_vertices.is_empty() {
        return Err(MetricsError::Empty);
    }
    let shift = gt_root - pred_root;
    let sum: f64 = pred_vertices
        .iter()
        .zip(gt_vertices)
        .map(|(p, q)| (*p + shift).distance(q))
        .sum();
    Ok(sum / pred_vertices.len() as f64)
}

/// Mean per-vertex error in world coordinates: no alignment.
pub fn w_pve(pred_vertices: &[Point3], gt_vertices: &[Point3]) -> Result<f64, MetricsError> {
    check_counts("w_pve", pred_vertices.len(), gt_vertices.len())?;
    if pred_vertices.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(mean_distance(pred_vertices, gt_vertices))
}

/// The five metrics for one person, in cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PersonMetrics {
    pub mpjpe: f64,
    pub pa_mpjpe: f64,
    pub pve: f64,
    pub w_mpjpe: f64,
    pub w_pve: f64,
}

/// Per-person metrics and their unweighted mean over the scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    /// Always "cm".
    pub units: String,
    pub per_person: BTreeMap<String, PersonMetrics>,
    pub aggregate: PersonMetrics,
    pub person_count: usize,
}

const ZERO_METRICS: PersonMetrics = PersonMetrics {
    mpjpe: 0.0,
    pa_mpjpe: 0.0,
    pve: 0.0,
    w_mpjpe: 0.0,
    w_pve: 0.0,
};

/// Evaluate every predicted person against the ground-truth person with the
/// same id. Extra ground-truth persons are ignored; a predicted person with
/// no ground-truth counterpart is an error, as is any joint-name or
/// vertex-count disagreement. An empty prediction yields a zero aggregate
/// with `person_count` 0.
pub fn evaluate_scene(pred: &Scene, gt: &Scene) -> Result<MetricReport, MetricsError> {
    let mut per_person = BTreeMap::new();
    let mut total = ZERO_METRICS;
    for mesh in &pred.meshes {
        let gt_mesh =
            gt.mesh_by_id(&mesh.person_id)
                .ok_or_else(|| MetricsError::UnmatchedPerson {
                    person_id: mesh.person_id.clone(),
                })?;
        let metrics = evaluate_person(mesh, gt_mesh)?;
        total.mpjpe += metrics.mpjpe;
        total.pa_mpjpe += metrics.pa_mpjpe;
        total.pve += metrics.pve;
        total.w_mpjpe += metrics.w_mpjpe;
        total.w_pve += metrics.w_pve;
        per_person.insert(mesh.person_id.clone(), metrics);
    }
    let person_count = per_person.len();
    let aggregate = if person_count == 0 {
        ZERO_METRICS
    } else {
        let n = person_count as f64;
        PersonMetrics {
            mpjpe: total.mpjpe / n,
            pa_mpjpe: total.pa_mpjpe / n,
            pve: total.pve / n,
            w_mpjpe: total.w_mpjpe / n,
            w_pve: total.w_pve / n,
        }
    };
    Ok(MetricReport {
        units: "cm".to_string(),
        per_person,
        aggregate,
        person_count,
    })
}

fn evaluate_person(pred: &Mesh, gt: &Mesh) -> Result<PersonMetrics, MetricsError> {
    let context = format!("person {:?}", pred.person_id);
    let (pred_names, pred_joints) = JointSet::from_mesh(pred)?;
    let (gt_names, gt_joints) = JointSet::from_mesh(gt)?;
    if pred_names != gt_names {
        return Err(shape_mismatch(
            context,
            format!("joint names differ: pred {pred_names:?}, gt {gt_names:?}"),
        ));
    }
    check_counts(&context, pred.vertices.len(), gt.vertices.len())?;
    Ok(PersonMetrics {
        mpjpe: mpjpe(&pred_joints, &gt_joints)?,
        pa_mpjpe: pa_mpjpe(&pred_joints, &gt_joints)?,
        pve: pve(
            &pred.vertices,
            &gt.vertices,
            pred_joints.root(),
            gt_joints.root(),
        )?,
        w_mpjpe: w_mpjpe(&pred_joints, &gt_joints)?,
        w_pve: w_pve(&pred.vertices, &gt.vertices)?,
    })
}
