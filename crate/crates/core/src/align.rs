//! Three-phase geometric realignment of predicted meshes onto the ground.
//!
//! Each mesh is moved by a similarity transform composed of:
//!
//! 1. **Ground homothety** — a scaling about the camera center that drops
//!    the foot midpoint onto the ground plane. Scalings centered on the
//!    projection center are invisible in the image.
//! 2. **Upright rotation** — a rotation about the foot midpoint, with axis
//!    normal to the plane spanned by the camera center, foot midpoint, and
//!    head, that takes the foot–head direction to the in-plane vertical.
//! 3. **Head-restore scale** — a scaling about the foot midpoint that puts
//!    the head back onto the viewing ray of its original image point.
//!
//! The net effect: the mesh stands vertically on the ground while its foot
//! midpoint and head project to exactly the same image points as before.
//! Being a per-mesh similarity transform, the whole operation is largely
//! invisible to Procrustes-aligned metrics; only world-frame metrics see it.

use nalgebra::{Rotation3, Unit, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    build_projection, closest_points_between_lines, CameraParams, Direction3, GeometryError,
    Point2, Point3, ProjectionMatrix, EPS_PARALLEL,
};
use crate::mesh::{Mesh, JOINT_FOOT_LEFT, JOINT_FOOT_RIGHT, JOINT_HEAD};
use crate::scene::Scene;

/// Maximum distance allowed between the body axis and the head viewing ray
/// in phase 3. Both lines lie in the same plane analytically, so anything
/// larger than floating-point noise signals an upstream bug.
pub const EPS_PLANE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("mesh {person_id:?} lacks joint {joint:?}")]
    MissingJoint { person_id: String, joint: String },
    #[error("projecting the input mesh failed: {0}")]
    InputProjection(GeometryError),
    #[error(
        "foot midpoint is at camera height (gap {gap} cm); the foot ray never meets the ground"
    )]
    FootAtCameraHeight { gap: f64 },
    #[error("camera center, foot midpoint, and head are (nearly) collinear")]
    DegeneratePlane,
    #[error("world-up is orthogonal to the alignment plane")]
    VerticalProjectionNull,
    #[error("foot and head coincide; the body axis is undefined")]
    ZeroBodyAxis,
    #[error("body axis is parallel to the head viewing ray")]
    HeadRayParallel,
    #[error("body axis and head viewing ray are not coplanar (gap {distance} cm)")]
    NotCoplanar { distance: f64 },
    #[error("head-restore scale {s} is not positive; the head would flip through the foot")]
    NegativeScale { s: f64 },
    #[error("reprojecting the aligned mesh failed: {0}")]
    OutputProjection(GeometryError),
}

impl AlignError {
    /// Which pipeline stage produced the error.
    pub fn phase(&self) -> &'static str {
        use AlignError::*;
        match self {
            MissingJoint { .. } | InputProjection(_) => "input",
            FootAtCameraHeight { .. } => "ground_homothety",
            DegeneratePlane | VerticalProjectionNull => "upright_rotation",
            ZeroBodyAxis
            | HeadRayParallel
            | NotCoplanar { .. }
            | NegativeScale { .. }
            | OutputProjection(_) => "head_restore_scale",
        }
    }
}

/// Full record of one mesh alignment: the foot/head pair before (`p1`),
/// after the homothety (`p2`), and after rotation and scaling (`p3`),
/// together with the three transform parameters.
///
/// `reprojection_residual` is the larger of the foot and head image-space
/// reprojection errors of the aligned mesh against the original image
/// points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentTrace {
    pub p1: Point3,
    pub p1_prime: Point3,
    pub p2: Point3,
    pub p2_prime: Point3,
    pub p3: Point3,
    pub p3_prime: Point3,
    pub lambda_ground: f64,
    pub rotation_axis: Direction3,
    pub rotation_angle: f64,
    pub scale_head: f64,
    pub reprojection_residual: f64,
}

fn foot_mid_of(mesh: &Mesh) -> Result<Point3, AlignError> {
    mesh.foot_mid().ok_or_else(|| {
        let joint = if mesh.joint_point(JOINT_FOOT_LEFT).is_none() {
            JOINT_FOOT_LEFT
        } else {
            JOINT_FOOT_RIGHT
        };
        AlignError::MissingJoint {
            person_id: mesh.person_id.clone(),
            joint: joint.to_string(),
        }
    })
}

fn head_of(mesh: &Mesh) -> Result<Point3, AlignError> {
    mesh.head().ok_or_else(|| AlignError::MissingJoint {
        person_id: mesh.person_id.clone(),
        joint: JOINT_HEAD.to_string(),
    })
}

fn project_front(proj: &ProjectionMatrix, p: Point3) -> Result<Point2, GeometryError> {
    let (img, w) = proj.project_point(p)?;
    if w <= proj.eps_w() {
        return Err(GeometryError::DegenerateDepth { w });
    }
    Ok(img)
}

/// Phase 1: scale the mesh about the camera center so the foot midpoint
/// lands on the ground plane. Returns the scaled mesh and the factor
/// λ = c / (c − y_foot). Every image projection is unchanged because the
/// scaling is centered on the projection center.
pub fn ground_homothety(mesh: &Mesh, cam: &CameraParams) -> Result<(Mesh, f64), AlignError> {
    let foot = foot_mid_of(mesh)?;
    let c = cam.height();
    let gap = c - foot.y;
    if gap.abs() < crate::geometry::EPS_W_FACTOR * cam.f() {
        return Err(AlignError::FootAtCameraHeight { gap });
    }
    let lambda = c / gap;
    if lambda == 1.0 {
        return Ok((mesh.clone(), 1.0));
    }
    let center = Point3::new(0.0, c, 0.0);
    let scaled = mesh.map_vertices(|v| center + lambda * (v - center));
    Ok((scaled, lambda))
}

/// The unit normal of the plane through the camera center, `p2`, and
/// `p2_prime`, oriented to have non-negative X (tie: non-negative Z).
pub fn white_plane(
    cam: &CameraParams,
    p2: Point3,
    p2_prime: Point3,
) -> Result<Direction3, AlignError> {
    let center = Point3::new(0.0, cam.height(), 0.0);
    let a = center - p2;
    let b = p2_prime - p2;
    let (na, nb) = (a.norm(), b.norm());
    if na < 1e-12 || nb < 1e-12 {
        return Err(AlignError::DegeneratePlane);
    }
    let cross = a.cross(&b);
    if cross.norm() < EPS_PARALLEL * na * nb {
        return Err(AlignError::DegeneratePlane);
    }
    let mut n = cross / cross.norm();
    let flip = if n.x != 0.0 { n.x < 0.0 } else { n.z < 0.0 };
    if flip {
        n = -n;
    }
    Direction3::from_vector(n).map_err(|_| AlignError::DegeneratePlane)
}

/// Phase 2: rotate the mesh about its foot midpoint so the foot–head
/// direction becomes the projection of world-up onto the white plane.
/// The axis is the plane normal; the angle is signed by the right-hand
/// rule about it. Returns the rotated mesh, axis, and angle.
pub fn upright_rotation(
    mesh: &Mesh,
    cam: &CameraParams,
) -> Result<(Mesh, Direction3, f64), AlignError> {
    let p2 = foot_mid_of(mesh)?;
    let p2_prime = head_of(mesh)?;
    let normal = white_plane(cam, p2, p2_prime)?;
    let n = normal.as_vector();

    let up = Vector3::y();
    let projected = up - up.dot(&n) * n;
    if projected.norm() < 1e-9 {
        return Err(AlignError::VerticalProjectionNull);
    }
    let u = projected / projected.norm();
    let d = (p2_prime - p2) / (p2_prime - p2).norm();

    let angle = (d.cross(&u)).dot(&n).atan2(d.dot(&u));
    if angle == 0.0 {
        return Ok((mesh.clone(), normal, 0.0));
    }
    let rotation = Rotation3::from_axis_angle(&Unit::new_normalize(n), angle);
    let rotated = mesh.map_vertices(|v| p2 + rotation * (v - p2));
    Ok((rotated, normal, angle))
}

/// Phase 3: scale the mesh about its foot midpoint so the head lands on
/// the viewing ray of `target_head_img`. Returns the scaled mesh, the
/// factor s, and the image-space distance between the scaled head's
/// projection and the target.
pub fn head_restore_scale(
    mesh: &Mesh,
    cam: &CameraParams,
    target_head_img: Point2,
) -> Result<(Mesh, f64, f64), AlignError> {
    let p2 = foot_mid_of(mesh)?;
    let head = head_of(mesh)?;
    let body_len = (head - p2).norm();
    let body_dir = Direction3::from_vector(head - p2).map_err(|_| AlignError::ZeroBodyAxis)?;

    let proj = build_projection(cam);
    let ray = proj.back_project_ray(target_head_img);
    let closest = closest_points_between_lines(p2, body_dir, ray.origin, ray.dir)
        .map_err(|_| AlignError::HeadRayParallel)?;
    if closest.distance > EPS_PLANE {
        return Err(AlignError::NotCoplanar {
            distance: closest.distance,
        });
    }
    let s = closest.s / body_len;
    if s <= 0.0 {
        return Err(AlignError::NegativeScale { s });
    }
    let scaled = if s == 1.0 {
        mesh.clone()
    } else {
        mesh.map_vertices(|v| p2 + s * (v - p2))
    };
    let new_head = head_of(&scaled)?;
    let head_img = project_front(&proj, new_head).map_err(AlignError::OutputProjection)?;
    Ok((scaled, s, head_img.distance(&target_head_img)))
}

/// Run all three phases on one mesh. On success the returned mesh
/// satisfies: foot midpoint and head project to their original image
/// points within 1e-6 image units, the foot midpoint lies on the ground
/// within 1e-9 cm, and the foot–head direction is the in-plane vertical.
/// On error the mesh is left untouched (the caller keeps the original).
pub fn align_mesh(mesh: &Mesh, cam: &CameraParams) -> Result<(Mesh, AlignmentTrace), AlignError> {
    let proj = build_projection(cam);
    let p1 = foot_mid_of(mesh)?;
    let p1_prime = head_of(mesh)?;
    let target_foot_img = project_front(&proj, p1).map_err(AlignError::InputProjection)?;
    let target_head_img = project_front(&proj, p1_prime).map_err(AlignError::InputProjection)?;

    let (grounded, lambda_ground) = ground_homothety(mesh, cam)?;
    let p2 = foot_mid_of(&grounded)?;
    let p2_prime = head_of(&grounded)?;

    let (upright, rotation_axis, rotation_angle) = upright_rotation(&grounded, cam)?;
    let (aligned, scale_head, head_residual) = head_restore_scale(&upright, cam, target_head_img)?;

    let p3 = foot_mid_of(&aligned)?;
    let p3_prime = head_of(&aligned)?;
    let foot_img = project_front(&proj, p3).map_err(AlignError::OutputProjection)?;
    let foot_residual = foot_img.distance(&target_foot_img);

    let trace = AlignmentTrace {
        p1,
        p1_prime,
        p2,
        p2_prime,
        p3,
        p3_prime,
        lambda_ground,
        rotation_axis,
        rotation_angle,
        scale_head,
        reprojection_residual: foot_residual.max(head_residual),
    };
    Ok((aligned, trace))
}

/// Align every mesh of a scene independently. Failing meshes are kept
/// unmodified and reported alongside; traces appear in input order of the
/// successful meshes. The returned scene carries `cam`.
pub fn align_scene(
    scene: &Scene,
    cam: &CameraParams,
) -> (Scene, Vec<AlignmentTrace>, Vec<(String, AlignError)>) {
    let outcomes: Vec<Result<(Mesh, AlignmentTrace), (String, AlignError)>> = scene
        .meshes
        .par_iter()
        .map(|mesh| align_mesh(mesh, cam).map_err(|e| (mesh.person_id.clone(), e)))
        .collect();

    let mut meshes = Vec::with_capacity(scene.meshes.len());
    let mut traces = Vec::new();
    let mut errors = Vec::new();
    for (original, outcome) in scene.meshes.iter().zip(outcomes) {
        match outcome {
            Ok((mesh, trace)) => {
                meshes.push(mesh);
                traces.push(trace);
            }
            Err(e) => {
                meshes.push(original.clone());
                errors.push(e);
            }
        }
    }
    let out = Scene {
        image: scene.image,
        camera: Some(*cam),
        meshes,
    };
    (out, traces, errors)
}
