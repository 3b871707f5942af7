//! Geometric post-processing for multi-person 3D pose estimates from a single
//! static camera.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! * [`calibration`] — recover the camera (focal length, pitch, height) from
//!   2D foot/head keypoint pairs of standing pedestrians via an exhaustive
//!   grid search.
//! * [`align`] — re-ground estimated meshes: a homothety about the camera
//!   center drops each mesh onto the ground plane, a rotation makes it
//!   upright, and a final scaling restores the head to its observed image
//!   position. All three steps preserve what the camera sees of the foot and
//!   head anchor points.
//! * [`metrics`] — MPJPE / PA-MPJPE / PVE plus their world-frame variants
//!   (no alignment before comparison), per person and aggregated.
//! * [`synth`] + [`scene`] + [`render`] — deterministic synthetic crowd
//!   scenes, a canonical JSON interchange format, and SVG visualisation
//!   (perspective front view and orthographic side view).
//!
//! World frame: +Y up, ground plane Y = 0, camera center on the Y axis,
//! units are centimeters. Image coordinates are mathematical (origin at the
//! principal point, y up); conversion to pixel coordinates happens only in
//! [`render`].

pub mod align;
pub mod calibration;
pub mod geometry;
pub mod mesh;
pub mod metrics;
pub mod render;
pub mod scene;
pub mod synth;

pub use geometry::{CameraParams, Direction3, Point2, Point3, ProjectionMatrix};
pub use mesh::Mesh;
pub use scene::Scene;
