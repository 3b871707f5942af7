//! Pedestrian mesh: a vertex cloud with optional bone segments and named
//! joints given as vertex indices.

use std::collections::BTreeMap;

use crate::geometry::Point3;

pub const JOINT_HEAD: &str = "head";
pub const JOINT_FOOT_LEFT: &str = "foot_left";
pub const JOINT_FOOT_RIGHT: &str = "foot_right";
pub const JOINT_ROOT: &str = "root";

/// Joints every mesh must name.
pub const REQUIRED_JOINTS: [&str; 4] = [JOINT_HEAD, JOINT_FOOT_LEFT, JOINT_FOOT_RIGHT, JOINT_ROOT];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub person_id: String,
    /// Vertex positions in cm.
    pub vertices: Vec<Point3>,
    /// Index pairs into `vertices`, drawn as bones when rendering.
    pub segments: Vec<[usize; 2]>,
    /// Named joints (sorted map keeps serialization deterministic). The four
    /// entries of [`REQUIRED_JOINTS`] must be present.
    pub joints: BTreeMap<String, usize>,
}

impl Mesh {
    /// Position of a named joint, if present and in range.
    pub fn joint_point(&self, name: &str) -> Option<Point3> {
        self.joints
            .get(name)
            .and_then(|&i| self.vertices.get(i))
            .copied()
    }

    /// Midpoint of the two foot joints.
    pub fn foot_mid(&self) -> Option<Point3> {
        let l = self.joint_point(JOINT_FOOT_LEFT)?;
        let r = self.joint_point(JOINT_FOOT_RIGHT)?;
        Some(l.midpoint(&r))
    }

    pub fn head(&self) -> Option<Point3> {
        self.joint_point(JOINT_HEAD)
    }

    /// A copy with every vertex mapped through `f`; ids, segments and joints
    /// are preserved.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Mesh {
        Mesh {
            person_id: self.person_id.clone(),
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            segments: self.segments.clone(),
            joints: self.joints.clone(),
        }
    }
}
