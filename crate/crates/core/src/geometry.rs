//! Camera model and elementary 3D/image geometry.
//!
//! The camera is described by three parameters: focal length `f` (in image
//! units), pitch `θ` (radians, rotation about the world X axis) and height
//! `c` (cm above the ground plane). Its projective action on homogeneous
//! world points (X, Y, Z, 1) is
//!
//! ```text
//!     | f      0         0         0        |
//! P = | 0   f·cosθ   −f·sinθ   −f·c·cosθ   |
//!     | 0    sinθ     cosθ      −c·sinθ    |
//!     | 0      0         0         1       |
//! ```
//!
//! yielding (w·x, w·y, w, 1) with image coordinates (x, y) and projective
//! depth w. The optical center is (0, c, 0) and det P = f².

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Two unit directions count as parallel when their cross product norm is
/// below this.
pub const EPS_PARALLEL: f64 = 1e-12;

/// Depth degeneracy scales with focal length: |w| < EPS_W_FACTOR · f is
/// treated as "on the camera plane".
pub const EPS_W_FACTOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid camera parameters: {0}")]
    InvalidCamera(&'static str),
    #[error("degenerate projective depth w = {w:e}")]
    DegenerateDepth { w: f64 },
    #[error("image point lies on the horizon for the requested world height")]
    HorizonDegenerate,
    #[error("lines are parallel within tolerance")]
    ParallelLines,
    #[error("cannot normalize a near-zero direction vector")]
    ZeroDirection,
}

/// Image point in mathematical coordinates (origin at the principal point,
/// y increases upward).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// World point in centimeters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn midpoint(&self, other: &Point3) -> Point3 {
        Point3::new(
            (self.x + other.x) / 2.0,
            (self.y + other.y) / 2.0,
            (self.z + other.z) / 2.0,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Sub for Point3 {
    type Output = Vector3<f64>;

    fn sub(self, rhs: Point3) -> Vector3<f64> {
        Vector3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Add<Vector3<f64>> for Point3 {
    type Output = Point3;

    fn add(self, rhs: Vector3<f64>) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Serialize for Point3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Point3::new(x, y, z))
    }
}

impl Serialize for Point2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point2::new(x, y))
    }
}

/// Unit-length 3D direction. Construction normalizes, so the invariant
/// ‖d‖ = 1 (within 1e-12) always holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction3(Vector3<f64>);

impl Direction3 {
    pub fn from_vector(v: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-12 {
            return Err(GeometryError::ZeroDirection);
        }
        Ok(Self(v / n))
    }

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        Self::from_vector(Vector3::new(x, y, z))
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }
}

impl Serialize for Direction3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.x, self.0.y, self.0.z].serialize(s)
    }
}

/// Validated camera parameters: f > 0, |pitch| < π/2, height > 0, all finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CameraParams {
    f: f64,
    pitch: f64,
    height: f64,
}

impl CameraParams {
    pub fn new(f: f64, pitch: f64, height: f64) -> Result<Self, GeometryError> {
        if !(f.is_finite() && pitch.is_finite() && height.is_finite()) {
            return Err(GeometryError::InvalidCamera("non-finite parameter"));
        }
        if f <= 0.0 {
            return Err(GeometryError::InvalidCamera(
                "focal length must be positive",
            ));
        }
        if pitch.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(GeometryError::InvalidCamera(
                "pitch must lie in (-pi/2, pi/2)",
            ));
        }
        if height <= 0.0 {
            return Err(GeometryError::InvalidCamera(
                "camera height must be positive",
            ));
        }
        Ok(Self { f, pitch, height })
    }

    /// Focal length in image units.
    pub fn f(&self) -> f64 {
        self.f
    }

    /// Pitch in radians.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Height of the optical center above the ground plane, in cm.
    pub fn height(&self) -> f64 {
        self.height
    }
}

impl<'de> Deserialize<'de> for CameraParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            f: f64,
            pitch: f64,
            height: f64,
        }
        let raw = Raw::deserialize(d)?;
        CameraParams::new(raw.f, raw.pitch, raw.height).map_err(D::Error::custom)
    }
}

/// Ray through space: origin plus a unit direction. Points with t > 0 are in
/// front of the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3,
    pub dir: Direction3,
}

impl Ray {
    pub fn at(&self, t: f64) -> Point3 {
        self.origin + self.dir.as_vector() * t
    }
}

/// The 4×4 projection matrix of a camera, with its inverse cached for depth
/// queries and back-projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    params: CameraParams,
    rows: [[f64; 4]; 4],
    inv: [[f64; 4]; 4],
}

/// Build the projection matrix for a camera. Always invertible (det = f²).
pub fn build_projection(params: &CameraParams) -> ProjectionMatrix {
    let (f, theta, c) = (params.f(), params.pitch(), params.height());
    let (s, co) = (theta.sin(), theta.cos());
    let rows = [
        [f, 0.0, 0.0, 0.0],
        [0.0, f * co, -f * s, -f * c * co],
        [0.0, s, co, -c * s],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let m = Matrix4::from_fn(|r, col| rows[r][col]);
    let inv_m = m
        .try_inverse()
        .expect("projection matrix is invertible for valid camera parameters");
    let mut inv = [[0.0; 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            inv[r][col] = inv_m[(r, col)];
        }
    }
    ProjectionMatrix {
        params: *params,
        rows,
        inv,
    }
}

impl ProjectionMatrix {
    pub fn params(&self) -> &CameraParams {
        &self.params
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.rows
    }

    /// Depth values with |w| below this are degenerate.
    pub fn eps_w(&self) -> f64 {
        EPS_W_FACTOR * self.params.f()
    }

    /// The optical center (0, height, 0): the unique world point the matrix
    /// collapses to zero image coordinates at zero depth.
    pub fn camera_center(&self) -> Point3 {
        Point3::new(0.0, self.params.height(), 0.0)
    }

    /// Projective depth of a world point (the third homogeneous output).
    pub fn depth_of(&self, p: Point3) -> f64 {
        let r = &self.rows[2];
        r[0] * p.x + r[1] * p.y + r[2] * p.z + r[3]
    }

    /// Project a world point, returning the image point and its depth w.
    pub fn project_point(&self, p: Point3) -> Result<(Point2, f64), GeometryError> {
        let w = self.depth_of(p);
        if !w.is_finite() || w.abs() < self.eps_w() {
            return Err(GeometryError::DegenerateDepth { w });
        }
        let r0 = &self.rows[0];
        let r1 = &self.rows[1];
        let wx = r0[0] * p.x + r0[1] * p.y + r0[2] * p.z + r0[3];
        let wy = r1[0] * p.x + r1[1] * p.y + r1[2] * p.z + r1[3];
        Ok((Point2::new(wx / w, wy / w), w))
    }

    /// Recover the projective depth of an image point given the world height
    /// (Y coordinate) of the underlying 3D point.
    ///
    /// World coordinates satisfy (X, Y, Z, 1) = P⁻¹ · (w·x, w·y, w, 1);
    /// reading off the Y row and solving for w gives
    /// w = (Y − P⁻¹[1][3]) / (P⁻¹[1] · (x, y, 1, 0)).
    pub fn depth_from_known_height(&self, img: Point2, y_world: f64) -> Result<f64, GeometryError> {
        let r = &self.inv[1];
        let den = r[0] * img.x + r[1] * img.y + r[2];
        if !den.is_finite() || den.abs() < self.eps_w() {
            return Err(GeometryError::HorizonDegenerate);
        }
        Ok((y_world - r[3]) / den)
    }

    /// World point of an image point at a given projective depth.
    pub fn world_point(&self, img: Point2, w: f64) -> Point3 {
        let v = [w * img.x, w * img.y, w, 1.0];
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.inv[r];
            *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        Point3::new(out[0], out[1], out[2])
    }

    /// The ray of world points projecting to an image point. Every point
    /// origin + t·dir with t > 0 has positive depth.
    pub fn back_project_ray(&self, img: Point2) -> Ray {
        let v = [img.x, img.y, 1.0, 0.0];
        let mut d = Vector3::zeros();
        for r in 0..3 {
            let row = &self.inv[r];
            d[r] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        let dir = Direction3::from_vector(d)
            .expect("back-projected direction is nonzero for an invertible projection");
        Ray {
            origin: self.camera_center(),
            dir,
        }
    }

    /// Apply the full matrix to a homogeneous 4-vector (mainly for tests).
    pub fn apply_homogeneous(&self, v: Vector4<f64>) -> Vector4<f64> {
        let mut out = Vector4::zeros();
        for r in 0..4 {
            let row = &self.rows[r];
            out[r] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }
}

/// Closest points between two infinite lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoints {
    pub on_a: Point3,
    pub on_b: Point3,
    pub distance: f64,
    /// Parameter along line a (point = a_origin + s·a_dir).
    pub s: f64,
    /// Parameter along line b.
    pub t: f64,
}

/// Closest pair of points between the lines a_origin + s·a_dir and
/// b_origin + t·b_dir. Fails with [`GeometryError::ParallelLines`] when the
/// directions are parallel within [`EPS_PARALLEL`].
pub fn closest_points_between_lines(
    a_origin: Point3,
    a_dir: Direction3,
    b_origin: Point3,
    b_dir: Direction3,
) -> Result<ClosestPoints, GeometryError> {
    let da = a_dir.as_vector();
    let db = b_dir.as_vector();
    if da.cross(&db).norm() < EPS_PARALLEL {
        return Err(GeometryError::ParallelLines);
    }
    let r = a_origin - b_origin;
    let b = da.dot(&db);
    let c = da.dot(&r);
    let f = db.dot(&r);
    let denom = 1.0 - b * b; // directions are unit length
    let s = (b * f - c) / denom;
    let t = (f - b * c) / denom;
    let on_a = a_origin + da * s;
    let on_b = b_origin + db * t;
    Ok(ClosestPoints {
        on_a,
        on_b,
        distance: on_a.distance(&on_b),
        s,
        t,
    })
}
