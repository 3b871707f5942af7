//! Scene interchange format: camera, image dimensions and meshes in a
//! canonical JSON encoding.
//!
//! The encoding is canonical so that identical scenes produce identical
//! bytes: keys appear in a fixed order, floats are written with at most nine
//! significant digits, and one mesh occupies one line. Saving a freshly
//! loaded canonical file reproduces it byte for byte; saving an arbitrary
//! scene normalizes it in a single pass.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::geometry::{CameraParams, Point3};
use crate::mesh::{Mesh, REQUIRED_JOINTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported units {found:?} (only \"cm\" is supported)")]
    Unit { found: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: ImageDims,
    pub camera: Option<CameraParams>,
    pub meshes: Vec<Mesh>,
}

impl Scene {
    pub fn mesh_by_id(&self, person_id: &str) -> Option<&Mesh> {
        self.meshes.iter().find(|m| m.person_id == person_id)
    }
}

/// Round to nine significant decimal digits (the value a canonical file
/// stores). Negative zero normalizes to zero.
pub fn quantize_sig9(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    format!("{v:.8e}")
        .parse()
        .expect("9-digit scientific notation re-parses")
}

/// Canonical text for a float: at most nine significant digits, always with
/// a decimal point.
pub fn format_number(v: f64) -> String {
    let mut s = quantize_sig9(v).to_string();
    if !s.contains('.') && !s.contains('e') {
        s.push_str(".0");
    }
    s
}

fn push_json_string(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn validate_mesh(i: usize, mesh: &Mesh) -> Result<(), SceneError> {
    let base = format!("/meshes/{i}");
    if mesh.person_id.is_empty() {
        return Err(schema(
            format!("{base}/person_id"),
            "person_id must be non-empty",
        ));
    }
    if mesh.vertices.is_empty() {
        return Err(schema(
            format!("{base}/vertices"),
            "vertex list must be non-empty",
        ));
    }
    for (vi, v) in mesh.vertices.iter().enumerate() {
        if !v.is_finite() {
            return Err(schema(
                format!("{base}/vertices/{vi}"),
                "vertex coordinates must be finite",
            ));
        }
    }
    for (si, seg) in mesh.segments.iter().enumerate() {
        for &ix in seg {
            if ix >= mesh.vertices.len() {
                return Err(schema(
                    format!("{base}/segments/{si}"),
                    format!(
                        "segment index {ix} out of range ({} vertices)",
                        mesh.vertices.len()
                    ),
                ));
            }
        }
    }
    for name in REQUIRED_JOINTS {
        if !mesh.joints.contains_key(name) {
            return Err(schema(
                format!("{base}/joints"),
                format!("missing required joint {name:?}"),
            ));
        }
    }
    for (name, &ix) in &mesh.joints {
        if ix >= mesh.vertices.len() {
            return Err(schema(
                format!("{base}/joints/{name}"),
                format!(
                    "joint index {ix} out of range ({} vertices)",
                    mesh.vertices.len()
                ),
            ));
        }
    }
    Ok(())
}

fn validate_scene(scene: &Scene) -> Result<(), SceneError> {
    if scene.image.width == 0 || scene.image.height == 0 {
        return Err(schema("/image", "image dimensions must be positive"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, mesh) in scene.meshes.iter().enumerate() {
        validate_mesh(i, mesh)?;
        if !seen.insert(mesh.person_id.as_str()) {
            return Err(schema(
                format!("/meshes/{i}/person_id"),
                format!("duplicate person_id {:?}", mesh.person_id),
            ));
        }
    }
    Ok(())
}

/// Serialize a scene to canonical JSON bytes.
pub fn save_scene(scene: &Scene) -> Result<Vec<u8>, SceneError> {
    validate_scene(scene)?;
    let mut out = String::new();
    out.push_str("{\n\"units\": \"cm\",\n");
    out.push_str(&format!(
        "\"image\": {{\"width\": {}, \"height\": {}}},\n",
        scene.image.width, scene.image.height
    ));
    match &scene.camera {
        Some(cam) => out.push_str(&format!(
            "\"camera\": {{\"f\": {}, \"pitch\": {}, \"height\": {}}},\n",
            format_number(cam.f()),
            format_number(cam.pitch()),
            format_number(cam.height())
        )),
        None => out.push_str("\"camera\": null,\n"),
    }
    out.push_str("\"meshes\": [");
    for (i, mesh) in scene.meshes.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        write_mesh(&mut out, mesh);
    }
    if !scene.meshes.is_empty() {
        out.push('\n');
    }
    out.push_str("]\n}\n");
    Ok(out.into_bytes())
}

fn write_mesh(out: &mut String, mesh: &Mesh) {
    out.push_str("{\"person_id\": ");
    push_json_string(out, &mesh.person_id);
    out.push_str(", \"vertices\": [");
    for (i, v) in mesh.vertices.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!(
            "[{}, {}, {}]",
            format_number(v.x),
            format_number(v.y),
            format_number(v.z)
        ));
    }
    out.push_str("], \"segments\": [");
    for (i, seg) in mesh.segments.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("[{}, {}]", seg[0], seg[1]));
    }
    out.push_str("], \"joints\": {");
    // Required joints first, in a fixed order, then any extras sorted by name.
    let mut first = true;
    let mut write_joint = |out: &mut String, name: &str, ix: usize| {
        if !first {
            out.push_str(", ");
        }
        first = false;
        push_json_string(out, name);
        out.push_str(&format!(": {ix}"));
    };
    for name in REQUIRED_JOINTS {
        write_joint(out, name, mesh.joints[name]);
    }
    for (name, &ix) in &mesh.joints {
        if !REQUIRED_JOINTS.contains(&name.as_str()) {
            write_joint(out, name, ix);
        }
    }
    out.push_str("}}");
}

/// Parse a scene from JSON bytes, validating the schema. Error paths use
/// JSON-pointer notation.
pub fn load_scene(bytes: &[u8]) -> Result<Scene, SceneError> {
    let root: Value =
        serde_json::from_slice(bytes).map_err(|e| schema("/", format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| schema("/", "top level must be an object"))?;

    let units = obj
        .get("units")
        .ok_or_else(|| schema("/units", "missing"))?
        .as_str()
        .ok_or_else(|| schema("/units", "must be a string"))?;
    if units != "cm" {
        return Err(SceneError::Unit {
            found: units.to_string(),
        });
    }

    let image = obj
        .get("image")
        .ok_or_else(|| schema("/image", "missing"))?;
    let image = image
        .as_object()
        .ok_or_else(|| schema("/image", "must be an object"))?;
    let width = get_u32(image.get("width"), "/image/width")?;
    let height = get_u32(image.get("height"), "/image/height")?;
    if width == 0 || height == 0 {
        return Err(schema("/image", "image dimensions must be positive"));
    }

    let camera = match obj.get("camera") {
        None | Some(Value::Null) => None,
        Some(Value::Object(c)) => {
            let f = get_f64(c.get("f"), "/camera/f")?;
            let pitch = get_f64(c.get("pitch"), "/camera/pitch")?;
            let h = get_f64(c.get("height"), "/camera/height")?;
            Some(CameraParams::new(f, pitch, h).map_err(|e| schema("/camera", e.to_string()))?)
        }
        Some(_) => return Err(schema("/camera", "must be an object or null")),
    };

    let meshes_val = obj
        .get("meshes")
        .ok_or_else(|| schema("/meshes", "missing"))?;
    let meshes_arr = meshes_val
        .as_array()
        .ok_or_else(|| schema("/meshes", "must be an array"))?;
    let mut meshes = Vec::with_capacity(meshes_arr.len());
    for (i, mv) in meshes_arr.iter().enumerate() {
        meshes.push(load_mesh(i, mv)?);
    }

    let scene = Scene {
        image: ImageDims { width, height },
        camera,
        meshes,
    };
    validate_scene(&scene)?;
    Ok(scene)
}

fn load_mesh(i: usize, v: &Value) -> Result<Mesh, SceneError> {
    let base = format!("/meshes/{i}");
    let obj = v
        .as_object()
        .ok_or_else(|| schema(&base, "mesh must be an object"))?;
    let person_id = obj
        .get("person_id")
        .ok_or_else(|| schema(format!("{base}/person_id"), "missing"))?
        .as_str()
        .ok_or_else(|| schema(format!("{base}/person_id"), "must be a string"))?
        .to_string();

    let verts = obj
        .get("vertices")
        .ok_or_else(|| schema(format!("{base}/vertices"), "missing"))?
        .as_array()
        .ok_or_else(|| schema(format!("{base}/vertices"), "must be an array"))?;
    let mut vertices = Vec::with_capacity(verts.len());
    for (vi, vv) in verts.iter().enumerate() {
        let path = format!("{base}/vertices/{vi}");
        let arr = vv
            .as_array()
            .ok_or_else(|| schema(&path, "vertex must be [x, y, z]"))?;
        if arr.len() != 3 {
            return Err(schema(&path, "vertex must be [x, y, z]"));
        }
        vertices.push(Point3::new(
            get_f64(arr.first(), &format!("{path}/0"))?,
            get_f64(arr.get(1), &format!("{path}/1"))?,
            get_f64(arr.get(2), &format!("{path}/2"))?,
        ));
    }

    let mut segments = Vec::new();
    if let Some(sv) = obj.get("segments") {
        let arr = sv
            .as_array()
            .ok_or_else(|| schema(format!("{base}/segments"), "must be an array"))?;
        for (si, seg) in arr.iter().enumerate() {
            let path = format!("{base}/segments/{si}");
            let pair = seg
                .as_array()
                .ok_or_else(|| schema(&path, "segment must be [i, j]"))?;
            if pair.len() != 2 {
                return Err(schema(&path, "segment must be [i, j]"));
            }
            segments.push([
                get_usize(pair.first(), &format!("{path}/0"))?,
                get_usize(pair.get(1), &format!("{path}/1"))?,
            ]);
        }
    }

    let joints_val = obj
        .get("joints")
        .ok_or_else(|| schema(format!("{base}/joints"), "missing"))?
        .as_object()
        .ok_or_else(|| schema(format!("{base}/joints"), "must be an object"))?;
    let mut joints = BTreeMap::new();
    for (name, jv) in joints_val {
        joints.insert(
            name.clone(),
            get_usize(Some(jv), &format!("{base}/joints/{name}"))?,
        );
    }

    Ok(Mesh {
        person_id,
        vertices,
        segments,
        joints,
    })
}

fn get_f64(v: Option<&Value>, path: &str) -> Result<f64, SceneError> {
    let x = v
        .and_then(Value::as_f64)
        .ok_or_else(|| schema(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(schema(path, "number must be finite"));
    }
    Ok(x)
}

fn get_usize(v: Option<&Value>, path: &str) -> Result<usize, SceneError> {
    v.and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| schema(path, "expected a non-negative integer"))
}

fn get_u32(v: Option<&Value>, path: &str) -> Result<u32, SceneError> {
    let x = v
        .and_then(Value::as_u64)
        .ok_or_else(|| schema(path, "expected a non-negative integer"))?;
    u32::try_from(x).map_err(|_| schema(path, "value out of range"))
}
