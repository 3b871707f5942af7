//! SVG renderings of scenes: a perspective front view through the scene
//! camera, and a camera-independent orthographic side view in which
//! elevation errors (floating or sunken pedestrians) are plainly visible.
//!
//! Pixel coordinates follow raster convention: origin top-left, y down,
//! principal point at the image center. The conversion from mathematical
//! image coordinates happens here and only here:
//! `x_px = width/2 + x`, `y_px = height/2 − y`.
//!
//! Rendering is deterministic: identical scene and options produce a
//! byte-identical document (all numbers are written with two decimals).

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{build_projection, Point2, Point3, ProjectionMatrix};
use crate::mesh::Mesh;
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("front view requires a scene camera")]
    MissingCamera,
}

/// Which view to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    Front,
    Side,
}

/// World axis dropped by the orthographic side projection. Dropping X
/// looks along +X (the drawing plane is Z–Y); dropping Z looks along +Z
/// (the plane is X–Y). World-up stays vertical either way, which is the
/// point of the side view, so Y cannot be dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideAxis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub view: View,
    pub side_axis: SideAxis,
    pub show_ground: bool,
    pub stroke_width: f64,
    /// Seed for the per-person color palette.
    pub palette_seed: u64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            view: View::Front,
            side_axis: SideAxis::X,
            show_ground: true,
            stroke_width: 2.0,
            palette_seed: 0,
        }
    }
}

/// Gap between the two panels of a paired rendering, px.
const PAIR_GAP: f64 = 16.0;
const MARKER_RADIUS: f64 = 2.0;

fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn person_color(palette_seed: u64, index: usize) -> String {
    let base = (palette_seed % 360) as f64;
    let hue = (base + index as f64 * 137.50776405003785).rem_euclid(360.0);
    format!("hsl({}, 65%, 42%)", fmt2(hue))
}

/// Mathematical image coordinates → raster pixels.
fn to_pixel(img: Point2, width: u32, height: u32) -> (f64, f64) {
    (width as f64 / 2.0 + img.x, height as f64 / 2.0 - img.y)
}

/// Liang–Barsky clip of a pixel-space segment to [0, w] × [0, h].
fn clip_to_canvas(
    p0: (f64, f64),
    p1: (f64, f64),
    w: f64,
    h: f64,
) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [(-dx, p0.0), (dx, w - p0.0), (-dy, p0.1), (dy, h - p0.1)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                if r > t0 {
                    t0 = r;
                }
            } else {
                if r < t0 {
                    return None;
                }
                if r < t1 {
                    t1 = r;
                }
            }
        }
    }
    Some((
        (p0.0 + t0 * dx, p0.1 + t0 * dy),
        (p0.0 + t1 * dx, p0.1 + t1 * dy),
    ))
}

/// Clip a 3D segment against the near plane (minimum projective depth).
fn near_clip(proj: &ProjectionMatrix, a: Point3, b: Point3) -> Option<(Point3, Point3)> {
    let near = 2.0 * proj.eps_w();
    let wa = proj.depth_of(a);
    let wb = proj.depth_of(b);
    if wa < near && wb < near {
        return None;
    }
    if wa >= near && wb >= near {
        return Some((a, b));
    }
    let t = (near - wa) / (wb - wa);
    let cut = a + t * (b - a);
    if wa < near {
        Some((cut, b))
    } else {
        Some((a, cut))
    }
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = fmt2(width),
        h = fmt2(height),
    );
}

fn background(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        fmt2(width),
        fmt2(height),
    );
}

fn ground_line(out: &mut String, y: f64, width: f64) {
    let _ = writeln!(
        out,
        "<line id=\"ground\" x1=\"0\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#999999\" stroke-width=\"1\"/>",
        y = fmt2(y),
        x2 = fmt2(width),
    );
}

fn emit_line(out: &mut String, a: (f64, f64), b: (f64, f64)) {
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
        fmt2(a.0),
        fmt2(a.1),
        fmt2(b.0),
        fmt2(b.1),
    );
}

fn emit_marker(out: &mut String, class: &str, p: (f64, f64), color: &str) {
    let _ = writeln!(
        out,
        "<circle class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\" stroke=\"none\"/>",
        fmt2(p.0),
        fmt2(p.1),
        fmt2(MARKER_RADIUS),
    );
}

fn open_person_group(out: &mut String, mesh: &Mesh, color: &str, stroke_width: f64) {
    let _ = writeln!(
        out,
        "<g id=\"person-{}\" stroke=\"{color}\" stroke-width=\"{}\" stroke-linecap=\"round\" fill=\"none\">",
        xml_escape(&mesh.person_id),
        fmt2(stroke_width),
    );
}

fn front_body(scene: &Scene, opts: &RenderOptions, out: &mut String) -> Result<(), RenderError> {
    let camera = scene.camera.ok_or(RenderError::MissingCamera)?;
    let proj = build_projection(&camera);
    let (w, h) = (scene.image.width, scene.image.height);
    let (wf, hf) = (w as f64, h as f64);
    background(out, wf, hf);
    if opts.show_ground {
        // The horizon: the image of the ground plane at infinite depth.
        let y_math = -camera.f() * camera.pitch().tan();
        ground_line(out, hf / 2.0 - y_math, wf);
    }
    for (idx, mesh) in scene.meshes.iter().enumerate() {
        let color = person_color(opts.palette_seed, idx);
        open_person_group(out, mesh, &color, opts.stroke_width);
        for seg in &mesh.segments {
            let (Some(&a), Some(&b)) = (mesh.vertices.get(seg[0]), mesh.vertices.get(seg[1]))
            else {
                continue;
            };
            let Some((a3, b3)) = near_clip(&proj, a, b) else {
                continue;
            };
            let (Ok((ia, _)), Ok((ib, _))) = (proj.project_point(a3), proj.project_point(b3))
            else {
                continue;
            };
            let pa = to_pixel(ia, w, h);
            let pb = to_pixel(ib, w, h);
            if let Some((ca, cb)) = clip_to_canvas(pa, pb, wf, hf) {
                emit_line(out, ca, cb);
            }
        }
        for (class, point) in [("foot", mesh.foot_mid()), ("head", mesh.head())] {
            let Some(p) = point else { continue };
            if proj.depth_of(p) <= proj.eps_w() {
                continue;
            }
            let Ok((img, _)) = proj.project_point(p) else {
                continue;
            };
            let px = to_pixel(img, w, h);
            if px.0 >= 0.0 && px.0 <= wf && px.1 >= 0.0 && px.1 <= hf {
                emit_marker(out, class, px, &color);
            }
        }
        let _ = writeln!(out, "</g>");
    }
    Ok(())
}

/// The affine world→pixel map used by the side view: drop one horizontal
/// axis, fit the content (plus the ground level Y = 0) into the canvas
/// with a 5% margin and uniform scale, y down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideMapping {
    axis: SideAxis,
    scale: f64,
    offset_h: f64,
    offset_v: f64,
}

impl SideMapping {
    pub fn to_pixel(&self, p: Point3) -> (f64, f64) {
        let h = match self.axis {
            SideAxis::X => p.z,
            SideAxis::Z => p.x,
        };
        (
            self.offset_h + self.scale * h,
            self.offset_v - self.scale * p.y,
        )
    }

    /// Pixel y of the ground plane Y = 0.
    pub fn ground_y_px(&self) -> f64 {
        self.offset_v
    }

    /// Pixels per cm.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Compute the side-view mapping for a scene, or `None` if it has no
/// vertices to fit. Camera-independent by construction.
pub fn side_mapping(scene: &Scene, opts: &RenderOptions) -> Option<SideMapping> {
    let mut h_range: Option<(f64, f64)> = None;
    // The ground level is always part of the vertical extent so the gap
    // between feet and ground stays visible.
    let mut v_range = (0.0_f64, 0.0_f64);
    for mesh in &scene.meshes {
        for p in &mesh.vertices {
            let h = match opts.side_axis {
                SideAxis::X => p.z,
                SideAxis::Z => p.x,
            };
            h_range = Some(match h_range {
                None => (h, h),
                Some((lo, hi)) => (lo.min(h), hi.max(h)),
            });
            v_range = (v_range.0.min(p.y), v_range.1.max(p.y));
        }
    }
    let (h_lo, h_hi) = h_range?;
    let (wf, hf) = (scene.image.width as f64, scene.image.height as f64);
    let extent_h = (h_hi - h_lo).max(1e-9);
    let extent_v = (v_range.1 - v_range.0).max(1e-9);
    let scale = (0.9 * wf / extent_h).min(0.9 * hf / extent_v);
    let center_h = (h_lo + h_hi) / 2.0;
    let center_v = (v_range.0 + v_range.1) / 2.0;
    Some(SideMapping {
        axis: opts.side_axis,
        scale,
        offset_h: wf / 2.0 - scale * center_h,
        offset_v: hf / 2.0 + scale * center_v,
    })
}

fn side_body(scene: &Scene, opts: &RenderOptions, out: &mut String) {
    let (wf, hf) = (scene.image.width as f64, scene.image.height as f64);
    background(out, wf, hf);
    let Some(mapping) = side_mapping(scene, opts) else {
        return;
    };
    if opts.show_ground {
        ground_line(out, mapping.ground_y_px(), wf);
    }
    for (idx, mesh) in scene.meshes.iter().enumerate() {
        let color = person_color(opts.palette_seed, idx);
        open_person_group(out, mesh, &color, opts.stroke_width);
        for seg in &mesh.segments {
            let (Some(&a), Some(&b)) = (mesh.vertices.get(seg[0]), mesh.vertices.get(seg[1]))
            else {
                continue;
            };
            emit_line(out, mapping.to_pixel(a), mapping.to_pixel(b));
        }
        for (class, point) in [("foot", mesh.foot_mid()), ("head", mesh.head())] {
            if let Some(p) = point {
                emit_marker(out, class, mapping.to_pixel(p), &color);
            }
        }
        let _ = writeln!(out, "</g>");
    }
}

/// Perspective rendering through the scene camera.
pub fn render_front(scene: &Scene, opts: &RenderOptions) -> Result<String, RenderError> {
    let mut out = String::new();
    svg_open(
        &mut out,
        scene.image.width as f64,
        scene.image.height as f64,
    );
    front_body(scene, opts, &mut out)?;
    out.push_str("</svg>\n");
    Ok(out)
}

/// Orthographic side rendering; ignores the camera entirely.
pub fn render_side(scene: &Scene, opts: &RenderOptions) -> String {
    let mut out = String::new();
    svg_open(
        &mut out,
        scene.image.width as f64,
        scene.image.height as f64,
    );
    side_body(scene, opts, &mut out);
    out.push_str("</svg>\n");
    out
}

/// Render the view selected by `opts.view`.
pub fn render(scene: &Scene, opts: &RenderOptions) -> Result<String, RenderError> {
    match opts.view {
        View::Front => render_front(scene, opts),
        View::Side => Ok(render_side(scene, opts)),
    }
}

/// Front and side views side by side in one document.
pub fn render_pair(scene: &Scene, opts: &RenderOptions) -> Result<String, RenderError> {
    let (wf, hf) = (scene.image.width as f64, scene.image.height as f64);
    let mut out = String::new();
    svg_open(&mut out, 2.0 * wf + PAIR_GAP, hf);
    let _ = writeln!(out, "<g transform=\"translate(0 0)\">");
    front_body(scene, opts, &mut out)?;
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        "<g transform=\"translate({} 0)\">",
        fmt2(wf + PAIR_GAP)
    );
    side_body(scene, opts, &mut out);
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::align_scene;
    use crate::geometry::CameraParams;
    use crate::scene::ImageDims;
    use crate::synth::{corrupt_scene, generate_scene, CorruptionParams, SceneSpec};
    use crate::synth_test_support::upright_mesh;
    use nalgebra::Vector3;

    fn one_person_scene(camera: Option<CameraParams>) -> Scene {
        Scene {
            image: ImageDims {
                width: 1280,
                height: 800,
            },
            camera,
            meshes: vec![upright_mesh("solo", 0.0, 2000.0, 170.0)],
        }
    }

    fn default_camera() -> CameraParams {
        // Tilted down from 4 m so a pedestrian 20 m out is fully in frame.
        CameraParams::new(1000.0, -0.35, 400.0).unwrap()
    }

    /// Extract (cx, cy) of the markers with the given class, in order.
    fn markers(svg: &str, class: &str) -> Vec<(f64, f64)> {
        let tag = format!("class=\"{class}\"");
        svg.lines()
            .filter(|l| l.contains("<circle") && l.contains(&tag))
            .map(|l| {
                let grab = |key: &str| -> f64 {
                    let start = l.find(key).unwrap() + key.len();
                    let rest = &l[start..];
                    rest[..rest.find('"').unwrap()].parse().unwrap()
                };
                (grab("cx=\""), grab("cy=\""))
            })
            .collect()
    }

    #[test]
    fn front_empty_scene_and_missing_camera() {
        let empty = Scene {
            image: ImageDims {
                width: 320,
                height: 200,
            },
            camera: Some(default_camera()),
            meshes: vec![],
        };
        let svg = render_front(&empty, &RenderOptions::default()).unwrap();
        assert!(svg.starts_with("<svg "));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<rect"));
        assert!(svg.contains("id=\"ground\""));
        assert!(!svg.contains("person-"));

        let no_ground = render_front(
            &empty,
            &RenderOptions {
                show_ground: false,
                ..RenderOptions::default()
            },
        )
        .unwrap();
        assert!(!no_ground.contains("id=\"ground\""));

        assert_eq!(
            render_front(&one_person_scene(None), &RenderOptions::default()),
            Err(RenderError::MissingCamera)
        );
    }

    #[test]
    fn front_head_above_foot_in_pixels() {
        let scene = one_person_scene(Some(default_camera()));
        let svg = render_front(&scene, &RenderOptions::default()).unwrap();
        assert!(svg.contains("person-solo"));
        assert!(svg.matches("<line").count() > 3);
        let feet = markers(&svg, "foot");
        let heads = markers(&svg, "head");
        assert_eq!(feet.len(), 1);
        assert_eq!(heads.len(), 1);
        // Raster y grows downward: the head is above the foot.
        assert!(
            heads[0].1 < feet[0].1,
            "head {:?} vs foot {:?}",
            heads[0],
            feet[0]
        );
    }

    #[test]
    fn front_marker_matches_projection_pixel_transform() {
        let scene = one_person_scene(Some(default_camera()));
        let svg = render_front(&scene, &RenderOptions::default()).unwrap();
        let proj = build_projection(&scene.camera.unwrap());
        let (img, _) = proj.project_point(scene.meshes[0].head().unwrap()).unwrap();
        let expected = to_pixel(img, scene.image.width, scene.image.height);
        let got = markers(&svg, "head")[0];
        assert!((got.0 - expected.0).abs() <= 0.5);
        assert!((got.1 - expected.1).abs() <= 0.5);
    }

    #[test]
    fn front_alignment_only_moves_markers_within_tolerance() {
        let camera = default_camera();
        let base = one_person_scene(Some(camera));
        let tilted = Scene {
            meshes: vec![{
                let m = &base.meshes[0];
                let pivot = m.foot_mid().unwrap();
                let rot = nalgebra::Rotation3::from_axis_angle(
                    &nalgebra::Unit::new_normalize(Vector3::x()),
                    0.3,
                );
                m.map_vertices(|v| (pivot + rot * (v - pivot)) + Vector3::new(0.0, 40.0, 0.0))
            }],
            ..base.clone()
        };
        let (aligned, traces, errors) = align_scene(&tilted, &camera);
        assert_eq!(traces.len(), 1);
        assert!(errors.is_empty());

        let opts = RenderOptions::default();
        let before = render_front(&tilted, &opts).unwrap();
        let after = render_front(&aligned, &opts).unwrap();
        for class in ["foot", "head"] {
            let b = markers(&before, class)[0];
            let a = markers(&after, class)[0];
            // Anchored within 1e-6 image units; the SVG adds only the
            // two-decimal formatting quantum.
            assert!(
                (a.0 - b.0).abs() <= 0.011,
                "{class} x moved {} -> {}",
                b.0,
                a.0
            );
            assert!(
                (a.1 - b.1).abs() <= 0.011,
                "{class} y moved {} -> {}",
                b.1,
                a.1
            );
        }
        // The bodies genuinely differ (the mesh moved), only anchors agree.
        assert_ne!(before, after);
    }

    #[test]
    fn front_clips_behind_camera() {
        let mut scene = one_person_scene(Some(default_camera()));
        scene.meshes[0] = scene.meshes[0].map_vertices(|v| Point3::new(v.x, v.y, v.z - 4000.0));
        let svg = render_front(&scene, &RenderOptions::default()).unwrap();
        // Entirely behind the camera: group exists, no geometry inside.
        assert!(svg.contains("person-solo"));
        let person_chunk = &svg[svg.find("person-solo").unwrap()..svg.find("</g>").unwrap()];
        assert!(!person_chunk.contains("<line"));
        assert!(!person_chunk.contains("<circle"));
    }

    #[test]
    fn rendering_is_deterministic_and_palette_sensitive() {
        let spec = SceneSpec {
            seed: 42,
            person_count: 6,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        let opts = RenderOptions::default();
        assert_eq!(
            render_front(&scene, &opts).unwrap(),
            render_front(&scene, &opts).unwrap()
        );
        assert_eq!(render_side(&scene, &opts), render_side(&scene, &opts));

        let other = RenderOptions {
            palette_seed: 123,
            ..opts
        };
        assert_ne!(
            render_front(&scene, &opts).unwrap(),
            render_front(&scene, &other).unwrap()
        );
    }

    #[test]
    fn side_view_is_orthographic_and_grounded() {
        let scene = one_person_scene(None);
        let opts = RenderOptions {
            view: View::Side,
            ..RenderOptions::default()
        };
        let mapping = side_mapping(&scene, &opts).unwrap();
        let mesh = &scene.meshes[0];
        let foot_px = mapping.to_pixel(mesh.foot_mid().unwrap());
        let head_px = mapping.to_pixel(mesh.head().unwrap());
        // Vertical extent = height × scale; base exactly on the ground line.
        assert!((foot_px.1 - head_px.1 - 170.0 * mapping.scale()).abs() < 1e-9);
        assert!((foot_px.1 - mapping.ground_y_px()).abs() < 1e-9);

        // A floating copy shows a proportional gap.
        let floating = Scene {
            meshes: vec![mesh.map_vertices(|v| v + Vector3::new(0.0, 50.0, 0.0))],
            ..scene.clone()
        };
        let fmap = side_mapping(&floating, &opts).unwrap();
        let gap = fmap.ground_y_px() - fmap.to_pixel(floating.meshes[0].foot_mid().unwrap()).1;
        assert!((gap - 50.0 * fmap.scale()).abs() < 1e-9);
        assert!(gap > 0.0);

        let svg = render_side(&scene, &opts);
        assert!(svg.contains("id=\"ground\""));
        assert!(svg.contains("person-solo"));
    }

    #[test]
    fn side_view_ignores_camera() {
        let spec = SceneSpec {
            seed: 9,
            person_count: 5,
            ..SceneSpec::default()
        };
        let mut scene = generate_scene(&spec).unwrap();
        let opts = RenderOptions {
            view: View::Side,
            ..RenderOptions::default()
        };
        let a = render_side(&scene, &opts);
        scene.camera = Some(CameraParams::new(333.0, 0.4, 2500.0).unwrap());
        let b = render_side(&scene, &opts);
        scene.camera = None;
        let c = render_side(&scene, &opts);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn side_axis_choices_differ() {
        let spec = SceneSpec {
            seed: 14,
            person_count: 4,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        let x = render_side(
            &scene,
            &RenderOptions {
                side_axis: SideAxis::X,
                ..Default::default()
            },
        );
        let z = render_side(
            &scene,
            &RenderOptions {
                side_axis: SideAxis::Z,
                ..Default::default()
            },
        );
        assert_ne!(x, z);
    }

    #[test]
    fn side_view_shows_alignment_regrounding() {
        let spec = SceneSpec {
            seed: 77,
            person_count: 8,
            ..SceneSpec::default()
        };
        let truth = generate_scene(&spec).unwrap();
        let params = CorruptionParams {
            tilt_toward_camera: 0.3,
            elevation_error: 25.0,
            seed: 6,
            ..Default::default()
        };
        let corrupted = corrupt_scene(&truth, &params).unwrap();
        let (aligned, traces, errors) = align_scene(&corrupted, &spec.camera);
        assert_eq!(traces.len(), 8);
        assert!(errors.is_empty());

        let opts = RenderOptions {
            view: View::Side,
            ..RenderOptions::default()
        };
        let mapping = side_mapping(&aligned, &opts).unwrap();
        for mesh in &aligned.meshes {
            let foot_px = mapping.to_pixel(mesh.foot_mid().unwrap());
            assert!(
                (foot_px.1 - mapping.ground_y_px()).abs() <= 0.5,
                "foot off ground line by {} px",
                (foot_px.1 - mapping.ground_y_px()).abs()
            );
        }
        // By contrast, the corrupted scene has visible gaps.
        let cmap = side_mapping(&corrupted, &opts).unwrap();
        let off = corrupted
            .meshes
            .iter()
            .filter(|m| (cmap.to_pixel(m.foot_mid().unwrap()).1 - cmap.ground_y_px()).abs() > 0.5)
            .count();
        assert!(off > 0, "corruption left every foot on the ground line");
    }

    #[test]
    fn pair_contains_both_panels() {
        let scene = one_person_scene(Some(default_camera()));
        let svg = render_pair(&scene, &RenderOptions::default()).unwrap();
        assert!(svg.contains("translate(0 0)"));
        assert!(svg.contains(&format!("translate({} 0)", fmt2(1280.0 + PAIR_GAP))));
        assert_eq!(svg.matches("<g transform=").count(), 2);
        assert_eq!(svg.matches("person-solo").count(), 2);
        let total_width = fmt2(2.0 * 1280.0 + PAIR_GAP);
        assert!(svg.contains(&format!("width=\"{total_width}\"")));
    }

    #[test]
    fn person_ids_are_escaped() {
        let mut scene = one_person_scene(Some(default_camera()));
        scene.meshes[0].person_id = "a<b&\"c\"".to_string();
        let svg = render_front(&scene, &RenderOptions::default()).unwrap();
        assert!(svg.contains("person-a&lt;b&amp;&quot;c&quot;"));
        assert!(!svg.contains("person-a<"));
    }

    #[test]
    fn render_dispatches_on_view() {
        let scene = one_person_scene(Some(default_camera()));
        let front = render(&scene, &RenderOptions::default()).unwrap();
        let side = render(
            &scene,
            &RenderOptions {
                view: View::Side,
                ..RenderOptions::default()
            },
        )
        .unwrap();
        assert_eq!(
            front,
            render_front(&scene, &RenderOptions::default()).unwrap()
        );
        assert_eq!(side, render_side(&scene, &RenderOptions::default()));
        assert_ne!(front, side);
    }
}
