//! Deterministic software renderer producing the 84x84 RGB observations.
//!
//! Primitives are expanded to world-space triangle meshes, clipped against
//! the near plane, projected and rasterized into a z-buffer with flat
//! shading plus a depth-based intensity falloff. Channel values are
//! quantized to the 8-bit grid at write time, so an `Image` round-trips
//! losslessly through the u8 storage used by replay buffers and PPM dumps.

use crate::camgeo::{CameraSpec, Mat4, Vec3};
use crate::error::{LiftError, Result};
use crate::liftsim::{self, ObjectKind, SceneState};
use serde::{Deserialize, Serialize};
use std::io::{Read as IoRead, Write as IoWrite};
use std::path::Path;

pub const OBS_WIDTH: usize = 84;
pub const OBS_HEIGHT: usize = 84;

const fn rgb(r: u8, g: u8, b: u8) -> [f32; 3] {
    [r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0]
}

/// Fixed palette: distinct hues per role so color jitter perturbs appearance
/// without destroying class separability. All colors sit on the 8-bit grid.
pub const BACKGROUND_COLOR: [f32; 3] = rgb(20, 23, 31);
pub const TABLE_COLOR: [f32; 3] = rgb(158, 153, 140);
pub const OBJECT_COLOR: [f32; 3] = rgb(217, 33, 26);
pub const HANDLE_COLOR: [f32; 3] = rgb(242, 153, 31);
pub const FINGER_COLOR: [f32; 3] = rgb(26, 191, 77);

/// Reciprocal depth falloff coefficient (per meter).
const FALLOFF_PER_M: f64 = 0.35;

/// H x W x 3 color buffer, row-major, channel-interleaved, values in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn filled(width: usize, height: usize, color: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        Image { width, height, data }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, c: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = c[0];
        self.data[i + 1] = c[1];
        self.data[i + 2] = c[2];
    }

    /// Quantized 8-bit view; exact for renderer output.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect()
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != width * height * 3 {
            return Err(LiftError::Shape(format!(
                "byte buffer {} does not match {}x{}x3",
                bytes.len(),
                width,
                height
            )));
        }
        Ok(Image {
            width,
            height,
            data: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        })
    }

    /// Binary PPM (P6), 8 bits per channel.
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        write!(f, "P6\n{} {}\n255\n", self.width, self.height)?;
        f.write_all(&self.to_u8())?;
        Ok(())
    }

    pub fn read_ppm(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        // Header: magic, width, height, maxval, single whitespace, then raster.
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 && pos < bytes.len() {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| {
                LiftError::Integrity("non-utf8 PPM header".into())
            })?);
        }
        if fields.len() != 4 || fields[0] != "P6" || fields[3] != "255" {
            return Err(LiftError::Integrity("unsupported PPM header".into()));
        }
        let width: usize = fields[1].parse().map_err(|_| LiftError::Integrity("bad width".into()))?;
        let height: usize =
            fields[2].parse().map_err(|_| LiftError::Integrity("bad height".into()))?;
        pos += 1;
        let need = width * height * 3;
        if bytes.len() < pos + need {
            return Err(LiftError::Integrity("truncated PPM raster".into()));
        }
        Image::from_u8(width, height, &bytes[pos..pos + need])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimitiveKind {
    /// Full extents (x, y, z) before yaw rotation.
    Box { dims: [f64; 3] },
    /// Vertical cylinder.
    Cylinder { radius: f64, height: f64 },
}

/// One renderable body: shape, pose (center position + yaw about z), color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub pos: Vec3,
    pub yaw: f64,
    pub color: [f32; 3],
}

/// Scene description for one state: table, object (mug adds its handle),
/// then the two gripper fingers, in that fixed order.
pub fn scene_primitives(state: &SceneState) -> Vec<Primitive> {
    let mut prims = Vec::with_capacity(5);
    prims.push(Primitive {
        kind: PrimitiveKind::Box {
            dims: [2.0 * liftsim::TABLE_HALF_X, 2.0 * liftsim::TABLE_HALF_Y, 0.015],
        },
        pos: [0.0, 0.0, -0.0075],
        yaw: 0.0,
        color: TABLE_COLOR,
    });
    match state.object_kind {
        ObjectKind::Cube => {
            prims.push(Primitive {
                kind: PrimitiveKind::Box { dims: [2.0 * liftsim::CUBE_HALF; 3] },
                pos: state.object_pos,
                yaw: state.object_yaw,
                color: OBJECT_COLOR,
            });
        }
        ObjectKind::Mug => {
            prims.push(Primitive {
                kind: PrimitiveKind::Cylinder {
                    radius: liftsim::MUG_RADIUS,
                    height: liftsim::MUG_HEIGHT,
                },
                pos: state.object_pos,
                yaw: state.object_yaw,
                color: OBJECT_COLOR,
            });
            // Handle sticks out radially along the yaw direction, mounted low
            // on the body so oblique views can hide it behind the cup.
            let (s, c) = state.object_yaw.sin_cos();
            let reach = liftsim::MUG_RADIUS + 0.5 * liftsim::HANDLE_LEN;
            let base_z = state.object_pos[2] - liftsim::MUG_HEIGHT * 0.5;
            prims.push(Primitive {
                kind: PrimitiveKind::Box {
                    dims: [liftsim::HANDLE_LEN, liftsim::HANDLE_WIDTH, liftsim::HANDLE_HEIGHT],
                },
                pos: [
                    state.object_pos[0] + reach * c,
                    state.object_pos[1] + reach * s,
                    base_z + liftsim::HANDLE_CENTER_Z,
                ],
                yaw: state.object_yaw,
                color: HANDLE_COLOR,
            });
        }
    }
    let half_gap = liftsim::FINGER_HALF_GAP_CLOSED
        + state.gripper_open
            * (liftsim::FINGER_HALF_GAP_OPEN - liftsim::FINGER_HALF_GAP_CLOSED);
    let (s, c) = state.gripper_yaw.sin_cos();
    for side in [-1.0, 1.0] {
        prims.push(Primitive {
            kind: PrimitiveKind::Box { dims: liftsim::FINGER_SIZE },
            pos: [
                state.gripper_pos[0] + side * half_gap * c,
                state.gripper_pos[1] + side * half_gap * s,
                state.gripper_pos[2] + liftsim::FINGER_SIZE[2] * 0.5,
            ],
            yaw: state.gripper_yaw,
            color: FINGER_COLOR,
        });
    }
    prims
}

/// Egocentric camera configuration; resolved defaults live in the harness
/// config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoCamera {
    /// Back-off from the gripper point along the (downward) gaze axis.
    pub backoff_m: f64,
    pub fov_deg: f64,
    pub aspect: f64,
}

impl Default for EgoCamera {
    fn default() -> Self {
        EgoCamera { backoff_m: 0.05, fov_deg: 60.0, aspect: 1.0 }
    }
}

/// First-person camera rigidly attached to the gripper, looking straight
/// down, image orientation tracking the gripper yaw.
pub fn egocentric_camera(state: &SceneState, cfg: &EgoCamera) -> CameraSpec {
    let eye = [
        state.gripper_pos[0],
        state.gripper_pos[1],
        state.gripper_pos[2] + cfg.backoff_m,
    ];
    let (s, c) = state.gripper_yaw.sin_cos();
    CameraSpec {
        eye,
        target: [eye[0], eye[1], eye[2] - 1.0],
        up: [-s, c, 0.0],
        fov_deg: cfg.fov_deg,
        aspect: cfg.aspect,
        near: 0.01,
        far: 3.0,
    }
}

fn box_corners(center: Vec3, dims: [f64; 3], yaw: f64) -> [Vec3; 8] {
    let (s, c) = yaw.sin_cos();
    let h = [dims[0] * 0.5, dims[1] * 0.5, dims[2] * 0.5];
    let mut out = [[0.0; 3]; 8];
    for (i, corner) in out.iter_mut().enumerate() {
        let sx = if i & 1 == 0 { -h[0] } else { h[0] };
        let sy = if i & 2 == 0 { -h[1] } else { h[1] };
        let sz = if i & 4 == 0 { -h[2] } else { h[2] };
        *corner = [
            center[0] + c * sx - s * sy,
            center[1] + s * sx + c * sy,
            center[2] + sz,
        ];
    }
    out
}

fn push_box(tris: &mut Vec<[Vec3; 3]>, center: Vec3, dims: [f64; 3], yaw: f64) {
    let v = box_corners(center, dims, yaw);
    // Two triangles per face; index pairs follow the corner bit layout.
    const FACES: [[usize; 4]; 6] = [
        [0, 1, 3, 2], // -z.. (bottom as seen with bit4=0)
        [4, 6, 7, 5], // +z
        [0, 2, 6, 4], // -x
        [1, 5, 7, 3], // +x
        [0, 4, 5, 1], // -y
        [2, 3, 7, 6], // +y
    ];
    for f in FACES {
        tris.push([v[f[0]], v[f[1]], v[f[2]]]);
        tris.push([v[f[0]], v[f[2]], v[f[3]]]);
    }
}

const CYL_SEGMENTS: usize = 12;

fn push_cylinder(tris: &mut Vec<[Vec3; 3]>, center: Vec3, radius: f64, height: f64) {
    let zb = center[2] - height * 0.5;
    let zt = center[2] + height * 0.5;
    for k in 0..CYL_SEGMENTS {
        let a0 = std::f64::consts::TAU * k as f64 / CYL_SEGMENTS as f64;
        let a1 = std::f64::consts::TAU * (k + 1) as f64 / CYL_SEGMENTS as f64;
        let p0 = [center[0] + radius * a0.cos(), center[1] + radius * a0.sin()];
        let p1 = [center[0] + radius * a1.cos(), center[1] + radius * a1.sin()];
        let b0 = [p0[0], p0[1], zb];
        let b1 = [p1[0], p1[1], zb];
        let t0 = [p0[0], p0[1], zt];
        let t1 = [p1[0], p1[1], zt];
        tris.push([b0, b1, t1]);
        tris.push([b0, t1, t0]);
        tris.push([[center[0], center[1], zt], t0, t1]);
        tris.push([[center[0], center[1], zb], b1, b0]);
    }
}

fn primitive_triangles(p: &Primitive) -> Vec<[Vec3; 3]> {
    let mut tris = Vec::new();
    match p.kind {
        PrimitiveKind::Box { dims } => push_box(&mut tris, p.pos, dims, p.yaw),
        PrimitiveKind::Cylinder { radius, height } => {
            push_cylinder(&mut tris, p.pos, radius, height)
        }
    }
    tris
}

/// Clip a camera-space triangle against the near plane (z <= -near), fan
/// triangulating the resulting polygon.
fn clip_near(tri: [[f64; 3]; 3], near: f64) -> Vec<[[f64; 3]; 3]> {
    let inside = |v: &[f64; 3]| v[2] <= -near;
    let mut poly: Vec<[f64; 3]> = Vec::with_capacity(4);
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let ain = inside(&a);
        let bin = inside(&b);
        if ain {
            poly.push(a);
        }
        if ain != bin {
            let t = (-near - a[2]) / (b[2] - a[2]);
            poly.push([
                a[0] + t * (b[0] - a[0]),
                a[1] + t * (b[1] - a[1]),
                -near,
            ]);
        }
    }
    let mut out = Vec::new();
    for i in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[i], poly[i + 1]]);
    }
    out
}

struct RasterTarget<'a> {
    img: &'a mut Image,
    zbuf: &'a mut [f64],
    ids: Option<&'a mut [u8]>,
}

fn raster_triangle(
    cam_tri: [[f64; 3]; 3],
    proj: &Mat4,
    color: [f32; 3],
    prim_id: u8,
    target: &mut RasterTarget,
) {
    let w = target.img.width;
    let h = target.img.height;
    // Project to screen space.
    let mut scr = [[0.0f64; 3]; 3];
    for (i, v) in cam_tri.iter().enumerate() {
        let clip = proj.mul_vec4([v[0], v[1], v[2], 1.0]);
        let ndc = [clip[0] / clip[3], clip[1] / clip[3], clip[2] / clip[3]];
        scr[i] = [
            (ndc[0] * 0.5 + 0.5) * w as f64,
            (1.0 - (ndc[1] * 0.5 + 0.5)) * h as f64,
            ndc[2],
        ];
    }
    let area = (scr[1][0] - scr[0][0]) * (scr[2][1] - scr[0][1])
        - (scr[1][1] - scr[0][1]) * (scr[2][0] - scr[0][0]);
    if area.abs() < 1e-12 {
        return;
    }
    let min_x = scr.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let max_x =
        (scr.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(w);
    let min_y = scr.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let max_y =
        (scr.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(h);

    let m10 = proj.at(2, 2);
    let m11 = proj.at(2, 3);
    for py in min_y..max_y {
        for px in min_x..max_x {
            let p = [px as f64 + 0.5, py as f64 + 0.5];
            let w0 = (scr[1][0] - scr[0][0]) * (p[1] - scr[0][1])
                - (scr[1][1] - scr[0][1]) * (p[0] - scr[0][0]);
            let w1 = (scr[2][0] - scr[1][0]) * (p[1] - scr[1][1])
                - (scr[2][1] - scr[1][1]) * (p[0] - scr[1][0]);
            let w2 = (scr[0][0] - scr[2][0]) * (p[1] - scr[2][1])
                - (scr[0][1] - scr[2][1]) * (p[0] - scr[2][0]);
            let neg = w0 < 0.0 || w1 < 0.0 || w2 < 0.0;
            let pos = w0 > 0.0 || w1 > 0.0 || w2 > 0.0;
            if neg && pos {
                continue;
            }
            let (b0, b1, b2) = (w1 / area, w2 / area, w0 / area);
            // NDC depth is planar in screen space, so barycentric
            // interpolation gives the exact z-buffer value.
            let z_ndc = b0 * scr[0][2] + b1 * scr[1][2] + b2 * scr[2][2];
            if !(-1.0..=1.0).contains(&z_ndc) {
                continue;
            }
            let idx = py * w + px;
            if z_ndc < target.zbuf[idx] {
                target.zbuf[idx] = z_ndc;
                let z_cam = -m11 / (z_ndc + m10);
                let depth = -z_cam;
                let falloff = (1.0 / (1.0 + FALLOFF_PER_M * depth)) as f32;
                let quant = |c: f32| ((c * falloff * 255.0).round().clamp(0.0, 255.0)) / 255.0;
                target.img.set_pixel(px, py, [quant(color[0]), quant(color[1]), quant(color[2])]);
                if let Some(ids) = target.ids.as_deref_mut() {
                    ids[idx] = prim_id;
                }
            }
        }
    }
}

fn render_impl(
    primitives: &[Primitive],
    cam: &CameraSpec,
    width: usize,
    height: usize,
    want_ids: bool,
) -> Result<(Image, Option<Vec<u8>>)> {
    cam.validate()?;
    let view = cam.view_matrix()?;
    let proj = cam.projection_matrix()?;
    let mut img = Image::filled(width, height, BACKGROUND_COLOR);
    let mut zbuf = vec![f64::INFINITY; width * height];
    let mut ids = if want_ids { Some(vec![0u8; width * height]) } else { None };

    for (pi, prim) in primitives.iter().enumerate() {
        for tri in primitive_triangles(prim) {
            let cam_tri = [
                {
                    let v = view.transform_point(tri[0]);
                    [v[0], v[1], v[2]]
                },
                {
                    let v = view.transform_point(tri[1]);
                    [v[0], v[1], v[2]]
                },
                {
                    let v = view.transform_point(tri[2]);
                    [v[0], v[1], v[2]]
                },
            ];
            for clipped in clip_near(cam_tri, cam.near) {
                let mut target = RasterTarget {
                    img: &mut img,
                    zbuf: &mut zbuf,
                    ids: ids.as_deref_mut(),
                };
                raster_triangle(clipped, &proj, prim.color, (pi + 1) as u8, &mut target);
            }
        }
    }
    Ok((img, ids))
}

/// Render the scene from `cam`. Identical inputs yield bit-identical buffers.
pub fn render(state: &SceneState, cam: &CameraSpec, width: usize, height: usize) -> Result<Image> {
    let prims = scene_primitives(state);
    Ok(render_impl(&prims, cam, width, height, false)?.0)
}

/// Render an arbitrary primitive list (empty list gives the background).
pub fn render_primitives(
    primitives: &[Primitive],
    cam: &CameraSpec,
    width: usize,
    height: usize,
) -> Result<Image> {
    Ok(render_impl(primitives, cam, width, height, false)?.0)
}

/// Debug render that also returns a per-pixel primitive id map
/// (0 = background, otherwise 1-based index into `scene_primitives`).
pub fn render_with_ids(
    state: &SceneState,
    cam: &CameraSpec,
    width: usize,
    height: usize,
) -> Result<(Image, Vec<u8>)> {
    let prims = scene_primitives(state);
    let (img, ids) = render_impl(&prims, cam, width, height, true)?;
    Ok((img, ids.expect("ids requested")))
}

/// Index of the object body primitive within `scene_primitives` order.
pub fn object_primitive_id() -> u8 {
    2
}
