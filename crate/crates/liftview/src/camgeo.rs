//! Camera extrinsics/intrinsics math, uniform viewpoint sampling and the
//! curriculum that widens randomization ranges during distillation.
//!
//! Conventions, used consistently everywhere: right-handed world coordinates
//! with +z up, the camera looks down its local −z axis, matrices are
//! row-major and multiply column vectors on the right.

use crate::error::{LiftError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Row-major 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [f64; 16]);

impl Mat4 {
    pub fn identity() -> Self {
        let mut m = [0.0; 16];
        m[0] = 1.0;
        m[5] = 1.0;
        m[10] = 1.0;
        m[15] = 1.0;
        Mat4(m)
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.0[row * 4 + col]
    }

    pub fn mul(&self, rhs: &Mat4) -> Mat4 {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += self.at(r, k) * rhs.at(k, c);
                }
                out[r * 4 + c] = s;
            }
        }
        Mat4(out)
    }

    /// Multiply a homogeneous column vector.
    pub fn mul_vec4(&self, v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for r in 0..4 {
            out[r] = self.at(r, 0) * v[0]
                + self.at(r, 1) * v[1]
                + self.at(r, 2) * v[2]
                + self.at(r, 3) * v[3];
        }
        out
    }

    /// Transform a 3D point (w = 1).
    pub fn transform_point(&self, p: Vec3) -> [f64; 4] {
        self.mul_vec4([p[0], p[1], p[2], 1.0])
    }
}

/// Camera pose and intrinsics: everything needed to build the view and
/// projection matrices for one viewpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub eye: Vec3,
    pub target: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub fov_deg: f64,
    /// Width over height.
    pub aspect: f64,
    pub near: f64,
    pub far: f64,
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        let gaze = sub(self.target, self.eye);
        if norm(gaze) < 1e-12 {
            return Err(LiftError::Geometry("eye coincides with target".into()));
        }
        if norm(self.up) < 1e-12 {
            return Err(LiftError::Geometry("zero-length up vector".into()));
        }
        if norm(cross(normalize(gaze), normalize(self.up))) < 1e-9 {
            return Err(LiftError::Geometry("up parallel to gaze".into()));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(LiftError::Geometry(format!(
                "invalid near/far: {}..{}",
                self.near, self.far
            )));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(LiftError::Geometry(format!("fov {} out of (0,180)", self.fov_deg)));
        }
        if self.aspect <= 0.0 {
            return Err(LiftError::Geometry(format!("aspect {} <= 0", self.aspect)));
        }
        Ok(())
    }

    pub fn view_matrix(&self) -> Result<Mat4> {
        look_at(self.eye, self.target, self.up)
    }

    pub fn projection_matrix(&self) -> Result<Mat4> {
        perspective(self.fov_deg, self.aspect, self.near, self.far)
    }
}

/// World-to-camera rigid transform. The camera forward axis points from `eye`
/// toward `target`; camera space looks down −z.
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Mat4> {
    let gaze = sub(target, eye);
    if norm(gaze) < 1e-12 {
        return Err(LiftError::Geometry("eye coincides with target".into()));
    }
    if norm(up) < 1e-12 {
        return Err(LiftError::Geometry("zero-length up vector".into()));
    }
    let f = normalize(gaze);
    let side = cross(f, normalize(up));
    if norm(side) < 1e-9 {
        return Err(LiftError::Geometry("up parallel to gaze".into()));
    }
    let s = normalize(side);
    let u = cross(s, f);
    // Rows of the rotation block are the camera basis vectors expressed in
    // world coordinates; camera z points backwards (−f).
    let mut m = [0.0; 16];
    m[0] = s[0];
    m[1] = s[1];
    m[2] = s[2];
    m[3] = -dot(s, eye);
    m[4] = u[0];
    m[5] = u[1];
    m[6] = u[2];
    m[7] = -dot(u, eye);
    m[8] = -f[0];
    m[9] = -f[1];
    m[10] = -f[2];
    m[11] = dot(f, eye);
    m[15] = 1.0;
    Ok(Mat4(m))
}

/// Standard perspective projection. A point at depth `near` on the frustum
/// edge maps to clip coordinate ±1.
pub fn perspective(fov_deg: f64, aspect: f64, near: f64, far: f64) -> Result<Mat4> {
    if !(fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(LiftError::Geometry(format!("fov {fov_deg} out of (0,180)")));
    }
    if aspect <= 0.0 {
        return Err(LiftError::Geometry(format!("aspect {aspect} <= 0")));
    }
    if !(near > 0.0 && near < far) {
        return Err(LiftError::Geometry(format!("invalid near/far: {near}..{far}")));
    }
    let g = 1.0 / (fov_deg.to_radians() * 0.5).tan();
    let mut m = [0.0; 16];
    m[0] = g / aspect;
    m[5] = g;
    m[10] = (far + near) / (near - far);
    m[11] = 2.0 * far * near / (near - far);
    m[14] = -1.0;
    Ok(Mat4(m))
}

/// Projection of a world point to pixel coordinates, or `None` when the
/// point falls outside the frustum. `depth` is camera-space distance along
/// the gaze axis (positive in front of the camera).
pub fn project_point(
    p: Vec3,
    view: &Mat4,
    proj: &Mat4,
    width: usize,
    height: usize,
) -> Option<(f64, f64, f64)> {
    let cam = view.transform_point(p);
    let clip = proj.mul_vec4(cam);
    if clip[3] <= 0.0 {
        return None;
    }
    let ndc = [clip[0] / clip[3], clip[1] / clip[3], clip[2] / clip[3]];
    if !(-1.0..=1.0).contains(&ndc[2]) {
        return None;
    }
    let px = (ndc[0] * 0.5 + 0.5) * width as f64;
    let py = (1.0 - (ndc[1] * 0.5 + 0.5)) * height as f64;
    if px < 0.0 || px >= width as f64 || py < 0.0 || py >= height as f64 {
        return None;
    }
    Some((px, py, -cam[2]))
}

/// Closed interval with inclusive endpoints, used for every randomized
/// camera parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Self {
        Interval { min, max }
    }

    pub fn fixed(v: f64) -> Self {
        Interval { min: v, max: v }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.min > self.max {
            return Err(LiftError::Geometry(format!(
                "{name}: min {} > max {}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn contains_interval(&self, inner: &Interval) -> bool {
        self.min <= inner.min && inner.max <= self.max
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    /// Move both endpoints `k` widening steps toward `max_range`, keeping a
    /// `(1 - fraction)^k` share of the remaining gap.
    fn widen_toward(&self, outer: &Interval, fraction: f64, steps: u32) -> Interval {
        let keep = (1.0 - fraction).powi(steps as i32);
        Interval {
            min: outer.min + keep * (self.min - outer.min),
            max: outer.max - keep * (outer.max - self.max),
        }
    }
}

/// Randomization bounds for camera pose and intrinsics. The eye is placed on
/// a sphere around a jittered focus point; angles are in degrees, lengths in
/// meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRange {
    pub azimuth_deg: Interval,
    pub elevation_deg: Interval,
    pub radius_m: Interval,
    /// Per-axis additive jitter applied to `focus`.
    pub target_jitter_m: Interval,
    pub fov_deg: Interval,
    pub aspect: Interval,
    /// Base look-at point the jitter is applied to.
    pub focus: Vec3,
    pub near: f64,
    pub far: f64,
}

impl CameraRange {
    pub fn validate(&self) -> Result<()> {
        self.azimuth_deg.validate("azimuth_deg")?;
        self.elevation_deg.validate("elevation_deg")?;
        self.radius_m.validate("radius_m")?;
        self.target_jitter_m.validate("target_jitter_m")?;
        self.fov_deg.validate("fov_deg")?;
        self.aspect.validate("aspect")?;
        if self.elevation_deg.min <= -89.0 || self.elevation_deg.max >= 89.0 {
            return Err(LiftError::Geometry(
                "elevation must stay within (-89, 89) degrees".into(),
            ));
        }
        if self.radius_m.min <= 0.0 {
            return Err(LiftError::Geometry("radius must be positive".into()));
        }
        if !(self.fov_deg.min > 0.0 && self.fov_deg.max < 180.0) {
            return Err(LiftError::Geometry("fov range outside (0,180)".into()));
        }
        if self.aspect.min <= 0.0 {
            return Err(LiftError::Geometry("aspect range must be positive".into()));
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return Err(LiftError::Geometry("invalid near/far".into()));
        }
        Ok(())
    }

    pub fn contains(&self, inner: &CameraRange) -> bool {
        self.azimuth_deg.contains_interval(&inner.azimuth_deg)
            && self.elevation_deg.contains_interval(&inner.elevation_deg)
            && self.radius_m.contains_interval(&inner.radius_m)
            && self.target_jitter_m.contains_interval(&inner.target_jitter_m)
            && self.fov_deg.contains_interval(&inner.fov_deg)
            && self.aspect.contains_interval(&inner.aspect)
    }
}

/// Eye position on the sphere `(azimuth, elevation, radius)` about `center`.
/// Azimuth 0 places the camera on the −y side looking toward +y; positive
/// azimuth rotates toward +x.
pub fn orbit_eye(center: Vec3, azimuth_deg: f64, elevation_deg: f64, radius: f64) -> Vec3 {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    add(
        center,
        [
            radius * el.cos() * az.sin(),
            -radius * el.cos() * az.cos(),
            radius * el.sin(),
        ],
    )
}

/// Draw one camera uniformly from `range`. Each parameter is sampled
/// independently; the draw order is fixed so a seeded generator reproduces
/// the exact sequence.
pub fn sample_camera(range: &CameraRange, rng: &mut ChaCha8Rng) -> CameraSpec {
    let azimuth = range.azimuth_deg.sample(rng);
    let elevation = range.elevation_deg.sample(rng);
    let radius = range.radius_m.sample(rng);
    let jitter = [
        range.target_jitter_m.sample(rng),
        range.target_jitter_m.sample(rng),
        range.target_jitter_m.sample(rng),
    ];
    let fov_deg = range.fov_deg.sample(rng);
    let aspect = range.aspect.sample(rng);
    let target = add(range.focus, jitter);
    CameraSpec {
        eye: orbit_eye(target, azimuth, elevation, radius),
        target,
        up: [0.0, 0.0, 1.0],
        fov_deg,
        aspect,
        near: range.near,
        far: range.far,
    }
}

/// Widening schedule for the student's camera randomization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub start_range: CameraRange,
    pub max_range: CameraRange,
    /// Episodes between widening steps.
    pub widen_every_episodes: u32,
    /// Fraction of the remaining gap consumed per widening step, in (0, 1].
    pub widen_fraction: f64,
}

impl CurriculumSchedule {
    pub fn validate(&self) -> Result<()> {
        self.start_range.validate()?;
        self.max_range.validate()?;
        if !self.max_range.contains(&self.start_range) {
            return Err(LiftError::Geometry(
                "curriculum start_range not inside max_range".into(),
            ));
        }
        if self.widen_every_episodes == 0 {
            return Err(LiftError::Geometry("widen_every_episodes must be > 0".into()));
        }
        if !(self.widen_fraction > 0.0 && self.widen_fraction <= 1.0) {
            return Err(LiftError::Geometry("widen_fraction must be in (0,1]".into()));
        }
        Ok(())
    }
}

/// Camera range in effect at `episode_index`: `start_range` for the first
/// `widen_every_episodes` episodes, then every endpoint moves toward
/// `max_range` by `widen_fraction` of the remaining gap per boundary.
pub fn curriculum_range(schedule: &CurriculumSchedule, episode_index: u32) -> CameraRange {
    let steps = episode_index / schedule.widen_every_episodes;
    let s = &schedule.start_range;
    let m = &schedule.max_range;
    let f = schedule.widen_fraction;
    CameraRange {
        azimuth_deg: s.azimuth_deg.widen_toward(&m.azimuth_deg, f, steps),
        elevation_deg: s.elevation_deg.widen_toward(&m.elevation_deg, f, steps),
        radius_m: s.radius_m.widen_toward(&m.radius_m, f, steps),
        target_jitter_m: s.target_jitter_m.widen_toward(&m.target_jitter_m, f, steps),
        fov_deg: s.fov_deg.widen_toward(&m.fov_deg, f, steps),
        aspect: s.aspect.widen_toward(&m.aspect, f, steps),
        focus: m.focus,
        near: m.near,
        far: m.far,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_chacha::rand_core::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn test_range() -> CameraRange {
        CameraRange {
            azimuth_deg: Interval::new(-60.0, 60.0),
            elevation_deg: Interval::new(15.0, 60.0),
            radius_m: Interval::new(0.8, 1.6),
            target_jitter_m: Interval::new(-0.03, 0.03),
            fov_deg: Interval::new(40.0, 70.0),
            aspect: Interval::new(1.0, 1.5),
            focus: [0.0, 0.0, 0.02],
            near: 0.05,
            far: 5.0,
        }
    }

    #[test]
    fn look_at_canonical_frame_is_identity() {
        let m = look_at([0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]).unwrap();
        let expect = Mat4::identity();
        for i in 0..16 {
            assert_abs_diff_eq!(m.0[i], expect.0[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn look_at_pure_translation_along_gaze() {
        let m = look_at([0.0, 0.0, 2.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        let p = m.transform_point([0.0, 0.0, 0.0]);
        // World origin sits 2 m in front of the camera (camera-space z = -2).
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], -2.0, epsilon = 1e-12);
    }

    #[test]
    fn look_at_target_lands_on_optical_axis() {
        // Oracle: transform the target and assert it is on-axis with negative
        // camera-space depth.
        let eye = [1.0, 1.0, 1.0];
        let target = [0.0, 0.0, 0.0];
        let m = look_at(eye, target, [0.0, 1.0, 0.0]).unwrap();
        let p = m.transform_point(target);
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[2], -norm(sub(target, eye)), epsilon = 1e-12);
    }

    #[test]
    fn look_at_rejects_degenerate_input() {
        assert!(look_at([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.0, 1.0, 0.0]).is_err());
        assert!(look_at([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 5.0]).is_err());
        assert!(look_at([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn perspective_frustum_edge_maps_to_one() {
        let near = 0.1;
        let m = perspective(90.0, 1.0, near, 10.0).unwrap();
        let clip = m.mul_vec4([near, 0.0, -near, 1.0]);
        assert_abs_diff_eq!(clip[0] / clip[3], 1.0, epsilon = 1e-12);
        let clip_y = m.mul_vec4([0.0, -near, -near, 1.0]);
        assert_abs_diff_eq!(clip_y[1] / clip_y[3], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn perspective_axial_points_map_to_center() {
        let m = perspective(37.0, 1.7, 0.2, 8.0).unwrap();
        for d in [0.3, 1.0, 7.9] {
            let clip = m.mul_vec4([0.0, 0.0, -d, 1.0]);
            assert_abs_diff_eq!(clip[0] / clip[3], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(clip[1] / clip[3], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn perspective_entries_match_closed_form() {
        // Oracle: re-derive every entry from tan(fov/2).
        let (fov, aspect, near, far) = (60.0f64, 4.0 / 3.0, 0.1, 10.0);
        let g = 1.0 / (fov.to_radians() / 2.0).tan();
        let m = perspective(fov, aspect, near, far).unwrap();
        let mut expect = [0.0; 16];
        expect[0] = g / aspect;
        expect[5] = g;
        expect[10] = (far + near) / (near - far);
        expect[11] = 2.0 * far * near / (near - far);
        expect[14] = -1.0;
        for i in 0..16 {
            assert_abs_diff_eq!(m.0[i], expect[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn perspective_rejects_bad_intrinsics() {
        assert!(perspective(0.0, 1.0, 0.1, 10.0).is_err());
        assert!(perspective(180.0, 1.0, 0.1, 10.0).is_err());
        assert!(perspective(60.0, 1.0, 10.0, 0.1).is_err());
        assert!(perspective(60.0, -1.0, 0.1, 10.0).is_err());
    }

    #[test]
    fn project_point_axial_hits_image_center() {
        let view = look_at([0.0, -1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
        let proj = perspective(60.0, 1.0, 0.05, 5.0).unwrap();
        let (px, py, depth) = project_point([0.0, 0.0, 0.0], &view, &proj, 84, 84).unwrap();
        assert_abs_diff_eq!(px, 42.0, epsilon = 1e-9);
        assert_abs_diff_eq!(py, 42.0, epsilon = 1e-9);
        assert_abs_diff_eq!(depth, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn project_point_behind_camera_is_marked() {
        let view = look_at([0.0, -1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
        let proj = perspective(60.0, 1.0, 0.05, 5.0).unwrap();
        assert!(project_point([0.0, -2.0, 0.0], &view, &proj, 84, 84).is_none());
    }

    #[test]
    fn project_point_matches_explicit_composition() {
        // Oracle: compose the two matrix multiplies and the viewport transform
        // by hand for a generic point.
        let view = look_at([0.7, -1.1, 0.9], [0.05, 0.1, 0.0], [0.0, 0.0, 1.0]).unwrap();
        let proj = perspective(55.0, 1.25, 0.05, 5.0).unwrap();
        let p = [0.12, 0.04, 0.03];
        let (px, py, depth) = project_point(p, &view, &proj, 84, 84).unwrap();

        let cam = view.transform_point(p);
        let clip = proj.mul_vec4(cam);
        let ex = (clip[0] / clip[3] * 0.5 + 0.5) * 84.0;
        let ey = (1.0 - (clip[1] / clip[3] * 0.5 + 0.5)) * 84.0;
        assert_abs_diff_eq!(px, ex, epsilon = 1e-12);
        assert_abs_diff_eq!(py, ey, epsilon = 1e-12);
        assert_abs_diff_eq!(depth, -cam[2], epsilon = 1e-12);
    }

    #[test]
    fn sample_camera_degenerate_range_is_constant() {
        let mut r = test_range();
        r.azimuth_deg = Interval::fixed(10.0);
        r.elevation_deg = Interval::fixed(30.0);
        r.radius_m = Interval::fixed(1.0);
        r.target_jitter_m = Interval::fixed(0.0);
        r.fov_deg = Interval::fixed(55.0);
        r.aspect = Interval::fixed(1.0);
        let mut g = rng(3);
        let first = sample_camera(&r, &mut g);
        for _ in 0..10 {
            assert_eq!(sample_camera(&r, &mut g), first);
        }
    }

    #[test]
    fn sample_camera_same_seed_same_sequence() {
        let r = test_range();
        let mut g1 = rng(11);
        let mut g2 = rng(11);
        for _ in 0..32 {
            assert_eq!(sample_camera(&r, &mut g1), sample_camera(&r, &mut g2));
        }
    }

    #[test]
    fn sample_camera_azimuth_mean_and_bounds() {
        // CLT: mean of U(0,90) over 10^4 draws is 45 with sd 90/sqrt(12e4) ~ 0.26,
        // so +/-3 degrees is a > 10-sigma envelope.
        let mut r = test_range();
        r.azimuth_deg = Interval::new(0.0, 90.0);
        let mut g = rng(5);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let cam = sample_camera(&r, &mut g);
            // Recover azimuth from the eye offset.
            let off = sub(cam.eye, cam.target);
            let az = off[0].atan2(-off[1]).to_degrees();
            assert!((-1e-9..=90.0 + 1e-9).contains(&az), "azimuth {az} out of range");
            sum += az;
        }
        let mean = sum / n as f64;
        assert!((mean - 45.0).abs() < 3.0, "mean azimuth {mean}");
    }

    #[test]
    fn curriculum_start_and_full_step() {
        let start = {
            let mut r = test_range();
            r.azimuth_deg = Interval::new(0.0, 10.0);
            r
        };
        let max = {
            let mut r = test_range();
            r.azimuth_deg = Interval::new(0.0, 90.0);
            r
        };
        let sched = CurriculumSchedule {
            start_range: start,
            max_range: max,
            widen_every_episodes: 50,
            widen_fraction: 1.0,
        };
        sched.validate().unwrap();
        for ep in [0, 1, 49] {
            assert_eq!(curriculum_range(&sched, ep).azimuth_deg, Interval::new(0.0, 10.0));
        }
        assert_eq!(curriculum_range(&sched, 50).azimuth_deg, Interval::new(0.0, 90.0));
    }

    #[test]
    fn curriculum_half_fraction_iterates_update_rule() {
        // Hand-iterated: [0,10] -> [0,50] -> [0,70] with fraction 0.5.
        let start = {
            let mut r = test_range();
            r.azimuth_deg = Interval::new(0.0, 10.0);
            r
        };
        let max = {
            let mut r = test_range();
            r.azimuth_deg = Interval::new(0.0, 90.0);
            r
        };
        let sched = CurriculumSchedule {
            start_range: start,
            max_range: max,
            widen_every_episodes: 50,
            widen_fraction: 0.5,
        };
        let at50 = curriculum_range(&sched, 50).azimuth_deg;
        assert_abs_diff_eq!(at50.min, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at50.max, 50.0, epsilon = 1e-12);
        let at100 = curriculum_range(&sched, 100).azimuth_deg;
        assert_abs_diff_eq!(at100.max, 70.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn look_at_rotation_block_is_orthonormal(
            ex in -3.0f64..3.0, ey in -3.0f64..3.0, ez in 0.1f64..3.0,
            tx in -0.5f64..0.5, ty in -0.5f64..0.5,
        ) {
            let m = look_at([ex, ey, ez], [tx, ty, 0.0], [0.0, 0.0, 1.0]);
            prop_assume!(m.is_ok());
            let m = m.unwrap();
            // R * R^T == I within 1e-9 in the max norm.
            for r in 0..3 {
                for c in 0..3 {
                    let mut s = 0.0;
                    for k in 0..3 {
                        s += m.at(r, k) * m.at(c, k);
                    }
                    let expect = if r == c { 1.0 } else { 0.0 };
                    prop_assert!((s - expect).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn projection_invariant_to_up_rescaling(s in 0.01f64..100.0) {
            let eye = [0.9, -1.2, 0.8];
            let target = [0.0, 0.0, 0.0];
            let proj = perspective(60.0, 1.2, 0.05, 5.0).unwrap();
            let v1 = look_at(eye, target, [0.0, 0.0, 1.0]).unwrap();
            let v2 = look_at(eye, target, [0.0, 0.0, s]).unwrap();
            let p = [0.1, 0.05, 0.02];
            let a = project_point(p, &v1, &proj, 84, 84).unwrap();
            let b = project_point(p, &v2, &proj, 84, 84).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-6);
            prop_assert!((a.1 - b.1).abs() < 1e-6);
        }

        #[test]
        fn curriculum_is_monotone_widening(
            a in 0u32..400, b in 0u32..400, frac in 0.05f64..1.0,
        ) {
            prop_assume!(a < b);
            let start = {
                let mut r = test_range();
                r.azimuth_deg = Interval::new(-5.0, 5.0);
                r.elevation_deg = Interval::new(25.0, 35.0);
                r
            };
            let sched = CurriculumSchedule {
                start_range: start,
                max_range: test_range(),
                widen_every_episodes: 50,
                widen_fraction: frac,
            };
            let ra = curriculum_range(&sched, a);
            let rb = curriculum_range(&sched, b);
            prop_assert!(rb.azimuth_deg.contains_interval(&ra.azimuth_deg));
            prop_assert!(rb.elevation_deg.contains_interval(&ra.elevation_deg));
            prop_assert!(rb.radius_m.contains_interval(&ra.radius_m));
            prop_assert!(rb.fov_deg.contains_interval(&ra.fov_deg));
            prop_assert!(sched.max_range.contains(&rb));
        }

        #[test]
        fn sampled_cameras_satisfy_spec_invariants(seed in 0u64..500) {
            let r = test_range();
            let mut g = rng(seed);
            for _ in 0..8 {
                let cam = sample_camera(&r, &mut g);
                prop_assert!(cam.validate().is_ok());
            }
        }
    }
}
