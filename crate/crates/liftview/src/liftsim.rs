//! Desk-scale kinematic grasp-and-lift environment.
//!
//! The robot is a gantry-style gripper: two parallel fingers that translate
//! in x/y/z, rotate about the vertical axis and open/close. Grasping is an
//! attachment model: when the closing gripper is near the object's graspable
//! point (and, for the mug, tangentially aligned with the rim), the object
//! becomes rigidly attached. Success means holding the object at or above the
//! lift height; once latched, every remaining step of the fixed horizon pays
//! the success reward.
//!
//! All transitions are pure functions of `(state, action, config)`.

use crate::camgeo::Interval;
use crate::error::{LiftError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Table half extents; the table surface is the z = 0 plane.
pub const TABLE_HALF_X: f64 = 0.30;
pub const TABLE_HALF_Y: f64 = 0.22;
/// Gripper workspace box.
pub const WORK_Z_MIN: f64 = 0.012;
pub const WORK_Z_MAX: f64 = 0.35;

/// Cube half edge.
pub const CUBE_HALF: f64 = 0.025;
/// Mug body (cylinder) radius and height.
pub const MUG_RADIUS: f64 = 0.025;
pub const MUG_HEIGHT: f64 = 0.055;
/// Handle block dimensions (radial length, width, height) and its center
/// height above the table.
pub const HANDLE_LEN: f64 = 0.034;
pub const HANDLE_WIDTH: f64 = 0.013;
pub const HANDLE_HEIGHT: f64 = 0.018;
pub const HANDLE_CENTER_Z: f64 = 0.020;
/// Rim grasp point: offset from the axis, opposite the handle, near the top.
pub const RIM_OFFSET: f64 = MUG_RADIUS;
pub const RIM_GRASP_Z: f64 = 0.050;

/// Gripper finger block dimensions and the crossbar above them.
pub const FINGER_SIZE: [f64; 3] = [0.012, 0.012, 0.050];
pub const BAR_SIZE: [f64; 3] = [0.075, 0.016, 0.016];
/// Finger separation from the gripper axis at open = 1.0 / open = 0.0.
pub const FINGER_HALF_GAP_OPEN: f64 = 0.034;
pub const FINGER_HALF_GAP_CLOSED: f64 = 0.008;

/// Gripper must be at least this open on the step before a grasp can latch.
const MIN_OPEN_TO_GRASP: f64 = 0.5;
/// Opening rate applied when the grip command is non-positive.
const OPEN_BIAS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Cube,
    Mug,
}

impl ObjectKind {
    /// Object-center rest height when sitting on the table.
    pub fn rest_z(self) -> f64 {
        match self {
            ObjectKind::Cube => CUBE_HALF,
            ObjectKind::Mug => MUG_HEIGHT * 0.5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Cube => "cube",
            ObjectKind::Mug => "mug",
        }
    }
}

/// 5-dim continuous action; every component is clamped to [-1, 1] before
/// use. Positive `grip` closes the gripper, non-positive opens it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dyaw: f64,
    pub grip: f64,
}

impl Action {
    pub const DIM: usize = 5;

    pub fn zero() -> Self {
        Action { dx: 0.0, dy: 0.0, dz: 0.0, dyaw: 0.0, grip: 0.0 }
    }

    pub fn clamped(&self) -> Self {
        Action {
            dx: self.dx.clamp(-1.0, 1.0),
            dy: self.dy.clamp(-1.0, 1.0),
            dz: self.dz.clamp(-1.0, 1.0),
            dyaw: self.dyaw.clamp(-1.0, 1.0),
            grip: self.grip.clamp(-1.0, 1.0),
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.dx, self.dy, self.dz, self.dyaw, self.grip]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Action { dx: a[0], dy: a[1], dz: a[2], dyaw: a[3], grip: a[4] }
    }
}

/// Axis-aligned spawn box on the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnRegion {
    pub x: Interval,
    pub y: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    /// Fixed episode horizon T.
    pub episode_len: u32,
    /// Object center height that counts as lifted.
    pub lift_height: f64,
    pub spawn_region: SpawnRegion,
    /// Grasp attachment distance from the graspable point.
    pub grasp_radius: f64,
    /// Tangential alignment tolerance for the mug rim, radians (pi-periodic).
    pub mug_yaw_tol: f64,
    /// Reward per step while success is latched.
    pub success_reward: f64,
    /// Meters per step at action magnitude 1.
    pub pos_scale: f64,
    /// Radians per step at action magnitude 1.
    pub yaw_scale: f64,
    /// Gripper open/close rate per step at grip magnitude 1.
    pub grip_rate: f64,
    /// Standard deviation of the scripted expert's action noise.
    pub expert_noise: f64,
    /// Gripper home pose.
    pub home_pos: [f64; 3],
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            episode_len: 100,
            lift_height: 0.15,
            spawn_region: SpawnRegion {
                x: Interval::new(-0.12, 0.12),
                y: Interval::new(-0.04, 0.14),
            },
            grasp_radius: 0.030,
            mug_yaw_tol: 0.50,
            success_reward: 100.0,
            pos_scale: 0.02,
            yaw_scale: 0.10,
            grip_rate: 0.5,
            expert_noise: 0.05,
            home_pos: [0.0, 0.20, 0.10],
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episode_len == 0 {
            return Err(LiftError::Config("episode_len must be > 0".into()));
        }
        if self.lift_height <= 0.0 {
            return Err(LiftError::Config("lift_height must be > 0".into()));
        }
        let sr = &self.spawn_region;
        sr.x.validate("spawn.x").map_err(|e| LiftError::Config(e.to_string()))?;
        sr.y.validate("spawn.y").map_err(|e| LiftError::Config(e.to_string()))?;
        if sr.x.min < -TABLE_HALF_X
            || sr.x.max > TABLE_HALF_X
            || sr.y.min < -TABLE_HALF_Y
            || sr.y.max > TABLE_HALF_Y
        {
            return Err(LiftError::Config("spawn_region outside the table".into()));
        }
        if self.grasp_radius <= 0.0 || self.pos_scale <= 0.0 || self.yaw_scale <= 0.0 {
            return Err(LiftError::Config("scales and grasp_radius must be > 0".into()));
        }
        Ok(())
    }
}

/// Full environment state; a plain value, cheap to copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub object_kind: ObjectKind,
    pub object_pos: [f64; 3],
    pub object_yaw: f64,
    pub gripper_pos: [f64; 3],
    pub gripper_yaw: f64,
    pub gripper_open: f64,
    pub grasped: bool,
    pub step_index: u32,
    pub success_latched: bool,
    /// Object offset in the gripper frame while grasped.
    grasp_offset: [f64; 3],
    grasp_yaw_offset: f64,
}

pub fn wrap_pi(a: f64) -> f64 {
    let mut x = (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI);
    if x < 0.0 {
        x += 2.0 * std::f64::consts::PI;
    }
    x - std::f64::consts::PI
}

/// Wrap to [-pi/2, pi/2): angular distance for pi-periodic alignment.
fn wrap_half_pi(a: f64) -> f64 {
    let mut x = wrap_pi(a);
    if x >= std::f64::consts::FRAC_PI_2 {
        x -= std::f64::consts::PI;
    } else if x < -std::f64::consts::FRAC_PI_2 {
        x += std::f64::consts::PI;
    }
    x
}

/// Fresh episode: object spawned uniformly in the region (mug yaw uniform
/// over [0, 2pi)), gripper at home, fully open.
pub fn reset(config: &TaskConfig, object_kind: ObjectKind, rng: &mut ChaCha8Rng) -> SceneState {
    let x = config.spawn_region.x.sample(rng);
    let y = config.spawn_region.y.sample(rng);
    let yaw = match object_kind {
        ObjectKind::Cube => 0.0,
        ObjectKind::Mug => rng.random_range(0.0..std::f64::consts::TAU),
    };
    SceneState {
        object_kind,
        object_pos: [x, y, object_kind.rest_z()],
        object_yaw: yaw,
        gripper_pos: config.home_pos,
        gripper_yaw: 0.0,
        gripper_open: 1.0,
        grasped: false,
        step_index: 0,
        success_latched: false,
        grasp_offset: [0.0; 3],
        grasp_yaw_offset: 0.0,
    }
}

/// Point the gripper must reach to grasp: the cube center, or a point on the
/// mug rim diametrically opposite the handle.
pub fn graspable_point(state: &SceneState) -> [f64; 3] {
    match state.object_kind {
        ObjectKind::Cube => state.object_pos,
        ObjectKind::Mug => [
            state.object_pos[0] - RIM_OFFSET * state.object_yaw.cos(),
            state.object_pos[1] - RIM_OFFSET * state.object_yaw.sin(),
            state.object_pos[2] - MUG_HEIGHT * 0.5 + RIM_GRASP_Z,
        ],
    }
}

/// Gripper yaw (pi-periodic) required to straddle the mug rim at the
/// graspable point: fingers along the radial direction.
pub fn required_grasp_yaw(state: &SceneState) -> Option<f64> {
    match state.object_kind {
        ObjectKind::Cube => None,
        ObjectKind::Mug => Some(wrap_half_pi(state.object_yaw)),
    }
}

fn grasp_alignment_ok(state: &SceneState, gripper_yaw: f64, config: &TaskConfig) -> bool {
    match required_grasp_yaw(state) {
        None => true,
        Some(req) => wrap_half_pi(gripper_yaw - req).abs() <= config.mug_yaw_tol,
    }
}

/// One environment step. Fixed horizon: `done` only at step T; stepping a
/// finished episode is a contract violation.
pub fn step(
    state: &SceneState,
    action: &Action,
    config: &TaskConfig,
) -> Result<(SceneState, f64, bool)> {
    if state.step_index >= config.episode_len {
        return Err(LiftError::Contract(format!(
            "step called at index {} with horizon {}",
            state.step_index, config.episode_len
        )));
    }
    let a = action.clamped();
    let mut next = *state;

    // Integrate gripper pose.
    next.gripper_pos[0] =
        (state.gripper_pos[0] + a.dx * config.pos_scale).clamp(-TABLE_HALF_X, TABLE_HALF_X);
    next.gripper_pos[1] =
        (state.gripper_pos[1] + a.dy * config.pos_scale).clamp(-TABLE_HALF_Y, TABLE_HALF_Y);
    next.gripper_pos[2] =
        (state.gripper_pos[2] + a.dz * config.pos_scale).clamp(WORK_Z_MIN, WORK_Z_MAX);
    next.gripper_yaw = wrap_pi(state.gripper_yaw + a.dyaw * config.yaw_scale);

    let open_before = state.gripper_open;
    next.gripper_open = if a.grip > 0.0 {
        (open_before - config.grip_rate * a.grip).clamp(0.0, 1.0)
    } else {
        (open_before + config.grip_rate * (-a.grip).max(OPEN_BIAS)).clamp(0.0, 1.0)
    };

    if a.grip > 0.0 {
        if !state.grasped && open_before >= MIN_OPEN_TO_GRASP {
            let gp = graspable_point(state);
            let d = [
                next.gripper_pos[0] - gp[0],
                next.gripper_pos[1] - gp[1],
                next.gripper_pos[2] - gp[2],
            ];
            let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if dist <= config.grasp_radius && grasp_alignment_ok(state, next.gripper_yaw, config) {
                next.grasped = true;
                // Record the object offset in the gripper frame.
                let rel = [
                    state.object_pos[0] - next.gripper_pos[0],
                    state.object_pos[1] - next.gripper_pos[1],
                    state.object_pos[2] - next.gripper_pos[2],
                ];
                let (s, c) = (-next.gripper_yaw).sin_cos();
                next.grasp_offset = [c * rel[0] - s * rel[1], s * rel[0] + c * rel[1], rel[2]];
                next.grasp_yaw_offset = state.object_yaw - next.gripper_yaw;
            }
        }
    } else if state.grasped {
        // Release: the object falls straight down onto the table.
        next.grasped = false;
        next.object_pos[2] = state.object_kind.rest_z();
    }

    if next.grasped {
        // The object follows the gripper rigidly; the gripper cannot push it
        // below its rest height.
        let min_gz = WORK_Z_MIN.max(state.object_kind.rest_z() - next.grasp_offset[2]);
        next.gripper_pos[2] = next.gripper_pos[2].max(min_gz);
        let (s, c) = next.gripper_yaw.sin_cos();
        next.object_pos = [
            next.gripper_pos[0] + c * next.grasp_offset[0] - s * next.grasp_offset[1],
            next.gripper_pos[1] + s * next.grasp_offset[0] + c * next.grasp_offset[1],
            next.gripper_pos[2] + next.grasp_offset[2],
        ];
        next.object_yaw = wrap_pi(next.gripper_yaw + next.grasp_yaw_offset);
    }

    if next.grasped && next.object_pos[2] >= config.lift_height {
        next.success_latched = true;
    }

    let reward = if next.success_latched { config.success_reward } else { 0.0 };
    next.step_index = state.step_index + 1;
    let done = next.step_index == config.episode_len;
    Ok((next, reward, done))
}

/// Deterministic injective map from the gripper pose to a 7-vector standing
/// in for arm joint angles.
pub fn pseudo_joints(state: &SceneState) -> [f64; 7] {
    let [x, y, z] = state.gripper_pos;
    let q1 = x / TABLE_HALF_X;
    let q2 = y / TABLE_HALF_Y;
    let q3 = z / WORK_Z_MAX;
    let q4 = state.gripper_yaw.cos();
    let q5 = state.gripper_yaw.sin();
    let q6 = state.gripper_open;
    let q7 = 0.4 * q1 + 0.3 * q3 - 0.2 * q6;
    [q1, q2, q3, q4, q5, q6, q7]
}

/// Phase-based waypoint controller standing in for human demonstrations:
/// align above the graspable point, descend, close, lift. Optional seeded
/// noise diversifies the demos without breaking them.
pub fn scripted_expert(state: &SceneState, config: &TaskConfig, rng: &mut ChaCha8Rng) -> Action {
    let gp = graspable_point(state);
    let hover_z = gp[2] + 0.08;
    let mut act = Action::zero();

    let servo =
        |target: f64, current: f64| -> f64 { ((target - current) / config.pos_scale).clamp(-1.0, 1.0) };

    if state.success_latched || (state.grasped && state.object_pos[2] >= config.lift_height) {
        // Hold position, keep gripping.
        act.grip = 1.0;
    } else if state.grasped {
        act.dz = 1.0;
        act.grip = 1.0;
    } else {
        let dx = gp[0] - state.gripper_pos[0];
        let dy = gp[1] - state.gripper_pos[1];
        let horiz = (dx * dx + dy * dy).sqrt();
        let yaw_err = match required_grasp_yaw(state) {
            Some(req) => wrap_half_pi(req - state.gripper_yaw),
            None => 0.0,
        };
        act.dx = servo(gp[0], state.gripper_pos[0]);
        act.dy = servo(gp[1], state.gripper_pos[1]);
        act.dyaw = (yaw_err / config.yaw_scale).clamp(-1.0, 1.0);
        let aligned =
            horiz <= 0.5 * config.grasp_radius && yaw_err.abs() <= 0.5 * config.mug_yaw_tol;
        if aligned {
            act.dz = servo(gp[2], state.gripper_pos[2]);
        } else {
            act.dz = servo(hover_z, state.gripper_pos[2]);
        }
        let d = [
            state.gripper_pos[0] - gp[0],
            state.gripper_pos[1] - gp[1],
            state.gripper_pos[2] - gp[2],
        ];
        let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if dist <= 0.8 * config.grasp_radius && yaw_err.abs() <= 0.5 * config.mug_yaw_tol {
            act.grip = 1.0;
            act.dx = 0.0;
            act.dy = 0.0;
            act.dz = 0.0;
        } else {
            act.grip = -1.0;
        }
    }

    if config.expert_noise > 0.0 {
        let mut noisy = act.to_array();
        for v in noisy.iter_mut() {
            // Box-Muller keeps us off rand_distr for one sampler.
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let n = (-2.0 * u1.ln()).sqrt() * u2.cos();
            *v = (*v + config.expert_noise * n).clamp(-1.0, 1.0);
        }
        // Keep the grip decision crisp; noise on the grasp trigger breaks demos.
        noisy[4] = act.grip;
        act = Action::from_array(noisy);
    }
    act
}
