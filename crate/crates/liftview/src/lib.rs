//! Desk-scale visual policy distillation: a multi-view soft actor-critic
//! teacher for a grasp-and-lift task is distilled into a single-view student
//! that stays robust under randomized camera pose and intrinsics.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`camgeo`] — camera extrinsics/intrinsics math, viewpoint sampling and
//!   the curriculum that widens randomization ranges,
//! - [`liftsim`] — the kinematic grasp-and-lift environment and its scripted
//!   expert,
//! - [`raster`] — the deterministic software renderer that turns scene states
//!   into 84x84 RGB observations,
//! - [`augment`] — pixel-shift and color-jitter augmentation,
//! - [`nnet`] — the convolutional/attention encoder, actor and twin critics
//!   with hand-rolled gradients and a portable parameter archive,
//! - [`sac`] — soft actor-critic teacher training with a demo-seeded replay
//!   buffer,
//! - [`distill`] — teacher-to-student knowledge distillation with per-episode
//!   camera randomization,
//! - [`harness`] — run configuration, CLI stage entry points, evaluation
//!   protocol, metrics CSV and plots.
//!
//! Batch work is data-parallel via rayon when the `parallel` feature (on by
//! default) is enabled; reductions use a fixed chunk order so results are
//! bit-identical with and without it.

pub mod augment;
pub mod camgeo;
pub mod distill;
pub mod error;
pub mod harness;
pub mod liftsim;
pub mod nnet;
pub mod parallel;
pub mod raster;
pub mod rig;
pub mod rng;
pub mod sac;

pub use error::LiftError;
