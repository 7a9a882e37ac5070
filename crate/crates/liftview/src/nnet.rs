//! Differentiable computation: encoder, policy heads, parameter archive and
//! gradient verification. All gradients are hand-derived and checked against
//! finite differences.

pub mod arch;
pub mod encoder;
pub mod gradcheck;
pub mod heads;
pub mod ops;
pub mod params;
pub mod scalar;

pub use arch::{ArchConfig, Layout, ParamGroup, ACTION_DIM, STATE_DIM};
pub use encoder::{
    build_input, conv_dims, encode, encoder_backward, encoder_forward, EncScratch, EncoderTape,
};
pub use gradcheck::{grad_check, grad_check_groups, GradCheckReport, FD_STEP, MAX_PROBES};
pub use heads::{
    action_grads, actor_backward, actor_forward, critic_backward, critic_forward,
    deterministic_action, log_prob_grads, sample_eps, squashed_sample, ActorTape, CriticTape,
    SquashedSample, LOG_STD_MAX, LOG_STD_MIN,
};
pub use params::{expect_arch, load_params, save_params, soft_update, Params};
pub use scalar::Scalar;
