//! Soft actor-critic training of the multi-view teacher: demo-seeded replay
//! buffer, twin critics with target networks, automatic temperature tuning.

pub mod adam;
pub mod batch;
pub mod buffer;
pub mod losses;
pub mod trainer;

pub use adam::{Adam, ScalarAdam};
pub use batch::{augmented_input, make_head_input, prepare_batch, BatchItem};
pub use buffer::{images_to_u8, load_transitions, save_transitions, ReplayBuffer, Transition};
pub use losses::{
    actor_loss, critic_loss, policy_mean_action, temperature_loss, QSource, TwinCritics,
};
pub use trainer::{
    critic_loss_with_features, env_action, policy_action, scripted_demo_transitions,
    scripted_demos, train_teacher, DemoSet, EpisodeRecord, FrontCameraMode, PolicyContext,
    SacConfig, SacLearner, TeacherRun, UpdateStats,
};
