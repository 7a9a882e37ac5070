//! Teacher training: soft actor-critic over a demo-seeded replay buffer,
//! alternating environment rollouts with gradient updates.

use super::adam::{Adam, ScalarAdam};
use super::batch::{make_head_input, prepare_batch};
use super::buffer::{images_to_u8, ReplayBuffer, Transition};
use super::losses::{actor_loss, critic_loss, temperature_loss, TwinCritics};
use crate::augment::AugmentConfig;
use crate::camgeo::{sample_camera, CameraRange};
use crate::error::{LiftError, Result};
use crate::liftsim::{pseudo_joints, reset, step, Action, ObjectKind, SceneState, TaskConfig};
use crate::nnet::arch::ACTION_DIM;
use crate::nnet::{
    actor_forward, deterministic_action, encoder_forward, sample_eps, soft_update, squashed_sample,
    ActorTape, ArchConfig, EncScratch, EncoderTape, Layout, ParamGroup, Params,
};
use crate::raster::Image;
use crate::rig::CameraRig;
use crate::rng::{child_rng, Fnv1a};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    pub discount: f64,
    pub tau: f32,
    pub batch_size: usize,
    pub actor_lr: f32,
    pub critic_lr: f32,
    pub alpha_lr: f64,
    pub init_alpha: f64,
    /// Target policy entropy; the SAC default is minus the action dimension.
    pub target_entropy: f64,
    pub updates_per_step: u32,
    /// Rewards are multiplied by this factor inside the critic target only;
    /// stored transitions and metrics keep the raw env reward.
    pub reward_scale: f32,
    pub buffer_capacity: usize,
    /// Environment-step budget (demo transitions not counted).
    pub train_env_steps: u64,
    /// Gradient updates on the demo-seeded buffer before the first rollout.
    pub pretrain_updates: u32,
    /// Write a resume checkpoint every N episodes (0 disables).
    pub checkpoint_every_episodes: u32,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            discount: 0.99,
            tau: 0.005,
            batch_size: 128,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            alpha_lr: 3e-4,
            init_alpha: 0.1,
            target_entropy: -(ACTION_DIM as f64),
            updates_per_step: 1,
            reward_scale: 0.01,
            buffer_capacity: 50_000,
            train_env_steps: 150_000,
            pretrain_updates: 0,
            checkpoint_every_episodes: 0,
        }
    }
}

/// Per-episode training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u32,
    pub env_steps: u64,
    pub ret: f64,
    pub success: bool,
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha: f64,
}

/// Front-camera handling during rollouts.
#[derive(Debug, Clone)]
pub enum FrontCameraMode {
    Fixed,
    /// Resample the front camera from this range at every episode start
    /// (the no-distillation randomization control).
    RandomizePerEpisode(CameraRange),
}

/// Online networks, targets and optimizer state.
pub struct SacLearner {
    pub params: Params,
    pub target: Params,
    pub log_alpha: f64,
    pub config: SacConfig,
    adam_critic: Adam,
    adam_actor: Adam,
    adam_alpha: ScalarAdam,
}

impl SacLearner {
    pub fn new(arch: ArchConfig, config: SacConfig, init_rng: &mut ChaCha8Rng) -> Self {
        let layout = Layout::new(arch);
        let params = Params::init(layout.clone(), init_rng);
        let target = params.clone();
        let adam_critic = Adam::new(&params, &[ParamGroup::Encoder, ParamGroup::Critic], config.critic_lr);
        let adam_actor = Adam::new(&params, &[ParamGroup::Actor], config.actor_lr);
        SacLearner {
            params,
            target,
            log_alpha: config.init_alpha.ln(),
            config,
            adam_critic,
            adam_actor,
            adam_alpha: ScalarAdam::default(),
        }
    }

    /// One gradient update on a sampled batch: critic (with encoder), actor,
    /// temperature, then the soft target update.
    pub fn update(
        &mut self,
        buffer: &ReplayBuffer,
        aug: &AugmentConfig,
        buffer_rng: &mut ChaCha8Rng,
        update_rng: &mut ChaCha8Rng,
    ) -> Result<UpdateStats> {
        let arch = *self.params.arch();
        let indices = buffer.sample_indices(self.config.batch_size, buffer_rng);
        let batch = prepare_batch::<f32>(
            buffer,
            &indices,
            &arch,
            aug,
            self.config.reward_scale,
            update_rng,
        )?;

        let (closs, cgrad, head_inputs) = critic_loss_with_features(
            &self.params,
            &self.target,
            self.log_alpha,
            &batch,
            self.config.discount,
        )?;
        self.adam_critic.apply(&mut self.params, &cgrad);

        // Actor and temperature use the pre-update features; the encoder is
        // trained by the critic loss only.
        let pairs: Vec<(Vec<f32>, [f32; ACTION_DIM])> = head_inputs
            .into_iter()
            .map(|h| (h, sample_eps::<f32>(update_rng)))
            .collect();
        let (aloss, agrad, logps) =
            actor_loss(&self.params, &pairs, self.log_alpha, &TwinCritics(&self.params))?;
        self.adam_actor.apply(&mut self.params, &agrad);

        let (_tloss, dlogalpha) =
            temperature_loss(self.log_alpha, &logps, self.config.target_entropy);
        self.adam_alpha.apply(&mut self.log_alpha, dlogalpha, self.config.alpha_lr);

        soft_update(&mut self.target, &self.params, self.config.tau)?;

        if !closs.is_finite() || !aloss.is_finite() || !self.log_alpha.is_finite() {
            return Err(LiftError::Training(format!(
                "divergence: critic {closs}, actor {aloss}, log_alpha {}",
                self.log_alpha
            )));
        }
        Ok(UpdateStats { critic_loss: closs, actor_loss: aloss, alpha: self.log_alpha.exp() })
    }
}

/// `critic_loss` plus the per-sample head inputs (feature ++ joint state),
/// reused by the actor step so observations are encoded once per update.
pub fn critic_loss_with_features(
    params: &Params,
    target: &Params,
    log_alpha: f64,
    batch: &[super::batch::BatchItem<f32>],
    discount: f64,
) -> Result<(f64, Vec<f32>, Vec<Vec<f32>>)> {
    let (loss, grad) = critic_loss(params, target, log_alpha, batch, discount)?;
    let arch = *params.arch();
    let feats = crate::parallel::ordered_map(batch.len(), |i| {
        let mut tape = EncoderTape::new(&arch);
        let mut scratch = EncScratch::new(&arch);
        encoder_forward(params, &batch[i].obs_input, &mut tape, &mut scratch);
        make_head_input(&tape.feat, &batch[i].q, arch.with_state)
    });
    Ok((loss, grad, feats))
}

/// Per-rollout policy evaluation context (tapes reused across steps).
pub struct PolicyContext {
    tape: EncoderTape,
    scratch: EncScratch,
    atape: ActorTape,
}

impl PolicyContext {
    pub fn new(arch: &ArchConfig) -> Self {
        PolicyContext {
            tape: EncoderTape::new(arch),
            scratch: EncScratch::new(arch),
            atape: ActorTape::new(arch.head_input_dim()),
        }
    }
}

/// Policy action on raw (un-augmented) observations; stochastic for
/// rollouts, squashed mean for evaluation.
pub fn policy_action(
    params: &Params,
    images: &[Image],
    q: Option<[f32; 7]>,
    stochastic: bool,
    ctx: &mut PolicyContext,
    rng: &mut ChaCha8Rng,
) -> Result<[f32; ACTION_DIM]> {
    let refs: Vec<&Image> = images.iter().collect();
    let input = crate::nnet::build_input::<f32>(params.arch(), &refs)?;
    encoder_forward(params, &input, &mut ctx.tape, &mut ctx.scratch);
    let head = make_head_input(&ctx.tape.feat, &q, params.arch().with_state);
    actor_forward(params, &head, &mut ctx.atape);
    if stochastic {
        let eps = sample_eps::<f32>(rng);
        Ok(squashed_sample(&ctx.atape.mean, &ctx.atape.logstd, &eps).action)
    } else {
        Ok(deterministic_action(&ctx.atape.mean))
    }
}

pub fn env_action(a: &[f32; ACTION_DIM]) -> Action {
    Action {
        dx: a[0] as f64,
        dy: a[1] as f64,
        dz: a[2] as f64,
        dyaw: a[3] as f64,
        grip: a[4] as f64,
    }
}

fn q_vector(state: &SceneState, with_state: bool) -> Option<[f32; 7]> {
    if with_state {
        let q = pseudo_joints(state);
        let mut out = [0f32; 7];
        for (o, v) in out.iter_mut().zip(q.iter()) {
            *o = *v as f32;
        }
        Some(out)
    } else {
        None
    }
}

/// Result of a teacher training run.
pub struct TeacherRun {
    pub params: Params,
    pub records: Vec<EpisodeRecord>,
    pub env_steps: u64,
}

struct RngPack {
    env: ChaCha8Rng,
    policy: ChaCha8Rng,
    buffer: ChaCha8Rng,
    update: ChaCha8Rng,
    camera: ChaCha8Rng,
    init: ChaCha8Rng,
}

impl RngPack {
    fn new(seed: u64) -> Self {
        RngPack {
            env: child_rng(seed, "sac-env", 0),
            policy: child_rng(seed, "sac-policy", 0),
            buffer: child_rng(seed, "sac-buffer", 0),
            update: child_rng(seed, "sac-update", 0),
            camera: child_rng(seed, "sac-camera", 0),
            init: child_rng(seed, "sac-init", 0),
        }
    }
}

/// Train a teacher with SAC. The demo transitions seed the replay buffer;
/// `on_episode` is invoked after every finished episode so callers can
/// stream metrics.
#[allow(clippy::too_many_arguments)]
pub fn train_teacher(
    task: &TaskConfig,
    kind: ObjectKind,
    rig: &CameraRig,
    demos: &[Transition],
    aug: &AugmentConfig,
    arch: ArchConfig,
    config: SacConfig,
    front_mode: &FrontCameraMode,
    seed: u64,
    resume_from: Option<&Path>,
    checkpoint_path: Option<&Path>,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TeacherRun> {
    if arch.views != rig.view_count() {
        return Err(LiftError::Shape(format!(
            "architecture expects {} views, rig has {}",
            arch.views,
            rig.view_count()
        )));
    }
    let mut rngs = RngPack::new(seed);
    let mut learner = SacLearner::new(arch, config, &mut rngs.init);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    for t in demos {
        if t.view_count() != arch.views {
            return Err(LiftError::Shape(format!(
                "demo transition has {} views, architecture expects {}",
                t.view_count(),
                arch.views
            )));
        }
        buffer.push(t.clone());
    }
    if buffer.is_empty() {
        return Err(LiftError::MissingDependency("empty demo buffer".into()));
    }

    let mut episode: u32 = 0;
    let mut env_steps: u64 = 0;
    let mut records: Vec<EpisodeRecord> = Vec::new();

    if let Some(path) = resume_from {
        let state = load_trainer_state(path, &learner.params.layout)?;
        restore(&mut learner, &mut buffer, &mut rngs, &state)?;
        episode = state.episode;
        env_steps = state.env_steps;
    } else {
        for _ in 0..config.pretrain_updates {
            learner.update(&buffer, aug, &mut rngs.buffer, &mut rngs.update)?;
        }
    }

    let mut ctx = PolicyContext::new(&arch);
    let mut last_good = learner.params.clone();

    while env_steps < config.train_env_steps {
        let front_override = match front_mode {
            FrontCameraMode::Fixed => None,
            FrontCameraMode::RandomizePerEpisode(range) => {
                Some(sample_camera(range, &mut rngs.camera))
            }
        };
        let mut state = reset(task, kind, &mut rngs.env);
        let mut obs = rig.observe(&state, front_override.as_ref())?;
        let mut ret = 0.0f64;
        let mut closs_sum = 0.0f64;
        let mut aloss_sum = 0.0f64;
        let mut alpha = learner.log_alpha.exp();
        let mut n_updates = 0u32;
        loop {
            let act = policy_action(
                &learner.params,
                &obs,
                q_vector(&state, arch.with_state),
                true,
                &mut ctx,
                &mut rngs.policy,
            )?;
            let (next_state, reward, done) = step(&state, &env_action(&act), task)?;
            let next_obs = rig.observe(&next_state, front_override.as_ref())?;
            buffer.push(Transition {
                images: images_to_u8(&obs),
                q: q_vector(&state, arch.with_state),
                action: act,
                reward: reward as f32,
                done,
                next_images: images_to_u8(&next_obs),
                next_q: q_vector(&next_state, arch.with_state),
            });
            ret += reward;
            env_steps += 1;
            state = next_state;
            obs = next_obs;

            for _ in 0..config.updates_per_step {
                match learner.update(&buffer, aug, &mut rngs.buffer, &mut rngs.update) {
                    Ok(stats) => {
                        closs_sum += stats.critic_loss;
                        aloss_sum += stats.actor_loss;
                        alpha = stats.alpha;
                        n_updates += 1;
                    }
                    Err(e) => {
                        if let Some(dir) = checkpoint_path {
                            let p = dir.join("diverged_last_good.params");
                            crate::nnet::save_params(&last_good, &p)?;
                        }
                        return Err(e);
                    }
                }
            }
            if done || env_steps >= config.train_env_steps {
                break;
            }
        }
        let record = EpisodeRecord {
            episode,
            env_steps,
            ret,
            success: state.success_latched,
            critic_loss: if n_updates > 0 { closs_sum / n_updates as f64 } else { 0.0 },
            actor_loss: if n_updates > 0 { aloss_sum / n_updates as f64 } else { 0.0 },
            alpha,
        };
        on_episode(&record);
        records.push(record);
        episode += 1;
        last_good = learner.params.clone();

        if config.checkpoint_every_episodes > 0
            && episode % config.checkpoint_every_episodes == 0
        {
            if let Some(dir) = checkpoint_path {
                save_trainer_state(&dir.join("resume.state"), &learner, &buffer, &rngs, episode, env_steps)?;
            }
        }
    }

    learner.params.assert_finite()?;
    Ok(TeacherRun { params: learner.params, records, env_steps })
}

// --- resume serialization ---------------------------------------------------

struct TrainerState {
    params: Vec<f32>,
    target: Vec<f32>,
    log_alpha: f64,
    adam_critic: (Vec<f32>, Vec<f32>, u64),
    adam_actor: (Vec<f32>, Vec<f32>, u64),
    adam_alpha: (f64, f64, u64),
    transitions: Vec<Transition>,
    rng_pos: [u128; 6],
    episode: u32,
    env_steps: u64,
}

fn push_f32s(buf: &mut Vec<u8>, vals: &[f32]) {
    buf.extend_from_slice(&(vals.len() as u64).to_le_bytes());
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn save_trainer_state(
    path: &Path,
    learner: &SacLearner,
    buffer: &ReplayBuffer,
    rngs: &RngPack,
    episode: u32,
    env_steps: u64,
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(b"LVTS");
    buf.extend_from_slice(&1u16.to_le_bytes());
    buf.extend_from_slice(&learner.params.fingerprint().to_le_bytes());
    buf.extend_from_slice(&episode.to_le_bytes());
    buf.extend_from_slice(&env_steps.to_le_bytes());
    buf.extend_from_slice(&learner.log_alpha.to_le_bytes());
    push_f32s(&mut buf, &learner.params.data);
    push_f32s(&mut buf, &learner.target.data);
    for adam in [&learner.adam_critic, &learner.adam_actor] {
        let (m, v, step) = adam.state();
        buf.extend_from_slice(&step.to_le_bytes());
        push_f32s(&mut buf, m);
        push_f32s(&mut buf, v);
    }
    buf.extend_from_slice(&learner.adam_alpha.m.to_le_bytes());
    buf.extend_from_slice(&learner.adam_alpha.v.to_le_bytes());
    buf.extend_from_slice(&learner.adam_alpha.step.to_le_bytes());
    for rng in [&rngs.env, &rngs.policy, &rngs.buffer, &rngs.update, &rngs.camera, &rngs.init] {
        buf.extend_from_slice(&rng.get_word_pos().to_le_bytes());
    }
    // Buffer transitions in FIFO order via the spill encoding.
    let views = buffer.iter_fifo().next().map(|t| t.view_count()).unwrap_or(0);
    let tmp_replay = path.with_extension("replay_tmp");
    super::buffer::save_transitions(buffer.iter_fifo(), views, &tmp_replay)?;
    let replay_bytes = std::fs::read(&tmp_replay)?;
    std::fs::remove_file(&tmp_replay).ok();
    buf.extend_from_slice(&(replay_bytes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&replay_bytes);

    let mut h = Fnv1a::new();
    h.update(&buf);
    let sum = h.finish();
    buf.extend_from_slice(&sum.to_le_bytes());
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_trainer_state(path: &Path, layout: &Layout) -> Result<TrainerState> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 40 {
        return Err(LiftError::Integrity("trainer state too short".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let mut h = Fnv1a::new();
    h.update(payload);
    if stored != h.finish() {
        return Err(LiftError::Integrity("trainer state checksum mismatch".into()));
    }
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > payload.len() {
            return Err(LiftError::Integrity("trainer state truncated".into()));
        }
        let s = &payload[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    if take(&mut pos, 4)? != b"LVTS" {
        return Err(LiftError::Integrity("bad trainer state magic".into()));
    }
    let _version = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap());
    let fingerprint = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    if fingerprint != layout.fingerprint {
        return Err(LiftError::Fingerprint { expected: layout.fingerprint, found: fingerprint });
    }
    let episode = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    let env_steps = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let log_alpha = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let read_f32s = |pos: &mut usize| -> Result<Vec<f32>> {
        let n = u64::from_le_bytes(take(pos, 8)?.try_into().unwrap()) as usize;
        let raw = take(pos, n * 4)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let params = read_f32s(&mut pos)?;
    let target = read_f32s(&mut pos)?;
    let mut adams = Vec::new();
    for _ in 0..2 {
        let step = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let m = read_f32s(&mut pos)?;
        let v = read_f32s(&mut pos)?;
        adams.push((m, v, step));
    }
    let am = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let av = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let astep = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let mut rng_pos = [0u128; 6];
    for slot in rng_pos.iter_mut() {
        *slot = u128::from_le_bytes(take(&mut pos, 16)?.try_into().unwrap());
    }
    let replay_len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let replay_bytes = take(&mut pos, replay_len)?;
    let tmp = path.with_extension("replay_load");
    std::fs::write(&tmp, replay_bytes)?;
    let (transitions, _) = super::buffer::load_transitions(&tmp)?;
    std::fs::remove_file(&tmp).ok();
    let adam_actor = adams.pop().unwrap();
    let adam_critic = adams.pop().unwrap();
    Ok(TrainerState {
        params,
        target,
        log_alpha,
        adam_critic,
        adam_actor,
        adam_alpha: (am, av, astep),
        transitions,
        rng_pos,
        episode,
        env_steps,
    })
}

fn restore(
    learner: &mut SacLearner,
    buffer: &mut ReplayBuffer,
    rngs: &mut RngPack,
    state: &TrainerState,
) -> Result<()> {
    learner.params.data.copy_from_slice(&state.params);
    learner.target.data.copy_from_slice(&state.target);
    learner.log_alpha = state.log_alpha;
    learner
        .adam_critic
        .restore(state.adam_critic.0.clone(), state.adam_critic.1.clone(), state.adam_critic.2);
    learner
        .adam_actor
        .restore(state.adam_actor.0.clone(), state.adam_actor.1.clone(), state.adam_actor.2);
    learner.adam_alpha = ScalarAdam {
        m: state.adam_alpha.0,
        v: state.adam_alpha.1,
        step: state.adam_alpha.2,
    };
    *buffer = ReplayBuffer::new(buffer.capacity());
    for t in &state.transitions {
        buffer.push(t.clone());
    }
    // Demo contents were re-pushed from the snapshot; rngs resume mid-stream.
    let seeds = [
        &mut rngs.env,
        &mut rngs.policy,
        &mut rngs.buffer,
        &mut rngs.update,
        &mut rngs.camera,
        &mut rngs.init,
    ];
    for (rng, &wp) in seeds.into_iter().zip(state.rng_pos.iter()) {
        let seed = rng.get_seed();
        *rng = ChaCha8Rng::from_seed(seed);
        rng.set_word_pos(wp);
    }
    Ok(())
}

/// Scripted-expert demonstration episodes rendered through the rig. A failed
/// expert episode is re-rolled with a fresh seed and counted.
pub struct DemoSet {
    pub transitions: Vec<Transition>,
    pub rerolled: u32,
}

pub fn scripted_demos(
    task: &TaskConfig,
    kind: ObjectKind,
    rig: &CameraRig,
    episodes: u32,
    seed: u64,
    with_state: bool,
) -> Result<DemoSet> {
    let mut transitions = Vec::with_capacity((episodes * task.episode_len) as usize);
    let mut rerolled = 0u32;
    let mut attempt_index = 0u64;
    let mut done_episodes = 0u32;
    while done_episodes < episodes {
        let mut env_rng = child_rng(seed, "demo-env", attempt_index);
        let mut expert_rng = child_rng(seed, "demo-expert", attempt_index);
        attempt_index += 1;
        let mut state = reset(task, kind, &mut env_rng);
        let mut episode: Vec<Transition> = Vec::with_capacity(task.episode_len as usize);
        let mut obs = rig.observe(&state, None)?;
        loop {
            let act = crate::liftsim::scripted_expert(&state, task, &mut expert_rng);
            let act_arr = {
                let a = act.clamped().to_array();
                [a[0] as f32, a[1] as f32, a[2] as f32, a[3] as f32, a[4] as f32]
            };
            let (next_state, reward, done) = step(&state, &act, task)?;
            let next_obs = rig.observe(&next_state, None)?;
            episode.push(Transition {
                images: images_to_u8(&obs),
                q: q_vector(&state, with_state),
                action: act_arr,
                reward: reward as f32,
                done,
                next_images: images_to_u8(&next_obs),
                next_q: q_vector(&next_state, with_state),
            });
            state = next_state;
            obs = next_obs;
            if done {
                break;
            }
        }
        if state.success_latched {
            transitions.extend(episode);
            done_episodes += 1;
        } else {
            rerolled += 1;
        }
    }
    Ok(DemoSet { transitions, rerolled })
}

/// Convenience wrapper returning the transitions only.
pub fn scripted_demo_transitions(
    task: &TaskConfig,
    kind: ObjectKind,
    rig: &CameraRig,
    episodes: u32,
    seed: u64,
    with_state: bool,
) -> Result<Vec<Transition>> {
    Ok(scripted_demos(task, kind, rig, episodes, seed, with_state)?.transitions)
}
