//! Batch assembly: decode stored transitions, apply per-sample augmentation
//! draws and build encoder inputs. Draw ids and sampling noise are fixed
//! sequentially before any parallel work so batches replay bit-identically.

use super::buffer::{ReplayBuffer, Transition};
use crate::augment::{AugmentConfig, AugmentDraw};
use crate::error::Result;
use crate::nnet::arch::ACTION_DIM;
use crate::nnet::{build_input, sample_eps, ArchConfig, Scalar};
use crate::parallel::ordered_map;
use crate::raster::Image;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One prepared sample: augmented encoder inputs plus the frozen noise used
/// for the target-action draw.
#[derive(Debug, Clone)]
pub struct BatchItem<T: Scalar> {
    pub obs_input: Vec<T>,
    pub next_input: Vec<T>,
    pub q: Option<[T; 7]>,
    pub next_q: Option<[T; 7]>,
    pub action: [T; ACTION_DIM],
    pub reward: T,
    pub done: bool,
    pub eps: [T; ACTION_DIM],
}

pub fn make_head_input<T: Scalar>(feat: &[T], q: &Option<[T; 7]>, with_state: bool) -> Vec<T> {
    let mut input = Vec::with_capacity(feat.len() + if with_state { 7 } else { 0 });
    input.extend_from_slice(feat);
    if with_state {
        let q = q.expect("with_state architecture requires a joint-state vector");
        input.extend_from_slice(&q);
    }
    input
}

/// Apply one augmentation draw to every view of a multi-view observation and
/// build the channel-concatenated encoder input.
pub fn augmented_input<T: Scalar>(
    arch: &ArchConfig,
    images: &[Vec<u8>],
    draw: &AugmentDraw,
) -> Result<Vec<T>> {
    let mut augmented: Vec<Image> = Vec::with_capacity(images.len());
    for raw in images {
        let img = Image::from_u8(crate::raster::OBS_WIDTH, crate::raster::OBS_HEIGHT, raw)?;
        augmented.push(draw.apply(&img));
    }
    let refs: Vec<&Image> = augmented.iter().collect();
    build_input(arch, &refs)
}

fn cast_q<T: Scalar>(q: &Option<[f32; 7]>) -> Option<[T; 7]> {
    q.map(|vals| {
        let mut out = [T::zero(); 7];
        for (o, v) in out.iter_mut().zip(vals.iter()) {
            *o = T::from_f32(*v);
        }
        out
    })
}

/// Prepare a training batch from buffer indices. Each sample gets an
/// independent augmentation draw for its observation and its next
/// observation (one draw covers all views of that observation), plus a
/// frozen Gaussian noise vector for the bootstrap action.
pub fn prepare_batch<T: Scalar>(
    buffer: &ReplayBuffer,
    indices: &[usize],
    arch: &ArchConfig,
    aug: &AugmentConfig,
    reward_scale: f32,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BatchItem<T>>> {
    // Sequential randomness, parallel decoding.
    let plan: Vec<(usize, u64, u64, [T; ACTION_DIM])> = indices
        .iter()
        .map(|&idx| {
            let obs_draw: u64 = rng.random();
            let next_draw: u64 = rng.random();
            let eps = sample_eps::<T>(rng);
            (idx, obs_draw, next_draw, eps)
        })
        .collect();
    let items = ordered_map(plan.len(), |i| {
        let (idx, obs_draw, next_draw, eps) = plan[i];
        let t: &Transition = buffer.get(idx);
        let obs_input =
            augmented_input::<T>(arch, &t.images, &AugmentDraw::from_id(aug, obs_draw))?;
        let next_input =
            augmented_input::<T>(arch, &t.next_images, &AugmentDraw::from_id(aug, next_draw))?;
        let mut action = [T::zero(); ACTION_DIM];
        for (a, v) in action.iter_mut().zip(t.action.iter()) {
            *a = T::from_f32(*v);
        }
        Ok(BatchItem {
            obs_input,
            next_input,
            q: cast_q(&t.q),
            next_q: cast_q(&t.next_q),
            action,
            reward: T::from_f32(t.reward * reward_scale),
            done: t.done,
            eps,
        })
    });
    items.into_iter().collect()
}
