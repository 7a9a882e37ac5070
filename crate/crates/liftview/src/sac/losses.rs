//! Soft actor-critic losses with hand-derived gradients.
//!
//! Each loss maps a prepared batch to `(scalar, flat gradient)`. Per-sample
//! work runs through the deterministic chunked reducer, so results are
//! bit-identical regardless of worker count. Element type is generic: f32
//! in training, f64 under gradient verification.

use super::batch::BatchItem;
use crate::error::{LiftError, Result};
use crate::nnet::arch::{ParamGroup, ACTION_DIM};
use crate::nnet::{
    action_grads, actor_backward, actor_forward, critic_backward, critic_forward,
    deterministic_action, encoder_backward, encoder_forward, log_prob_grads, squashed_sample,
    ActorTape, CriticTape, EncScratch, EncoderTape, Params, Scalar,
};
use crate::parallel::chunked_map_reduce;

/// Q evaluation abstraction for the actor objective: the production source
/// is the twin-critic minimum; tests may substitute analytic landscapes.
pub trait QSource<T: Scalar>: Sync {
    /// Returns `min Q(input, action)` and its gradient w.r.t. the action.
    fn min_q_and_grad(&self, head_input: &[T], action: &[T; ACTION_DIM]) -> (T, [T; ACTION_DIM]);
}

/// Twin critics from a parameter set, taking the elementwise minimum.
pub struct TwinCritics<'a, T: Scalar>(pub &'a Params<T>);

impl<T: Scalar> QSource<T> for TwinCritics<'_, T> {
    fn min_q_and_grad(&self, head_input: &[T], action: &[T; ACTION_DIM]) -> (T, [T; ACTION_DIM]) {
        let dim = head_input.len() + ACTION_DIM;
        let mut tape = CriticTape::new(dim);
        let mut joint = Vec::with_capacity(dim);
        joint.extend_from_slice(head_input);
        joint.extend_from_slice(action);
        let q1 = critic_forward(self.0, 1, &joint, &mut tape);
        let mut tape2 = CriticTape::new(dim);
        let q2 = critic_forward(self.0, 2, &joint, &mut tape2);
        let (which, q, tape_min) = if q1 <= q2 { (1, q1, tape) } else { (2, q2, tape2) };
        let mut sink = vec![T::zero(); self.0.layout.total];
        let mut dinput = vec![T::zero(); dim];
        critic_backward(self.0, which, &tape_min, T::one(), &mut sink, Some(&mut dinput));
        let mut da = [T::zero(); ACTION_DIM];
        da.copy_from_slice(&dinput[head_input.len()..]);
        (q, da)
    }
}

fn head_input<T: Scalar>(feat: &[T], q: &Option<[T; 7]>, with_state: bool) -> Vec<T> {
    let mut input = Vec::with_capacity(feat.len() + if with_state { 7 } else { 0 });
    input.extend_from_slice(feat);
    if with_state {
        let q = q.expect("with_state architecture requires a joint-state vector");
        input.extend_from_slice(&q);
    }
    input
}

/// Squared soft-Bellman residual for both critics against the target
/// `y = r + gamma (1-done) (min target-Q - alpha log pi)`, with the target
/// action sampled from the current actor on target-encoder features.
///
/// The encoder receives gradients from this loss only; the target `y` is a
/// constant of the optimization, so actor parameters get none here.
pub fn critic_loss<T: Scalar>(
    params: &Params<T>,
    target_params: &Params<T>,
    log_alpha: f64,
    batch: &[BatchItem<T>],
    discount: f64,
) -> Result<(f64, Vec<T>)> {
    if batch.is_empty() {
        return Err(LiftError::EmptyInput("critic_loss batch".into()));
    }
    if params.fingerprint() != target_params.fingerprint() {
        return Err(LiftError::Fingerprint {
            expected: params.fingerprint(),
            found: target_params.fingerprint(),
        });
    }
    let arch = *params.arch();
    let b = batch.len();
    let inv_b = T::from_f64(1.0 / b as f64);
    let alpha = T::from_f64(log_alpha.exp());
    let gamma = T::from_f64(discount);

    let (loss, grad) = chunked_map_reduce(
        b,
        (0.0f64, vec![T::zero(); params.layout.total]),
        |range| {
            let mut grad = vec![T::zero(); params.layout.total];
            let mut loss = 0.0f64;
            let mut tape = EncoderTape::new(&arch);
            let mut tape_next = EncoderTape::new(&arch);
            let mut scratch = EncScratch::new(&arch);
            let head_dim = arch.head_input_dim();
            let joint_dim = head_dim + ACTION_DIM;
            let mut ct1 = CriticTape::new(joint_dim);
            let mut ct2 = CriticTape::new(joint_dim);
            let mut atape = ActorTape::new(head_dim);
            for i in range {
                let item = &batch[i];
                // Online encoder on the current observation.
                encoder_forward(params, &item.obs_input, &mut tape, &mut scratch);
                let h = head_input(&tape.feat, &item.q, arch.with_state);
                let mut joint = Vec::with_capacity(joint_dim);
                joint.extend_from_slice(&h);
                joint.extend_from_slice(&item.action);
                let q1 = critic_forward(params, 1, &joint, &mut ct1);
                let q2 = critic_forward(params, 2, &joint, &mut ct2);

                // Constant target from the target networks.
                encoder_forward(target_params, &item.next_input, &mut tape_next, &mut scratch);
                let nh = head_input(&tape_next.feat, &item.next_q, arch.with_state);
                actor_forward(params, &nh, &mut atape);
                let sample = squashed_sample(&atape.mean, &atape.logstd, &item.eps);
                let mut njoint = Vec::with_capacity(joint_dim);
                njoint.extend_from_slice(&nh);
                njoint.extend_from_slice(&sample.action);
                let mut tt = CriticTape::new(joint_dim);
                let tq1 = critic_forward(target_params, 1, &njoint, &mut tt);
                let tq2 = critic_forward(target_params, 2, &njoint, &mut tt);
                let tq = tq1.min(tq2);
                let not_done = if item.done { T::zero() } else { T::one() };
                let y = item.reward
                    + gamma * not_done * (tq - alpha * T::from_f64(sample.log_prob));

                let r1 = q1 - y;
                let r2 = q2 - y;
                loss += (r1 * r1 + r2 * r2).as_f64();

                let two = T::from_f32(2.0);
                let mut dh = vec![T::zero(); joint_dim];
                critic_backward(params, 1, &ct1, two * r1 * inv_b, &mut grad, Some(&mut dh));
                critic_backward(params, 2, &ct2, two * r2 * inv_b, &mut grad, Some(&mut dh));
                encoder_backward(params, &tape, &dh[..arch.feature_dim], &mut grad, &mut scratch);
            }
            (loss, grad)
        },
        |acc, (l, g)| {
            acc.0 += l;
            for (a, v) in acc.1.iter_mut().zip(g.iter()) {
                *a = *a + *v;
            }
        },
    );

    let loss = loss / b as f64;
    if !loss.is_finite() {
        return Err(LiftError::Training(format!("non-finite critic loss {loss}")));
    }
    Ok((loss, grad))
}

/// Maximum-entropy actor objective `mean(alpha log pi - min Q)` over
/// reparameterized actions. Features are treated as constants: encoder
/// parameters receive zero gradient by construction, and only actor
/// segments of the returned gradient are populated.
pub fn actor_loss<T: Scalar>(
    params: &Params<T>,
    features: &[(Vec<T>, [T; ACTION_DIM])],
    log_alpha: f64,
    q_source: &impl QSource<T>,
) -> Result<(f64, Vec<T>, Vec<f64>)> {
    if features.is_empty() {
        return Err(LiftError::EmptyInput("actor_loss batch".into()));
    }
    let arch = *params.arch();
    let b = features.len();
    let inv_b = T::from_f64(1.0 / b as f64);
    let alpha = T::from_f64(log_alpha.exp());

    let (loss, grad, logps) = chunked_map_reduce(
        b,
        (0.0f64, vec![T::zero(); params.layout.total], Vec::<f64>::new()),
        |range| {
            let mut grad = vec![T::zero(); params.layout.total];
            let mut loss = 0.0f64;
            let mut logps = Vec::with_capacity(range.len());
            let mut atape = ActorTape::new(arch.head_input_dim());
            for i in range {
                let (h, eps) = &features[i];
                actor_forward(params, h, &mut atape);
                let sample = squashed_sample(&atape.mean, &atape.logstd, eps);
                let (q, dq_da) = q_source.min_q_and_grad(h, &sample.action);
                loss += (alpha.as_f64()) * sample.log_prob - q.as_f64();
                logps.push(sample.log_prob);

                let (lp_dmean, lp_dlogstd) = log_prob_grads(&atape.logstd, eps, &sample.u);
                let (a_dmean, a_dlogstd) = action_grads(&atape.logstd, eps, &sample.action);
                let mut dmean = [T::zero(); ACTION_DIM];
                let mut dlogstd = [T::zero(); ACTION_DIM];
                for j in 0..ACTION_DIM {
                    dmean[j] = (alpha * lp_dmean[j] - dq_da[j] * a_dmean[j]) * inv_b;
                    dlogstd[j] = (alpha * lp_dlogstd[j] - dq_da[j] * a_dlogstd[j]) * inv_b;
                }
                actor_backward(params, &atape, &dmean, &dlogstd, &mut grad, None);
            }
            (loss, grad, logps)
        },
        |acc, (l, g, lp)| {
            acc.0 += l;
            acc.2.extend(lp);
            for (a, v) in acc.1.iter_mut().zip(g.iter()) {
                *a = *a + *v;
            }
        },
    );

    let loss = loss / b as f64;
    if !loss.is_finite() {
        return Err(LiftError::Training(format!("non-finite actor loss {loss}")));
    }
    // Actor loss must never touch encoder or critic parameters.
    debug_assert!({
        let mut clean = true;
        for g in [ParamGroup::Encoder, ParamGroup::Critic] {
            for range in params.layout.group_ranges(g) {
                clean &= grad[range].iter().all(|v| *v == T::zero());
            }
        }
        clean
    });
    Ok((loss, grad, logps))
}

/// Temperature objective `mean(-alpha (log pi + target_entropy))`,
/// differentiated w.r.t. `log alpha`.
pub fn temperature_loss(log_alpha: f64, batch_log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let alpha = log_alpha.exp();
    let mean: f64 =
        batch_log_probs.iter().sum::<f64>() / batch_log_probs.len().max(1) as f64;
    let loss = -alpha * (mean + target_entropy);
    let dlog_alpha = -alpha * (mean + target_entropy);
    (loss, dlog_alpha)
}

/// Deterministic squashed-mean policy action for evaluation and
/// distillation targets.
pub fn policy_mean_action<T: Scalar>(
    params: &Params<T>,
    feat: &[T],
    q: &Option<[T; 7]>,
) -> [T; ACTION_DIM] {
    let h = head_input(feat, q, params.arch().with_state);
    let mut tape = ActorTape::new(params.arch().head_input_dim());
    actor_forward(params, &h, &mut tape);
    deterministic_action(&tape.mean)
}

pub use super::batch::make_head_input;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::AugmentConfig;
    use crate::nnet::arch::{ArchConfig, ParamGroup};
    use crate::nnet::{grad_check_groups, sample_eps, Layout};
    use crate::rng::child_rng;
    use crate::sac::adam::Adam;
    use crate::sac::batch::{prepare_batch, BatchItem};
    use crate::sac::buffer::{ReplayBuffer, Transition};
    use rand::Rng;

    fn fake_buffer(views: usize, n: u8, seed: u64) -> ReplayBuffer {
        let mut rng = child_rng(seed, "imgs", 0);
        let mut buf = ReplayBuffer::new(256);
        for i in 0..n {
            let mut img = vec![0u8; 84 * 84 * 3];
            for v in img.iter_mut() {
                *v = rng.random();
            }
            let mut next = vec![0u8; 84 * 84 * 3];
            for v in next.iter_mut() {
                *v = rng.random();
            }
            buf.push(Transition {
                images: vec![img; views],
                q: None,
                action: [
                    rng.random_range(-0.9..0.9),
                    rng.random_range(-0.9..0.9),
                    rng.random_range(-0.9..0.9),
                    rng.random_range(-0.9..0.9),
                    rng.random_range(-0.9..0.9),
                ],
                reward: if i % 2 == 0 { 100.0 } else { 0.0 },
                done: i % 3 == 0,
                next_images: vec![next; views],
                next_q: None,
            });
        }
        buf
    }

    fn setup_f64(
        seed: u64,
        batch: usize,
    ) -> (ArchConfig, Params<f64>, Params<f64>, Vec<BatchItem<f64>>) {
        let arch = ArchConfig::new(1, false);
        let params: Params<f64> =
            Params::init(Layout::new(arch), &mut child_rng(seed, "init", 0)).cast();
        let target: Params<f64> =
            Params::init(Layout::new(arch), &mut child_rng(seed + 1, "init", 0)).cast();
        let buf = fake_buffer(1, 8, seed);
        let idx: Vec<usize> = (0..batch).collect();
        let items = prepare_batch::<f64>(
            &buf,
            &idx,
            &arch,
            &AugmentConfig::identity(),
            0.01,
            &mut child_rng(seed + 2, "batch", 0),
        )
        .unwrap();
        (arch, params, target, items)
    }

    #[test]
    fn zero_discount_reduces_to_reward_regression() {
        let (arch, params, target, items) = setup_f64(10, 4);
        let (loss, _) = critic_loss(&params, &target, 0.1f64.ln(), &items, 0.0).unwrap();
        // Oracle: with gamma = 0 the target is exactly the scaled reward.
        let mut expect = 0.0;
        let mut tape = EncoderTape::<f64>::new(&arch);
        let mut scratch = EncScratch::<f64>::new(&arch);
        for item in &items {
            encoder_forward(&params, &item.obs_input, &mut tape, &mut scratch);
            let mut joint = tape.feat.clone();
            joint.extend_from_slice(&item.action);
            let mut ct = CriticTape::new(joint.len());
            let q1 = critic_forward(&params, 1, &joint, &mut ct);
            let q2 = critic_forward(&params, 2, &joint, &mut ct);
            expect += (q1 - item.reward).powi(2) + (q2 - item.reward).powi(2);
        }
        expect /= items.len() as f64;
        assert!((loss - expect).abs() < 1e-9, "{loss} vs {expect}");
    }

    #[test]
    fn done_transitions_drop_the_bootstrap_term() {
        let (_, params, target, mut items) = setup_f64(11, 4);
        for item in items.iter_mut() {
            item.done = true;
        }
        let (with_gamma, _) = critic_loss(&params, &target, 0.1f64.ln(), &items, 0.99).unwrap();
        let (no_gamma, _) = critic_loss(&params, &target, 0.1f64.ln(), &items, 0.0).unwrap();
        assert!((with_gamma - no_gamma).abs() < 1e-12);
    }

    #[test]
    fn critic_loss_matches_hand_assembled_target() {
        // Pencil-and-paper oracle on a frozen 2-transition batch: recompute
        // y from the public forward ops and assemble the loss by hand.
        let (arch, params, target, items) = setup_f64(12, 2);
        let log_alpha = 0.27f64.ln();
        let discount = 0.93;
        let (loss, _) = critic_loss(&params, &target, log_alpha, &items, discount).unwrap();

        let mut tape = EncoderTape::<f64>::new(&arch);
        let mut scratch = EncScratch::<f64>::new(&arch);
        let mut expect = 0.0;
        for item in &items {
            encoder_forward(&params, &item.obs_input, &mut tape, &mut scratch);
            let mut joint = tape.feat.clone();
            joint.extend_from_slice(&item.action);
            let mut ct = CriticTape::new(joint.len());
            let q1 = critic_forward(&params, 1, &joint, &mut ct);
            let q2 = critic_forward(&params, 2, &joint, &mut ct);

            encoder_forward(&target, &item.next_input, &mut tape, &mut scratch);
            let nh = tape.feat.clone();
            let mut at = ActorTape::new(arch.head_input_dim());
            actor_forward(&params, &nh, &mut at);
            let s = squashed_sample(&at.mean, &at.logstd, &item.eps);
            let mut njoint = nh.clone();
            njoint.extend_from_slice(&s.action);
            let tq1 = critic_forward(&target, 1, &njoint, &mut ct);
            let tq2 = critic_forward(&target, 2, &njoint, &mut ct);
            let not_done = if item.done { 0.0 } else { 1.0 };
            let y = item.reward
                + discount * not_done * (tq1.min(tq2) - log_alpha.exp() * s.log_prob);
            expect += (q1 - y).powi(2) + (q2 - y).powi(2);
        }
        expect /= items.len() as f64;
        assert!((loss - expect).abs() < 1e-6, "{loss} vs {expect}");
    }

    #[test]
    fn critic_loss_gradient_matches_finite_differences() {
        let (_, params, target, items) = setup_f64(13, 2);
        let report = grad_check_groups(
            &params,
            |p| critic_loss(p, &target, 0.1f64.ln(), &items, 0.97),
            |p| Ok(critic_loss(p, &target, 0.1f64.ln(), &items, 0.97)?.0),
            1e-3,
            Some(&[ParamGroup::Encoder, ParamGroup::Critic]),
            &mut child_rng(14, "probe", 0),
        )
        .unwrap();
        assert!(report.pass, "{report}");
    }

    struct ConstantQ;
    impl QSource<f64> for ConstantQ {
        fn min_q_and_grad(&self, _h: &[f64], _a: &[f64; ACTION_DIM]) -> (f64, [f64; ACTION_DIM]) {
            (5.0, [0.0; ACTION_DIM])
        }
    }

    struct NegSquaredQ;
    impl QSource<f64> for NegSquaredQ {
        fn min_q_and_grad(&self, _h: &[f64], a: &[f64; ACTION_DIM]) -> (f64, [f64; ACTION_DIM]) {
            let q = -a.iter().map(|v| v * v).sum::<f64>();
            let mut da = [0.0; ACTION_DIM];
            for i in 0..ACTION_DIM {
                da[i] = -2.0 * a[i];
            }
            (q, da)
        }
    }

    fn feature_batch(arch: &ArchConfig, n: usize, seed: u64) -> Vec<(Vec<f64>, [f64; ACTION_DIM])> {
        let mut rng = child_rng(seed, "feat", 0);
        (0..n)
            .map(|_| {
                let h: Vec<f64> =
                    (0..arch.head_input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                (h, sample_eps::<f64>(&mut rng))
            })
            .collect()
    }

    #[test]
    fn zero_alpha_constant_critic_gives_zero_gradient() {
        let arch = ArchConfig::new(1, false);
        let params: Params<f64> =
            Params::init(Layout::new(arch), &mut child_rng(20, "init", 0)).cast();
        let feats = feature_batch(&arch, 4, 21);
        let (_, grad, _) = actor_loss(&params, &feats, f64::NEG_INFINITY, &ConstantQ).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-12), "objective is constant");
    }

    #[test]
    fn actor_mean_descends_toward_q_optimum() {
        // Frozen Q(o, a) = -|a|^2 with alpha = 0: the optimal squashed mean is 0.
        let arch = ArchConfig::new(1, false);
        let layout = Layout::new(arch);
        let mut params = Params::init(layout.clone(), &mut child_rng(22, "init", 0));
        let feats32: Vec<(Vec<f32>, [f32; ACTION_DIM])> = feature_batch(&arch, 8, 23)
            .into_iter()
            .map(|(h, e)| {
                (
                    h.iter().map(|v| *v as f32).collect::<Vec<f32>>(),
                    [e[0] as f32, e[1] as f32, e[2] as f32, e[3] as f32, e[4] as f32],
                )
            })
            .collect();
        struct NegSq32;
        impl QSource<f32> for NegSq32 {
            fn min_q_and_grad(&self, _h: &[f32], a: &[f32; ACTION_DIM]) -> (f32, [f32; ACTION_DIM]) {
                let q = -a.iter().map(|v| v * v).sum::<f32>();
                let mut da = [0.0; ACTION_DIM];
                for i in 0..ACTION_DIM {
                    da[i] = -2.0 * a[i];
                }
                (q, da)
            }
        }
        let mean_action_norm = |p: &Params| -> f64 {
            let mut tape = ActorTape::new(arch.head_input_dim());
            let mut total = 0.0;
            for (h, _) in &feats32 {
                actor_forward(p, h, &mut tape);
                let a = deterministic_action(&tape.mean);
                total += a.iter().map(|v| (*v as f64).powi(2)).sum::<f64>();
            }
            total / feats32.len() as f64
        };
        // Push the mean away from zero first so there is something to descend.
        for v in params.seg_mut("actor.mean.b") {
            *v = 0.7;
        }
        let start = mean_action_norm(&params);
        let mut opt = Adam::new(&params, &[ParamGroup::Actor], 3e-3);
        for _ in 0..300 {
            let (_, grad, _) = actor_loss(&params, &feats32, f64::NEG_INFINITY, &NegSq32).unwrap();
            opt.apply(&mut params, &grad);
        }
        let end = mean_action_norm(&params);
        assert!(end < 0.05 * start, "norm {start} -> {end}");
    }

    #[test]
    fn actor_loss_gradient_matches_finite_differences() {
        let arch = ArchConfig::new(1, false);
        let params: Params<f64> =
            Params::init(Layout::new(arch), &mut child_rng(24, "init", 0)).cast();
        let feats = feature_batch(&arch, 3, 25);
        let report = grad_check_groups(
            &params,
            |p| {
                let (l, g, _) = actor_loss(p, &feats, 0.2f64.ln(), &NegSquaredQ)?;
                Ok((l, g))
            },
            |p| Ok(actor_loss(p, &feats, 0.2f64.ln(), &NegSquaredQ)?.0),
            1e-3,
            Some(&[ParamGroup::Actor]),
            &mut child_rng(26, "probe", 0),
        )
        .unwrap();
        assert!(report.pass, "{report}");
    }

    #[test]
    fn actor_loss_leaves_encoder_and_critic_untouched() {
        let arch = ArchConfig::new(1, false);
        let params: Params<f64> =
            Params::init(Layout::new(arch), &mut child_rng(27, "init", 0)).cast();
        let feats = feature_batch(&arch, 4, 28);
        let (_, grad, _) =
            actor_loss(&params, &feats, 0.1f64.ln(), &TwinCritics(&params)).unwrap();
        for g in [ParamGroup::Encoder, ParamGroup::Critic] {
            for r in params.layout.group_ranges(g) {
                assert!(grad[r].iter().all(|v| *v == 0.0), "group {g:?} must get zero gradient");
            }
        }
        let touched = params
            .layout
            .group_ranges(ParamGroup::Actor)
            .iter()
            .any(|r| grad[r.clone()].iter().any(|v| *v != 0.0));
        assert!(touched);
    }

    #[test]
    fn temperature_stationary_at_target_entropy() {
        // Entropy equals the target when mean log prob is its negation.
        let target_entropy = -5.0;
        let logps = vec![5.0, 5.0, 5.0];
        let (_, grad) = temperature_loss(0.3f64.ln(), &logps, target_entropy);
        assert!(grad.abs() < 1e-12);
    }

    #[test]
    fn temperature_rises_when_entropy_below_target() {
        // Entropy below target: mean log prob above -target, so the gradient
        // on log alpha is negative and descent increases alpha.
        let (_, grad) = temperature_loss(0.3f64.ln(), &[5.5, 5.2], -5.0);
        assert!(grad < 0.0);
        // And falls when entropy exceeds the target.
        let (_, grad2) = temperature_loss(0.3f64.ln(), &[4.0, 4.5], -5.0);
        assert!(grad2 > 0.0);
    }

    #[test]
    fn temperature_matches_hand_formula() {
        let log_alpha = 0.7f64.ln();
        let logps = [3.3, -1.2, 0.4];
        let h = -5.0;
        let (loss, grad) = temperature_loss(log_alpha, &logps, h);
        let mean = logps.iter().sum::<f64>() / 3.0;
        let expect = -log_alpha.exp() * (mean + h);
        assert!((loss - expect).abs() < 1e-12);
        assert!((grad - expect).abs() < 1e-12);
    }
}
