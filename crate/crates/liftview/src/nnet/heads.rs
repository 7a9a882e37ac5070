//! Policy heads: a squashed-Gaussian actor and twin Q critics, both small
//! ReLU MLPs over the encoder feature (optionally concatenated with the
//! 7-dim pseudo-joint vector).

use super::arch::{ACTION_DIM, HEAD_HIDDEN};
use super::ops::{linear, linear_backward, relu_backward_inplace, relu_inplace};
use super::params::Params;
use super::scalar::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Bounds for the log standard deviation; the raw head output is mapped
/// smoothly onto the open interval via tanh.
pub const LOG_STD_MIN: f32 = -10.0;
pub const LOG_STD_MAX: f32 = 2.0;

const LOG_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone)]
pub struct ActorTape<T: Scalar = f32> {
    pub input: Vec<T>,
    pub h1: Vec<T>,
    pub h2: Vec<T>,
    pub mean: [T; ACTION_DIM],
    pub raw: [T; ACTION_DIM],
    pub logstd: [T; ACTION_DIM],
}

impl<T: Scalar> ActorTape<T> {
    pub fn new(input_dim: usize) -> Self {
        let z = T::zero();
        ActorTape {
            input: vec![z; input_dim],
            h1: vec![z; HEAD_HIDDEN],
            h2: vec![z; HEAD_HIDDEN],
            mean: [z; ACTION_DIM],
            raw: [z; ACTION_DIM],
            logstd: [z; ACTION_DIM],
        }
    }
}

pub fn actor_forward<T: Scalar>(params: &Params<T>, head_input: &[T], tape: &mut ActorTape<T>) {
    debug_assert_eq!(head_input.len(), params.arch().head_input_dim());
    tape.input.copy_from_slice(head_input);
    linear(params.seg("actor.l1.w"), params.seg("actor.l1.b"), &tape.input, &mut tape.h1);
    relu_inplace(&mut tape.h1);
    linear(params.seg("actor.l2.w"), params.seg("actor.l2.b"), &tape.h1, &mut tape.h2);
    relu_inplace(&mut tape.h2);
    let mut mean = [T::zero(); ACTION_DIM];
    let mut raw = [T::zero(); ACTION_DIM];
    linear(params.seg("actor.mean.w"), params.seg("actor.mean.b"), &tape.h2, &mut mean);
    linear(params.seg("actor.logstd.w"), params.seg("actor.logstd.b"), &tape.h2, &mut raw);
    tape.mean = mean;
    tape.raw = raw;
    let mid = T::from_f32(0.5 * (LOG_STD_MIN + LOG_STD_MAX));
    let half = T::from_f32(0.5 * (LOG_STD_MAX - LOG_STD_MIN));
    for i in 0..ACTION_DIM {
        tape.logstd[i] = mid + half * raw[i].tanh();
    }
}

/// Propagate gradients w.r.t. the head outputs back through the actor MLP.
/// Returns nothing; weight gradients accumulate into `grad` and, when
/// requested, the input gradient accumulates into `dinput`.
pub fn actor_backward<T: Scalar>(
    params: &Params<T>,
    tape: &ActorTape<T>,
    dmean: &[T; ACTION_DIM],
    dlogstd: &[T; ACTION_DIM],
    grad: &mut [T],
    dinput: Option<&mut [T]>,
) {
    let layout = params.layout.clone();
    let r = |name: &str| layout.range(name);
    let half = T::from_f32(0.5 * (LOG_STD_MAX - LOG_STD_MIN));
    let mut draw = [T::zero(); ACTION_DIM];
    for i in 0..ACTION_DIM {
        let t = tape.raw[i].tanh();
        draw[i] = dlogstd[i] * half * (T::one() - t * t);
    }

    let mut dh2 = vec![T::zero(); HEAD_HIDDEN];
    {
        let (head, rest) = split_two(grad, r("actor.mean.w"), r("actor.mean.b"));
        linear_backward(params.seg("actor.mean.w"), &tape.h2, dmean, head, rest, Some(&mut dh2));
    }
    {
        let (head, rest) = split_two(grad, r("actor.logstd.w"), r("actor.logstd.b"));
        linear_backward(params.seg("actor.logstd.w"), &tape.h2, &draw, head, rest, Some(&mut dh2));
    }
    relu_backward_inplace(&mut dh2, &tape.h2);

    let mut dh1 = vec![T::zero(); HEAD_HIDDEN];
    {
        let (w, b) = split_two(grad, r("actor.l2.w"), r("actor.l2.b"));
        linear_backward(params.seg("actor.l2.w"), &tape.h1, &dh2, w, b, Some(&mut dh1));
    }
    relu_backward_inplace(&mut dh1, &tape.h1);
    {
        let (w, b) = split_two(grad, r("actor.l1.w"), r("actor.l1.b"));
        linear_backward(params.seg("actor.l1.w"), &tape.input, &dh1, w, b, dinput);
    }
}

#[derive(Debug, Clone)]
pub struct CriticTape<T: Scalar = f32> {
    pub input: Vec<T>,
    pub h1: Vec<T>,
    pub h2: Vec<T>,
}

impl<T: Scalar> CriticTape<T> {
    pub fn new(input_dim: usize) -> Self {
        let z = T::zero();
        CriticTape {
            input: vec![z; input_dim],
            h1: vec![z; HEAD_HIDDEN],
            h2: vec![z; HEAD_HIDDEN],
        }
    }
}

/// Q value of one critic (`which` is 1 or 2) for `[feature ++ action]`.
pub fn critic_forward<T: Scalar>(params: &Params<T>, which: usize, head_input: &[T], tape: &mut CriticTape<T>) -> T {
    let c = format!("critic{which}");
    tape.input.copy_from_slice(head_input);
    linear(params.seg(&format!("{c}.l1.w")), params.seg(&format!("{c}.l1.b")), &tape.input, &mut tape.h1);
    relu_inplace(&mut tape.h1);
    linear(params.seg(&format!("{c}.l2.w")), params.seg(&format!("{c}.l2.b")), &tape.h1, &mut tape.h2);
    relu_inplace(&mut tape.h2);
    let mut q = [T::zero(); 1];
    linear(params.seg(&format!("{c}.out.w")), params.seg(&format!("{c}.out.b")), &tape.h2, &mut q);
    q[0]
}

pub fn critic_backward<T: Scalar>(
    params: &Params<T>,
    which: usize,
    tape: &CriticTape<T>,
    dq: T,
    grad: &mut [T],
    dinput: Option<&mut [T]>,
) {
    let c = format!("critic{which}");
    let layout = params.layout.clone();
    let r = |name: &str| layout.range(name);
    let mut dh2 = vec![T::zero(); HEAD_HIDDEN];
    {
        let (w, b) = split_two(grad, r(&format!("{c}.out.w")), r(&format!("{c}.out.b")));
        linear_backward(params.seg(&format!("{c}.out.w")), &tape.h2, &[dq], w, b, Some(&mut dh2));
    }
    relu_backward_inplace(&mut dh2, &tape.h2);
    let mut dh1 = vec![T::zero(); HEAD_HIDDEN];
    {
        let (w, b) = split_two(grad, r(&format!("{c}.l2.w")), r(&format!("{c}.l2.b")));
        linear_backward(params.seg(&format!("{c}.l2.w")), &tape.h1, &dh2, w, b, Some(&mut dh1));
    }
    relu_backward_inplace(&mut dh1, &tape.h1);
    {
        let (w, b) = split_two(grad, r(&format!("{c}.l1.w")), r(&format!("{c}.l1.b")));
        linear_backward(params.seg(&format!("{c}.l1.w")), &tape.input, &dh1, w, b, dinput);
    }
}

/// Borrow two disjoint layout ranges out of the flat gradient buffer.
fn split_two<T: Scalar>(
    grad: &mut [T],
    a: std::ops::Range<usize>,
    b: std::ops::Range<usize>,
) -> (&mut [T], &mut [T]) {
    debug_assert!(a.end <= b.start);
    let (lo, hi) = grad.split_at_mut(b.start);
    (&mut lo[a.start..a.end], &mut hi[..b.end - b.start])
}

/// Standard normal draws for the reparameterized sample.
pub fn sample_eps<T: Scalar>(rng: &mut ChaCha8Rng) -> [T; ACTION_DIM] {
    let mut eps = [T::zero(); ACTION_DIM];
    for e in eps.iter_mut() {
        let u1: f64 = rng.random_range(1e-12..1.0);
        let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        *e = T::from_f64((-2.0 * u1.ln()).sqrt() * u2.cos());
    }
    eps
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Reparameterized squashed-Gaussian sample: pre-squash `u`, action
/// `tanh(u)`, and the log density including the change-of-variables term.
#[derive(Debug, Clone, Copy)]
pub struct SquashedSample<T: Scalar = f32> {
    pub u: [T; ACTION_DIM],
    pub action: [T; ACTION_DIM],
    pub log_prob: f64,
}

pub fn squashed_sample<T: Scalar>(
    mean: &[T; ACTION_DIM],
    logstd: &[T; ACTION_DIM],
    eps: &[T; ACTION_DIM],
) -> SquashedSample<T> {
    let mut u = [T::zero(); ACTION_DIM];
    let mut action = [T::zero(); ACTION_DIM];
    let mut log_prob = 0.0f64;
    for i in 0..ACTION_DIM {
        let std = logstd[i].exp();
        u[i] = mean[i] + std * eps[i];
        action[i] = u[i].tanh();
        let ui = u[i].as_f64();
        // log N(u; mean, std) with u = mean + std*eps, minus the tanh
        // correction in the numerically stable form.
        log_prob += -0.5 * eps[i].as_f64() * eps[i].as_f64()
            - logstd[i].as_f64()
            - 0.5 * LOG_2PI
            - 2.0 * (std::f64::consts::LN_2 - ui - softplus(-2.0 * ui));
    }
    SquashedSample { u, action, log_prob }
}

/// Deterministic (squashed mean) action.
pub fn deterministic_action<T: Scalar>(mean: &[T; ACTION_DIM]) -> [T; ACTION_DIM] {
    let mut a = [T::zero(); ACTION_DIM];
    for i in 0..ACTION_DIM {
        a[i] = mean[i].tanh();
    }
    a
}

/// Gradients of `log_prob` w.r.t. mean and logstd with `eps` held fixed.
pub fn log_prob_grads<T: Scalar>(
    logstd: &[T; ACTION_DIM],
    eps: &[T; ACTION_DIM],
    u: &[T; ACTION_DIM],
) -> ([T; ACTION_DIM], [T; ACTION_DIM]) {
    let two = T::from_f32(2.0);
    let mut dmean = [T::zero(); ACTION_DIM];
    let mut dlogstd = [T::zero(); ACTION_DIM];
    for i in 0..ACTION_DIM {
        let t = u[i].tanh();
        dmean[i] = two * t;
        dlogstd[i] = two * t * logstd[i].exp() * eps[i] - T::one();
    }
    (dmean, dlogstd)
}

/// d(action)/d(mean) and d(action)/d(logstd) for the reparameterized sample.
pub fn action_grads<T: Scalar>(
    logstd: &[T; ACTION_DIM],
    eps: &[T; ACTION_DIM],
    action: &[T; ACTION_DIM],
) -> ([T; ACTION_DIM], [T; ACTION_DIM]) {
    let mut dmean = [T::zero(); ACTION_DIM];
    let mut dlogstd = [T::zero(); ACTION_DIM];
    for i in 0..ACTION_DIM {
        let sech2 = T::one() - action[i] * action[i];
        dmean[i] = sech2;
        dlogstd[i] = sech2 * logstd[i].exp() * eps[i];
    }
    (dmean, dlogstd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::arch::{ArchConfig, Layout};
    use crate::rng::child_rng;
    use rand::Rng;

    fn actor_setup() -> (Params, ActorTape) {
        let arch = ArchConfig::new(1, false);
        let params = Params::init(Layout::new(arch), &mut child_rng(0, "init", 0));
        let tape = ActorTape::new(arch.head_input_dim());
        (params, tape)
    }

    #[test]
    fn logstd_stays_in_bounds() {
        let (params, mut tape) = actor_setup();
        let mut rng = child_rng(1, "feat", 0);
        for _ in 0..32 {
            let feat: Vec<f32> = (0..64).map(|_| rng.random_range(-5.0..5.0)).collect();
            actor_forward(&params, &feat, &mut tape);
            for &l in &tape.logstd {
                assert!(l > LOG_STD_MIN && l < LOG_STD_MAX);
            }
        }
    }

    #[test]
    fn near_deterministic_at_log_std_floor() {
        let logstd = [LOG_STD_MIN; ACTION_DIM];
        let mean = [0.3f32, -0.2, 0.8, 0.0, -0.9];
        let mut rng = child_rng(2, "eps", 0);
        let base = squashed_sample(&mean, &logstd, &sample_eps(&mut rng));
        for _ in 0..16 {
            let s = squashed_sample(&mean, &logstd, &sample_eps(&mut rng));
            for i in 0..ACTION_DIM {
                assert!((s.action[i] - base.action[i]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn pre_squash_sample_mean_is_statistically_centered() {
        // 10^4 standard-normal draws: sample mean within 3 sigma / sqrt(n).
        let mean = [0.0f32; ACTION_DIM];
        let logstd = [0.0f32; ACTION_DIM];
        let mut rng = child_rng(3, "eps", 0);
        let n = 10_000;
        let mut acc = [0.0f64; ACTION_DIM];
        for _ in 0..n {
            let s = squashed_sample(&mean, &logstd, &sample_eps(&mut rng));
            for i in 0..ACTION_DIM {
                acc[i] += s.u[i] as f64;
            }
        }
        let bound = 3.0 / (n as f64).sqrt();
        for a in acc {
            assert!((a / n as f64).abs() < bound, "sample mean {} vs {bound}", a / n as f64);
        }
    }

    #[test]
    fn log_prob_matches_density_oracle() {
        // Independent oracle: Gaussian density plus naive change-of-variables
        // log(1 - tanh(u)^2) computed in f64.
        let mut rng = child_rng(4, "draws", 0);
        for _ in 0..100 {
            let mut mean = [0.0f32; ACTION_DIM];
            let mut logstd = [0.0f32; ACTION_DIM];
            for i in 0..ACTION_DIM {
                mean[i] = rng.random_range(-1.5..1.5);
                logstd[i] = rng.random_range(-2.0..0.5);
            }
            let eps = sample_eps(&mut rng);
            let s = squashed_sample(&mean, &logstd, &eps);
            let mut oracle = 0.0f64;
            for i in 0..ACTION_DIM {
                let std = (logstd[i] as f64).exp();
                let u = s.u[i] as f64;
                let m = mean[i] as f64;
                let gauss =
                    -0.5 * ((u - m) / std).powi(2) - std.ln() - 0.5 * LOG_2PI;
                let jac = (1.0 - u.tanh().powi(2)).max(1e-300).ln();
                oracle += gauss - jac;
            }
            assert!(
                (s.log_prob - oracle).abs() < 1e-6,
                "log_prob {} oracle {oracle}",
                s.log_prob
            );
        }
    }

    #[test]
    fn log_prob_gradients_match_finite_differences() {
        let mut rng = child_rng(5, "draws", 0);
        let mean = [0.2f32, -0.4, 0.1, 0.7, -0.3];
        let logstd = [-0.5f32, 0.1, -1.0, -0.2, 0.3];
        let eps = sample_eps(&mut rng);
        let s = squashed_sample(&mean, &logstd, &eps);
        let (dmean, dlogstd) = log_prob_grads(&logstd, &eps, &s.u);
        let h = 1e-4f32;
        for i in 0..ACTION_DIM {
            let mut mp = mean;
            mp[i] += h;
            let mut mm = mean;
            mm[i] -= h;
            let fd = (squashed_sample(&mp, &logstd, &eps).log_prob
                - squashed_sample(&mm, &logstd, &eps).log_prob)
                / (2.0 * h as f64);
            assert!((fd - dmean[i] as f64).abs() < 1e-3 * fd.abs().max(1.0));
            let mut lp = logstd;
            lp[i] += h;
            let mut lm = logstd;
            lm[i] -= h;
            let fd2 = (squashed_sample(&mean, &lp, &eps).log_prob
                - squashed_sample(&mean, &lm, &eps).log_prob)
                / (2.0 * h as f64);
            assert!((fd2 - dlogstd[i] as f64).abs() < 1e-3 * fd2.abs().max(1.0));
        }
    }

    #[test]
    fn critic_backward_matches_finite_difference_on_input() {
        let arch = ArchConfig::new(1, false);
        let params = Params::init(Layout::new(arch), &mut child_rng(6, "init", 0));
        let dim = arch.head_input_dim() + ACTION_DIM;
        let mut tape = CriticTape::new(dim);
        let mut rng = child_rng(7, "in", 0);
        let input: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let _ = critic_forward(&params, 1, &input, &mut tape);
        let mut grad = vec![0.0f32; params.layout.total];
        let mut dinput = vec![0.0f32; dim];
        critic_backward(&params, 1, &tape, 1.0, &mut grad, Some(&mut dinput));
        let h = 1e-3f32;
        for i in (0..dim).step_by(7) {
            let mut xp = input.clone();
            xp[i] += h;
            let mut xm = input.clone();
            xm[i] -= h;
            let qp = critic_forward(&params, 1, &xp, &mut tape);
            let qm = critic_forward(&params, 1, &xm, &mut tape);
            let fd = (qp - qm) / (2.0 * h);
            assert!(
                (fd - dinput[i]).abs() < 2e-2 * fd.abs().max(0.1),
                "dinput[{i}] {} vs fd {fd}",
                dinput[i]
            );
        }
    }
}
