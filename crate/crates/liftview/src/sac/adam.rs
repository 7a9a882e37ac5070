//! Adam optimizer over flat parameter vectors, restricted to a set of
//! parameter groups so each loss updates only its own segments.

use crate::nnet::arch::ParamGroup;
use crate::nnet::Params;

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub step: u64,
    ranges: Vec<std::ops::Range<usize>>,
    m: Vec<f32>,
    v: Vec<f32>,
}

impl Adam {
    pub fn new(params: &Params, groups: &[ParamGroup], lr: f32) -> Self {
        let mut ranges = Vec::new();
        for g in groups {
            ranges.extend(params.layout.group_ranges(*g));
        }
        ranges.sort_by_key(|r| r.start);
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            ranges,
            m: vec![0.0; params.layout.total],
            v: vec![0.0; params.layout.total],
        }
    }

    pub fn apply(&mut self, params: &mut Params, grad: &[f32]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for range in &self.ranges {
            for i in range.clone() {
                let g = grad[i];
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                let mhat = self.m[i] / bc1;
                let vhat = self.v[i] / bc2;
                params.data[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }

    pub fn state(&self) -> (&[f32], &[f32], u64) {
        (&self.m, &self.v, self.step)
    }

    pub fn restore(&mut self, m: Vec<f32>, v: Vec<f32>, step: u64) {
        assert_eq!(m.len(), self.m.len());
        assert_eq!(v.len(), self.v.len());
        self.m = m;
        self.v = v;
        self.step = step;
    }
}

/// Scalar Adam for the temperature parameter.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarAdam {
    pub m: f64,
    pub v: f64,
    pub step: u64,
}

impl ScalarAdam {
    pub fn apply(&mut self, value: &mut f64, grad: f64, lr: f64) {
        self.step += 1;
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        self.m = b1 * self.m + (1.0 - b1) * grad;
        self.v = b2 * self.v + (1.0 - b2) * grad * grad;
        let mhat = self.m / (1.0 - b1.powi(self.step as i32));
        let vhat = self.v / (1.0 - b2.powi(self.step as i32));
        *value -= lr * mhat / (vhat.sqrt() + eps);
    }
}
