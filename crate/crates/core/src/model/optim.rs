use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{ParamGrads, ParamStore};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Share of all steps over which the rate ramps linearly from 0.
    pub warmup_fraction: f64,
    /// Decoupled decay, applied as `p -= lr · weight_decay · p`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            warmup_fraction: 0.1,
            weight_decay: 0.0,
        }
    }
}

/// Adam with bias-corrected moments and a linear warmup.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub total_steps: usize,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore, total_steps: usize) -> Self {
        let zeros = || store.ids().map(|id| vec![0.0; store.get(id).len()]).collect();
        Adam {
            config,
            total_steps,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// `lr · t / w` for `t ≤ w = warmup_fraction · total_steps`, then `lr`.
    pub fn lr_at(&self, t: u64) -> f64 {
        let w = self.config.warmup_fraction * self.total_steps as f64;
        let t = t as f64;
        if w > 0.0 && t <= w {
            self.config.lr * t / w
        } else {
            self.config.lr
        }
    }

    /// Applies one update and returns the rate used.
    pub fn step(&mut self, store: &mut ParamStore, grads: &ParamGrads) -> f64 {
        self.step += 1;
        let lr = self.lr_at(self.step);
        let AdamConfig {
            beta1: b1,
            beta2: b2,
            eps,
            weight_decay,
            ..
        } = self.config;
        let c1 = 1.0 - libm::pow(b1, self.step as f64);
        let c2 = 1.0 - libm::pow(b2, self.step as f64);
        for (i, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let p = store.get_mut(id).data_mut();
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], &grads.grads[i]);
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                p[j] -= lr * mhat / (libm::sqrt(vhat) + eps);
                if weight_decay != 0.0 {
                    p[j] -= lr * weight_decay * p[j];
                }
            }
        }
        lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("w", Tensor::new([3], vec![1.0, -2.0, 0.5]).unwrap());
        s
    }

    #[test]
    fn warmup_is_linear_then_flat() {
        let s = store();
        let adam = Adam::new(AdamConfig::default(), &s, 100);
        assert_eq!(adam.lr_at(5), 5e-5 * 5.0 / 10.0);
        assert_eq!(adam.lr_at(10), 5e-5);
        assert_eq!(adam.lr_at(60), 5e-5);
        let flat = Adam::new(
            AdamConfig {
                warmup_fraction: 0.0,
                ..AdamConfig::default()
            },
            &s,
            100,
        );
        assert_eq!(flat.lr_at(1), 5e-5);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = store();
        let before = s.clone();
        let mut adam = Adam::new(AdamConfig::default(), &s, 10);
        adam.step(&mut s, &ParamGrads::zeros(&before));
        assert_eq!(s, before);
    }

    #[test]
    fn first_step_moves_by_the_rate() {
        // with bias correction the first update is lr · g / (|g| + eps)
        let mut s = store();
        let mut adam = Adam::new(
            AdamConfig {
                lr: 0.1,
                warmup_fraction: 0.0,
                ..AdamConfig::default()
            },
            &s,
            10,
        );
        let g = ParamGrads {
            grads: vec![vec![2.0, -1.0, 0.0]],
        };
        adam.step(&mut s, &g);
        let w = s.get(s.find("w").unwrap()).data();
        assert!((w[0] - (1.0 - 0.1 * 2.0 / (2.0 + 1e-8))).abs() < 1e-15);
        assert!((w[1] - (-2.0 + 0.1 * 1.0 / (1.0 + 1e-8))).abs() < 1e-15);
        assert_eq!(w[2], 0.5);
    }
}
