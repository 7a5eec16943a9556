use serde::{Deserialize, Serialize};

use super::model::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments mirroring a model's parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(model: &impl Params, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = model.param_tensors().iter().map(|(_, t)| t.len()).collect();
        AdamState {
            config,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One bias-corrected Adam update of `model` with learning rate `lr`.
    pub fn step(&mut self, model: &mut impl Params, grads: &[Vec<f64>], lr: f64) -> Result<()> {
        {
            let named = model.param_tensors();
            if named.len() != grads.len() || named.len() != self.m.len() {
                return Err(Error::ShapeMismatch { expected: named.len(), actual: grads.len() });
            }
            for ((name, p), g) in named.iter().zip(grads) {
                if p.len() != g.len() {
                    return Err(Error::ShapeMismatch { expected: p.len(), actual: g.len() });
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient(name.clone()));
                }
            }
        }
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in model.param_tensors_mut().into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Dense, Layer, Sequential};

    fn model(w: Vec<f64>) -> Sequential {
        let n = w.len();
        Sequential::new(vec![Layer::Dense(Dense { inputs: n, outputs: 1, weight: w, bias: vec![0.0] })]).unwrap()
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = model(vec![1.0, 1.0, 1.0]);
        let mut adam = AdamState::new(&net, AdamConfig::default());
        let g = vec![vec![1e-3, -5.0, 300.0], vec![0.0]];
        adam.step(&mut net, &g, 0.001).unwrap();
        let w = &net.param_tensors()[0].1;
        for (wk, gk) in w.iter().zip(&g[0]) {
            let expected = 0.001 * gk.abs() / (gk.abs() + 1e-8);
            assert!(((1.0 - wk).abs() - expected).abs() < 1e-15);
            assert!(((1.0 - wk).abs() - 0.001).abs() < 1e-8);
        }
        assert_eq!(net.param_tensors()[1].1, &[0.0]);
    }

    #[test]
    fn zero_grads_and_zero_lr_are_identity() {
        let mut net = model(vec![0.3, -0.7]);
        let before = net.clone();
        let mut adam = AdamState::new(&net, AdamConfig::default());
        for _ in 0..10 {
            adam.step(&mut net, &[vec![0.0, 0.0], vec![0.0]], 0.01).unwrap();
        }
        assert_eq!(net, before);
        adam.step(&mut net, &[vec![1.0, -2.0], vec![0.5]], 0.0).unwrap();
        assert_eq!(net, before);
        assert_eq!(adam.step, 11);
        assert!(adam.m[0][0] != 0.0 && adam.v[0][1] != 0.0);
    }

    #[test]
    fn non_finite_gradient_names_tensor() {
        let mut net = model(vec![0.3]);
        let mut adam = AdamState::new(&net, AdamConfig::default());
        match adam.step(&mut net, &[vec![0.0], vec![f64::NAN]], 0.01) {
            Err(Error::NonFiniteGradient(name)) => assert_eq!(name, "layer0.bias"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
