use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::nn::ParamTensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for each parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<RealMatrix>,
    v: Vec<RealMatrix>,
    t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes
            .into_iter()
            .map(|(r, c)| (RealMatrix::zeros(r, c), RealMatrix::zeros(r, c)))
            .unzip();
        Self { config, m, v, t: 0 }
    }

    pub fn for_params(config: AdamConfig, params: &[&mut ParamTensor]) -> Self {
        Self::new(config, params.iter().map(|p| p.shape()))
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update using each tensor's accumulated `grad`.
    pub fn step(&mut self, params: &mut [&mut ParamTensor]) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!(
                "optimizer tracks {} tensors, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (i, p) in params.iter().enumerate() {
            if p.shape() != self.m[i].shape() || p.grad.shape() != p.value.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor {i}: {:?} vs optimizer {:?}",
                    p.shape(),
                    self.m[i].shape()
                )));
            }
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let ParamTensor { value, grad } = &mut **p;
            for (((w, &g), mi), vi) in value
                .as_mut_slice()
                .iter_mut()
                .zip(grad.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(params: &mut [&mut ParamTensor], state: &mut AdamState) -> Result<()> {
    state.step(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> ParamTensor {
        ParamTensor::new(RealMatrix::from_vec(1, 1, vec![v]).unwrap())
    }

    #[test]
    fn first_step_is_lr_sized() {
        let cfg = AdamConfig::default();
        let mut p = scalar(0.5);
        p.grad.set(0, 0, 3.0);
        let mut st = AdamState::new(cfg, [(1, 1)]);
        st.step(&mut [&mut p]).unwrap();
        let expected = 0.5 - cfg.lr * 3.0 / (3.0 + cfg.eps);
        assert!((p.value.get(0, 0) - expected).abs() < 1e-15);
        assert!((p.value.get(0, 0) - (0.5 - cfg.lr)).abs() < 1e-10);
    }

    #[test]
    fn zero_gradient_and_zero_lr_freeze() {
        let mut p = scalar(2.0);
        let mut st = AdamState::new(AdamConfig::default(), [(1, 1)]);
        for _ in 0..10 {
            st.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value.get(0, 0), 2.0);

        let mut q = scalar(2.0);
        q.grad.set(0, 0, 5.0);
        let mut st = AdamState::new(AdamConfig { lr: 0.0, ..Default::default() }, [(1, 1)]);
        st.step(&mut [&mut q]).unwrap();
        assert_eq!(q.value.get(0, 0), 2.0);
    }

    #[test]
    fn minimizes_quadratic() {
        let cfg = AdamConfig { lr: 1e-2, ..Default::default() };
        let mut p = scalar(1.0);
        let mut st = AdamState::new(cfg, [(1, 1)]);
        let mut reached = None;
        for i in 0..500 {
            let w = p.value.get(0, 0);
            p.grad.set(0, 0, 2.0 * w);
            st.step(&mut [&mut p]).unwrap();
            if p.value.get(0, 0).abs() < 0.01 && reached.is_none() {
                reached = Some(i + 1);
            }
        }
        assert!(reached.is_some(), "final {}", p.value.get(0, 0));
    }

    #[test]
    fn shape_mismatch() {
        let mut p = ParamTensor::zeros(2, 2);
        let mut st = AdamState::new(AdamConfig::default(), [(1, 1)]);
        assert!(matches!(adam_step(&mut [&mut p], &mut st), Err(Error::ShapeMismatch(_))));
        let mut st = AdamState::new(AdamConfig::default(), [(2, 2), (1, 1)]);
        assert!(st.step(&mut [&mut p]).is_err());
    }
}
