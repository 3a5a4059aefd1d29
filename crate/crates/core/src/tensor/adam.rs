use serde::{Deserialize, Serialize};

use super::{Real, Tensor};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T = f32> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }
}

/// A parameter tensor together with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct GradPair<T = f32> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Real> GradPair<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        GradPair { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(T::zero());
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_update<T: Real>(param: &mut [T], grad: &[T], state: &mut AdamState<T>, cfg: &AdamConfig) {
    assert_eq!(param.len(), grad.len(), "adam: parameter/gradient length");
    assert_eq!(param.len(), state.m.len(), "adam: moment length");
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
    let bc1 = T::of(1.0 - cfg.beta1.powi(t));
    let bc2 = T::of(1.0 - cfg.beta2.powi(t));
    let (lr, eps) = (T::of(cfg.lr), T::of(cfg.eps));
    for (((p, &g), m), v) in param
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + one_b1 * g;
        *v = b2 * *v + one_b2 * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

pub fn adam_step<T: Real>(
    param: &mut GradPair<T>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    param.grad.expect_shape("adam_step", param.value.shape())?;
    let GradPair { value, grad } = param;
    adam_update(value.data_mut(), grad.data(), state, cfg);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn scalar(x: f64) -> Tensor<f64> {
        Tensor::from_vec(Shape::new(1, 1, 1, 1), vec![x]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut p = GradPair::new(scalar(1.5));
        let mut s = AdamState::new(1);
        adam_step(&mut p, &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p.value.data()[0], 1.5);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = GradPair {
            value: scalar(1.0),
            grad: scalar(1.0),
        };
        let mut s = AdamState::new(1);
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        adam_step(&mut p, &mut s, &cfg).unwrap();
        assert!((p.value.data()[0] - 0.9).abs() < 1e-6);
    }

    #[test]
    fn quadratic_decreases_monotonically() {
        // f(x) = (x - 3)^2 from x = 0
        let mut x = [0.0f64];
        let mut s = AdamState::new(1);
        let cfg = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut prev = f64::INFINITY;
        for step in 0..100 {
            let loss = (x[0] - 3.0).powi(2);
            if step > 0 {
                assert!(loss < prev, "step {step}: {loss} !< {prev}");
            }
            prev = loss;
            let g = [2.0 * (x[0] - 3.0)];
            adam_update(&mut x, &g, &mut s, &cfg);
        }
    }
}
