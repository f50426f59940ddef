//! SGD and Adam parameter updates.

use crate::error::{Error, Result};
use crate::nn::mlp::{GradientSet, Mlp};

/// Hyperparameters for one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Checks the basic invariants (positive rate, nonzero batch/epochs).
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    /// The hyperparameters used throughout the experiments: Adam with
    /// learning rate 1e-3, batches of 100, 200 epochs.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 100,
            epochs: 200,
            seed: 0,
        }
    }
}

/// Plain gradient step `theta <- theta - eta * g`.
pub fn sgd_step(mlp: &mut Mlp, grads: &GradientSet, learning_rate: f64) {
    assert_eq!(mlp.layers().len(), grads.layers.len(), "gradient shape mismatch");
    for (layer, grad) in mlp.layers_mut().iter_mut().zip(&grads.layers) {
        assert_eq!(layer.weights.rows(), grad.weights.rows());
        assert_eq!(layer.weights.cols(), grad.weights.cols());
        for (w, g) in layer
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(grad.weights.as_slice())
        {
            *w -= learning_rate * g;
        }
        for (b, g) in layer.bias.iter_mut().zip(&grad.bias) {
            *b -= learning_rate * g;
        }
    }
}

/// Adam accumulator state, shape-congruent with one [`Mlp`].
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: GradientSet,
    second_moment: GradientSet,
    timestep: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with the original Adam constants
    /// (beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8).
    pub fn new(mlp: &Mlp) -> Self {
        AdamState {
            first_moment: GradientSet::zeros_like(mlp),
            second_moment: GradientSet::zeros_like(mlp),
            timestep: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }
}

/// One Adam update: moment accumulation, bias correction, parameter step.
pub fn adam_step(mlp: &mut Mlp, grads: &GradientSet, state: &mut AdamState, learning_rate: f64) {
    assert_eq!(mlp.layers().len(), grads.layers.len(), "gradient shape mismatch");
    state.timestep += 1;
    let t = state.timestep as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);

    let update = |params: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..params.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    };

    for (idx, layer) in mlp.layers_mut().iter_mut().enumerate() {
        update(
            layer.weights.as_mut_slice(),
            grads.layers[idx].weights.as_slice(),
            state.first_moment.layers[idx].weights.as_mut_slice(),
            state.second_moment.layers[idx].weights.as_mut_slice(),
        );
        update(
            &mut layer.bias,
            &grads.layers[idx].bias,
            &mut state.first_moment.layers[idx].bias,
            &mut state.second_moment.layers[idx].bias,
        );
    }
}

/// Central-difference gradient of an arbitrary scalar loss over the
/// parameters of `mlp`: `(L(theta+h) - L(theta-h)) / 2h` per parameter.
/// Test oracle for [`Mlp::backward`]; intentionally independent of the
/// reverse-mode path.
pub fn finite_difference_gradient<F>(loss: F, mlp: &Mlp, h: f64) -> GradientSet
where
    F: Fn(&Mlp) -> f64,
{
    assert!(h > 0.0, "step size must be positive");
    let mut work = mlp.clone();
    let mut out = GradientSet::zeros_like(mlp);
    for layer_idx in 0..mlp.layers().len() {
        let n_weights = mlp.layers()[layer_idx].weights.as_slice().len();
        for i in 0..n_weights {
            let original = work.layers()[layer_idx].weights.as_slice()[i];
            work.layers_mut()[layer_idx].weights.as_mut_slice()[i] = original + h;
            let up = loss(&work);
            work.layers_mut()[layer_idx].weights.as_mut_slice()[i] = original - h;
            let down = loss(&work);
            work.layers_mut()[layer_idx].weights.as_mut_slice()[i] = original;
            out.layers[layer_idx].weights.as_mut_slice()[i] = (up - down) / (2.0 * h);
        }
        for i in 0..mlp.layers()[layer_idx].bias.len() {
            let original = work.layers()[layer_idx].bias[i];
            work.layers_mut()[layer_idx].bias[i] = original + h;
            let up = loss(&work);
            work.layers_mut()[layer_idx].bias[i] = original - h;
            let down = loss(&work);
            work.layers_mut()[layer_idx].bias[i] = original;
            out.layers[layer_idx].bias[i] = (up - down) / (2.0 * h);
        }
    }
    out
}

/// Largest relative disagreement between two gradient sets. Components where
/// both sides are below `1e-7` in magnitude count as matching.
pub fn max_relative_error(a: &GradientSet, b: &GradientSet) -> f64 {
    let mut worst: f64 = 0.0;
    let mut component = |x: f64, y: f64| {
        let scale = x.abs().max(y.abs());
        if scale > 1e-7 {
            worst = worst.max((x - y).abs() / scale);
        }
    };
    for (la, lb) in a.layers.iter().zip(&b.layers) {
        for (x, y) in la.weights.as_slice().iter().zip(lb.weights.as_slice()) {
            component(*x, *y);
        }
        for (x, y) in la.bias.iter().zip(&lb.bias) {
            component(*x, *y);
        }
    }
    worst
}
