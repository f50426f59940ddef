//! Dense layer with ReLU / softmax / identity activation.

use crate::error::{Error, Result};
use crate::nn::matrix::Matrix;

/// Probabilities are clamped at this floor before taking logarithms, which
/// keeps cross-entropy finite without visibly biasing losses.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Softmax,
}

/// Fully-connected layer: `out = act(W x + b)` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::DimMismatch(format!(
                "bias length {} != layer output dimension {}",
                bias.len(),
                weights.rows()
            )));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Applies the layer to a batch (one sample per row).
    pub fn forward_batch(&self, input: &Matrix) -> Matrix {
        let batch = input.rows();
        let (out_dim, in_dim) = (self.out_dim(), self.in_dim());
        debug_assert_eq!(input.cols(), in_dim);
        let mut out = Matrix::zeros(batch, out_dim);
        for b in 0..batch {
            let x = input.row(b);
            let y = out.row_mut(b);
            for o in 0..out_dim {
                let w = self.weights.row(o);
                let mut acc = self.bias[o];
                for i in 0..in_dim {
                    acc += w[i] * x[i];
                }
                y[o] = acc;
            }
            match self.activation {
                Activation::Identity => {}
                Activation::Relu => {
                    for v in y.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
                Activation::Softmax => softmax_in_place(y),
            }
        }
        out
    }

    /// Backward pass for one layer.
    ///
    /// `input`/`output` are the batch activations recorded by the forward
    /// pass, `out_grad` the loss gradient w.r.t. this layer's output.
    /// Returns the parameter gradients (summed over the batch) and the
    /// gradient w.r.t. the layer input.
    pub fn backward_batch(
        &self,
        input: &Matrix,
        output: &Matrix,
        out_grad: &Matrix,
    ) -> (Matrix, Vec<f64>, Matrix) {
        let batch = input.rows();
        let (out_dim, in_dim) = (self.out_dim(), self.in_dim());
        let mut d_weights = Matrix::zeros(out_dim, in_dim);
        let mut d_bias = vec![0.0; out_dim];
        let mut in_grad = Matrix::zeros(batch, in_dim);
        let mut pre = vec![0.0; out_dim];

        for b in 0..batch {
            let y = output.row(b);
            let g = out_grad.row(b);
            // Gradient w.r.t. the pre-activation.
            match self.activation {
                Activation::Identity => pre.copy_from_slice(g),
                Activation::Relu => {
                    for o in 0..out_dim {
                        pre[o] = if y[o] > 0.0 { g[o] } else { 0.0 };
                    }
                }
                Activation::Softmax => {
                    // d pre_j = p_j (g_j - sum_l g_l p_l)
                    let dot: f64 = (0..out_dim).map(|o| g[o] * y[o]).sum();
                    for o in 0..out_dim {
                        pre[o] = y[o] * (g[o] - dot);
                    }
                }
            }
            let x = input.row(b);
            for o in 0..out_dim {
                let p = pre[o];
                if p == 0.0 {
                    continue;
                }
                d_bias[o] += p;
                let dw = d_weights.row_mut(o);
                for i in 0..in_dim {
                    dw[i] += p * x[i];
                }
                let w = self.weights.row(o);
                let gi = in_grad.row_mut(b);
                for i in 0..in_dim {
                    gi[i] += p * w[i];
                }
            }
        }
        (d_weights, d_bias, in_grad)
    }
}

/// Numerically stable softmax; subtracts the max before exponentiating so
/// arbitrarily large logits cannot overflow.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// Cross-entropy `-sum_j q_j ln p_j` for a one-hot target `q`.
pub fn cross_entropy(probs: &[f64], one_hot: &[f64]) -> Result<f64> {
    if probs.len() != one_hot.len() {
        return Err(Error::DimMismatch(format!(
            "cross_entropy: {} probabilities vs {} targets",
            probs.len(),
            one_hot.len()
        )));
    }
    let mut loss = 0.0;
    for (p, q) in probs.iter().zip(one_hot) {
        if *q != 0.0 {
            loss -= q * p.max(PROB_FLOOR).ln();
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_equal_logits_is_uniform() {
        let p = softmax(&[0.0, 0.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        // Huge equal logits must not overflow.
        let p = softmax(&[1000.0, 1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn softmax_matches_hand_evaluation() {
        // (ln 9, 0) -> (0.9, 0.1)
        let p = softmax(&[9.0_f64.ln(), 0.0]);
        assert!((p[0] - 0.9).abs() < 1e-12);
        assert!((p[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariant_and_normalized() {
        let logits = [0.3, -1.7, 2.4, 0.0];
        let p = softmax(&logits);
        let shifted: Vec<f64> = logits.iter().map(|v| v + 123.456).collect();
        let q = softmax(&shifted);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cross_entropy_examples() {
        // Perfect prediction.
        assert!(cross_entropy(&[1.0, 0.0], &[1.0, 0.0]).unwrap().abs() < 1e-9);
        // Uniform over two classes.
        let l = cross_entropy(&[0.5, 0.5], &[0.0, 1.0]).unwrap();
        assert!((l - 2.0_f64.ln()).abs() < 1e-12);
        // Direct log evaluation.
        let l = cross_entropy(&[0.9, 0.1], &[0.0, 1.0]).unwrap();
        assert!((l + 0.1_f64.ln()).abs() < 1e-12);
        // Length mismatch is rejected.
        assert!(cross_entropy(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn cross_entropy_nonnegative_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let logits: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = softmax(&logits);
            let hot = rng.random_range(0..4);
            let mut q = vec![0.0; 4];
            q[hot] = 1.0;
            let l = cross_entropy(&p, &q).unwrap();
            assert!(l >= 0.0);
        }
    }
}
