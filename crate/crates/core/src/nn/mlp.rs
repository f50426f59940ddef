//! Multi-layer perceptron with reverse-mode gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::layer::{Activation, DenseLayer};
use crate::nn::matrix::Matrix;

/// A stack of dense layers. Consecutive layers must be dimension-compatible
/// and softmax is only allowed as the final activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Batch activations recorded by [`Mlp::forward`]: the input plus every
/// layer's output, all retained for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub input: Matrix,
    pub outputs: Vec<Matrix>,
}

impl Activations {
    /// Output of the final layer.
    pub fn output(&self) -> &Matrix {
        self.outputs.last().expect("mlp has at least one layer")
    }
}

/// Per-layer parameter gradients, shape-congruent with an [`Mlp`].
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl GradientSet {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        GradientSet {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: Matrix::zeros(l.out_dim(), l.in_dim()),
                    bias: vec![0.0; l.out_dim()],
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.bias.iter().all(|v| v.is_finite()))
    }
}

impl Mlp {
    /// Assembles an MLP, checking layer chaining and softmax placement.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("mlp needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::DimMismatch(format!(
                    "layer output {} feeds layer input {}",
                    w[0].out_dim(),
                    w[1].in_dim()
                )));
            }
        }
        let last = layers.len() - 1;
        if layers[..last]
            .iter()
            .any(|l| l.activation == Activation::Softmax)
        {
            return Err(Error::InvalidConfig(
                "softmax is only permitted as the final layer".into(),
            ));
        }
        Ok(Mlp { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.out_dim() * l.in_dim() + l.out_dim())
            .sum()
    }

    /// Forward pass over a batch (one sample per row), retaining all layer
    /// outputs for [`Mlp::backward`].
    pub fn forward(&self, inputs: &Matrix) -> Result<Activations> {
        if inputs.cols() != self.in_dim() {
            return Err(Error::DimMismatch(format!(
                "mlp expects input dimension {}, got {}",
                self.in_dim(),
                inputs.cols()
            )));
        }
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = inputs;
        for layer in &self.layers {
            outputs.push(layer.forward_batch(current));
            current = outputs.last().unwrap();
        }
        Ok(Activations {
            input: inputs.clone(),
            outputs,
        })
    }

    /// Reverse-mode pass. `upstream` is the loss gradient w.r.t. the final
    /// output (same shape). Returns parameter gradients summed over the
    /// batch and the gradient w.r.t. the network input, which lets callers
    /// chain gradients across concatenated networks.
    pub fn backward(&self, acts: &Activations, upstream: &Matrix) -> Result<(GradientSet, Matrix)> {
        let last = self.layers.len() - 1;
        if upstream.rows() != acts.input.rows() || upstream.cols() != self.out_dim() {
            return Err(Error::DimMismatch(format!(
                "upstream gradient {}x{} does not match output {}x{}",
                upstream.rows(),
                upstream.cols(),
                acts.input.rows(),
                self.out_dim()
            )));
        }
        if acts.outputs.len() != self.layers.len() || acts.input.cols() != self.in_dim() {
            return Err(Error::DimMismatch(
                "activations do not match this mlp".into(),
            ));
        }
        let mut grads = vec![None; self.layers.len()];
        let mut grad = upstream.clone();
        for idx in (0..=last).rev() {
            let input = if idx == 0 {
                &acts.input
            } else {
                &acts.outputs[idx - 1]
            };
            let (dw, db, in_grad) =
                self.layers[idx].backward_batch(input, &acts.outputs[idx], &grad);
            grads[idx] = Some(LayerGradient {
                weights: dw,
                bias: db,
            });
            grad = in_grad;
        }
        let set = GradientSet {
            layers: grads.into_iter().map(Option::unwrap).collect(),
        };
        debug_assert!(set.is_finite(), "non-finite gradient");
        Ok((set, grad))
    }
}

/// Builds an MLP with the given layer dimensions and activations.
///
/// `dims` has one more entry than `activations`; layer `i` maps
/// `dims[i] -> dims[i+1]`. Weights are drawn uniformly from
/// `[-sqrt(1/fan_in), sqrt(1/fan_in)]`, biases start at zero, and the draw
/// order is fixed so a seed fully determines the parameters.
pub fn init_params(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Mlp> {
    if dims.len() < 2 || activations.len() != dims.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "need n+1 dims for n activations, got {} dims / {} activations",
            dims.len(),
            activations.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(activations.len());
    for (i, &act) in activations.iter().enumerate() {
        let (fan_in, fan_out) = (dims[i], dims[i + 1]);
        let bound = (1.0 / fan_in as f64).sqrt();
        let mut weights = Matrix::zeros(fan_out, fan_in);
        for v in weights.as_mut_slice() {
            *v = rng.random_range(-bound..=bound);
        }
        layers.push(DenseLayer::new(weights, vec![0.0; fan_out], act)?);
    }
    Mlp::new(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layer::softmax;

    fn single_layer(weights: Matrix, activation: Activation) -> Mlp {
        let out = weights.rows();
        Mlp::new(vec![DenseLayer::new(weights, vec![0.0; out], activation).unwrap()]).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mlp = single_layer(Matrix::identity(2), Activation::Identity);
        let input = Matrix::from_vec(1, 2, vec![3.0, -1.0]).unwrap();
        let acts = mlp.forward(&input).unwrap();
        assert_eq!(acts.output().row(0), &[3.0, -1.0]);
    }

    #[test]
    fn relu_layer_clamps_negatives() {
        let mlp = single_layer(Matrix::identity(2), Activation::Relu);
        let input = Matrix::from_vec(1, 2, vec![-5.0, 2.0]).unwrap();
        let acts = mlp.forward(&input).unwrap();
        assert_eq!(acts.output().row(0), &[0.0, 2.0]);
    }

    #[test]
    fn softmax_layer_normalizes_equal_logits() {
        let mlp = single_layer(Matrix::identity(2), Activation::Softmax);
        let input = Matrix::from_vec(1, 2, vec![4.0, 4.0]).unwrap();
        let acts = mlp.forward(&input).unwrap();
        let out = acts.output().row(0);
        assert!((out[0] - 0.5).abs() < 1e-12 && (out[1] - 0.5).abs() < 1e-12);
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let mlp = single_layer(Matrix::identity(2), Activation::Identity);
        let input = Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(mlp.forward(&input).is_err());
    }

    #[test]
    fn softmax_hidden_layer_rejected() {
        let l1 = DenseLayer::new(Matrix::identity(2), vec![0.0; 2], Activation::Softmax).unwrap();
        let l2 = DenseLayer::new(Matrix::identity(2), vec![0.0; 2], Activation::Identity).unwrap();
        assert!(Mlp::new(vec![l1, l2]).is_err());
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product() {
        // y = Wx, scalar loss L = y with upstream gradient 1 -> dL/dW = x^T.
        let mlp = single_layer(Matrix::from_vec(1, 3, vec![0.5, -0.2, 0.1]).unwrap(), Activation::Identity);
        let x = Matrix::from_vec(1, 3, vec![2.0, -3.0, 4.0]).unwrap();
        let acts = mlp.forward(&x).unwrap();
        let upstream = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let (grads, _) = mlp.backward(&acts, &upstream).unwrap();
        assert_eq!(grads.layers[0].weights.row(0), &[2.0, -3.0, 4.0]);
        assert_eq!(grads.layers[0].bias, vec![1.0]);
    }

    #[test]
    fn relu_blocks_gradient_at_negative_preactivation() {
        let mlp = single_layer(Matrix::from_vec(1, 1, vec![1.0]).unwrap(), Activation::Relu);
        let x = Matrix::from_vec(1, 1, vec![-2.0]).unwrap();
        let acts = mlp.forward(&x).unwrap();
        let upstream = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
        let (grads, in_grad) = mlp.backward(&acts, &upstream).unwrap();
        assert_eq!(grads.layers[0].weights.row(0), &[0.0]);
        assert_eq!(in_grad.row(0), &[0.0]);
    }

    #[test]
    fn softmax_backward_matches_jacobian() {
        // Compare the fused softmax backward against the explicit Jacobian
        // J_ij = p_i (delta_ij - p_j) on a small case.
        let w = Matrix::from_vec(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let mlp = single_layer(w, Activation::Softmax);
        let x = Matrix::from_vec(1, 3, vec![0.2, -0.4, 1.1]).unwrap();
        let acts = mlp.forward(&x).unwrap();
        let p = softmax(&[0.2, -0.4, 1.1]);
        let g = [0.7, -0.3, 0.4];
        let upstream = Matrix::from_vec(1, 3, g.to_vec()).unwrap();
        let (_, in_grad) = mlp.backward(&acts, &upstream).unwrap();
        for i in 0..3 {
            let mut expect = 0.0;
            for j in 0..3 {
                let jac = p[j] * (if i == j { 1.0 } else { 0.0 } - p[i]);
                expect += g[j] * jac;
            }
            assert!((in_grad.row(0)[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn init_is_reproducible_and_seed_sensitive() {
        let dims = [1, 24, 12, 2];
        let acts = [Activation::Relu, Activation::Relu, Activation::Softmax];
        let a = init_params(&dims, &acts, 42).unwrap();
        let b = init_params(&dims, &acts, 42).unwrap();
        let c = init_params(&dims, &acts, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Shape bookkeeping: 24x1, 12x24, 2x12.
        assert_eq!(a.layers()[0].weights.rows(), 24);
        assert_eq!(a.layers()[0].weights.cols(), 1);
        assert_eq!(a.layers()[1].weights.rows(), 12);
        assert_eq!(a.layers()[1].weights.cols(), 24);
        assert_eq!(a.layers()[2].weights.rows(), 2);
        assert_eq!(a.layers()[2].weights.cols(), 12);
        // Biases start at zero.
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
    }
}
