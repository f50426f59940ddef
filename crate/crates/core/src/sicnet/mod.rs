//! DNN-aided successive interference cancellation receiver.
//!
//! The receiver of the user at stage `k` is a cascade of `k` small dense
//! networks. Block 1 sees only the received value; block `i` additionally
//! sees the softmax outputs of all earlier blocks, concatenated onto its
//! input. Each block ends in a softmax over the constellation, so block `i`
//! emits an estimate of the conditional symbol distribution of stage `i`.
//! The final block's distribution yields hard decisions (argmax) and per-bit
//! LLRs, and the whole cascade trains jointly on labeled samples.

mod checkpoint;
mod train;

pub use train::{loss_and_gradients, retrain, train, TrainReport};

use crate::error::{Error, Result};
use crate::nn::{init_params, Activation, Matrix, Mlp};
use crate::phy::Constellation;
use crate::sic::LlrVector;
use num_complex::Complex64;

/// Hidden widths used by the reference experiments for blocks 1..3:
/// 24-12, 32-16, 48-32. Deeper cascades reuse the block-3 widths.
pub fn default_hidden_widths(k: usize) -> Vec<Vec<usize>> {
    const TABLE: [[usize; 2]; 3] = [[24, 12], [32, 16], [48, 32]];
    (0..k)
        .map(|i| TABLE[i.min(TABLE.len() - 1)].to_vec())
        .collect()
}

/// Soft receiver outputs: one conditional distribution per cascade stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftOutputs {
    pub probs: Vec<Vec<f64>>,
}

impl SoftOutputs {
    /// Distribution of the user of interest (final block).
    pub fn user(&self) -> &[f64] {
        self.probs.last().expect("at least one block")
    }
}

/// Non-negative per-block loss weights `phi_1..phi_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights(Vec<f64>);

impl LossWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidConfig("loss weights must be >= 0".into()));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidConfig("at least one loss weight must be positive".into()));
        }
        Ok(LossWeights(weights))
    }

    /// `(0, ..., 0, 1)`: only the user of interest's own recovery counts.
    pub fn local(k: usize) -> Self {
        let mut w = vec![0.0; k];
        w[k - 1] = 1.0;
        LossWeights(w)
    }

    /// `(1, ..., 1)`: every cancellation stage contributes equally.
    pub fn combined(k: usize) -> Self {
        LossWeights(vec![1.0; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// The cascade of per-stage network blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SicNetModel {
    user_index: usize,
    constellation_size: usize,
    input_dim_y: usize,
    blocks: Vec<Mlp>,
}

impl SicNetModel {
    /// Builds a `k`-block cascade for an `m`-point alphabet.
    ///
    /// Block `i` (1-based) has input width `input_dim_y + (i-1) * m` — the
    /// received value plus every earlier block's full distribution — hidden
    /// ReLU layers of the given widths, and an `m`-way softmax head.
    /// Parameters are seeded deterministically, one derived seed per block.
    pub fn build(
        k: usize,
        m: usize,
        hidden_widths: &[Vec<usize>],
        input_dim_y: usize,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("need at least one block".into()));
        }
        if m < 2 {
            return Err(Error::InvalidConfig("constellation must have at least 2 points".into()));
        }
        if !(input_dim_y == 1 || input_dim_y == 2) {
            return Err(Error::InvalidConfig("input_dim_y must be 1 or 2".into()));
        }
        if hidden_widths.len() != k {
            return Err(Error::InvalidConfig(format!(
                "expected hidden widths for {k} blocks, got {}",
                hidden_widths.len()
            )));
        }
        let mut blocks = Vec::with_capacity(k);
        for (i, widths) in hidden_widths.iter().enumerate() {
            if widths.iter().any(|&w| w == 0) {
                return Err(Error::InvalidConfig(format!("block {} has a zero-width layer", i + 1)));
            }
            let mut dims = Vec::with_capacity(widths.len() + 2);
            dims.push(input_dim_y + i * m);
            dims.extend_from_slice(widths);
            dims.push(m);
            let mut acts = vec![Activation::Relu; widths.len()];
            acts.push(Activation::Softmax);
            blocks.push(init_params(&dims, &acts, seed.wrapping_add(i as u64))?);
        }
        Ok(SicNetModel {
            user_index: k,
            constellation_size: m,
            input_dim_y,
            blocks,
        })
    }

    /// Cascade depth `k` (the stage of the user of interest).
    pub fn user_index(&self) -> usize {
        self.user_index
    }

    /// Constellation size `M`.
    pub fn constellation_size(&self) -> usize {
        self.constellation_size
    }

    /// 1 for real received values, 2 for complex.
    pub fn input_dim_y(&self) -> usize {
        self.input_dim_y
    }

    pub fn blocks(&self) -> &[Mlp] {
        &self.blocks
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut [Mlp] {
        &mut self.blocks
    }

    pub(crate) fn from_parts(
        user_index: usize,
        constellation_size: usize,
        input_dim_y: usize,
        blocks: Vec<Mlp>,
    ) -> Result<Self> {
        let model = SicNetModel {
            user_index,
            constellation_size,
            input_dim_y,
            blocks,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.len() != self.user_index {
            return Err(Error::InvalidConfig(format!(
                "{} blocks for user index {}",
                self.blocks.len(),
                self.user_index
            )));
        }
        for (i, block) in self.blocks.iter().enumerate() {
            let expect_in = self.input_dim_y + i * self.constellation_size;
            if block.in_dim() != expect_in {
                return Err(Error::InvalidConfig(format!(
                    "block {} input dim {} != {expect_in}",
                    i + 1,
                    block.in_dim()
                )));
            }
            if block.out_dim() != self.constellation_size {
                return Err(Error::InvalidConfig(format!(
                    "block {} output dim {} != {}",
                    i + 1,
                    block.out_dim(),
                    self.constellation_size
                )));
            }
            if block.layers().last().unwrap().activation != Activation::Softmax {
                return Err(Error::InvalidConfig(format!("block {} must end in softmax", i + 1)));
            }
        }
        Ok(())
    }

    /// Network input features for a received value.
    pub fn features(&self, y: Complex64) -> Vec<f64> {
        if self.input_dim_y == 1 {
            vec![y.re]
        } else {
            vec![y.re, y.im]
        }
    }

    /// Runs the cascade on one received value: block `i` consumes
    /// `[y, p_1, ..., p_{i-1}]` and emits `p_i`.
    pub fn forward(&self, y: Complex64) -> Result<SoftOutputs> {
        self.forward_features(&self.features(y))
    }

    /// Same as [`SicNetModel::forward`] for a pre-built feature vector.
    pub fn forward_features(&self, features: &[f64]) -> Result<SoftOutputs> {
        if features.len() != self.input_dim_y {
            return Err(Error::DimMismatch(format!(
                "expected {} input features, got {}",
                self.input_dim_y,
                features.len()
            )));
        }
        let mut input = features.to_vec();
        let mut probs = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let batch = Matrix::from_vec(1, input.len(), input.clone())?;
            let acts = block.forward(&batch)?;
            let p = acts.output().row(0).to_vec();
            input.extend_from_slice(&p);
            probs.push(p);
        }
        Ok(SoftOutputs { probs })
    }

    /// Hard decision from the final distribution: the constellation point at
    /// the argmax index (lowest index on exact ties).
    pub fn hard_decide(probs: &[f64], constellation: &Constellation) -> Complex64 {
        constellation.point(Self::argmax(probs))
    }

    /// Argmax with lowest-index tie-breaking.
    pub fn argmax(probs: &[f64]) -> usize {
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (i, &p) in probs.iter().enumerate() {
            if p > best_p {
                best_p = p;
                best = i;
            }
        }
        best
    }

    /// Per-bit LLRs straight from the soft distribution:
    /// `L_n = log(sum_{bit n = 0} p_j / sum_{bit n = 1} p_j)`, clipped.
    pub fn llr_from_soft(probs: &[f64], constellation: &Constellation) -> LlrVector {
        let llrs = (0..constellation.bits_per_symbol())
            .map(|bit| {
                let zero: f64 = constellation
                    .bit_partition(bit, 0)
                    .iter()
                    .map(|&j| probs[j])
                    .sum();
                let one: f64 = constellation
                    .bit_partition(bit, 1)
                    .iter()
                    .map(|&j| probs[j])
                    .sum();
                zero.ln() - one.ln()
            })
            .collect();
        LlrVector::from_raw(llrs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sic::LLR_MAX;

    #[test]
    fn default_widths_follow_the_table() {
        assert_eq!(default_hidden_widths(3), vec![vec![24, 12], vec![32, 16], vec![48, 32]]);
        assert_eq!(default_hidden_widths(2), vec![vec![24, 12], vec![32, 16]]);
        // Deeper cascades reuse the last row.
        assert_eq!(default_hidden_widths(4)[3], vec![48, 32]);
    }

    #[test]
    fn block_input_dims_follow_the_wiring() {
        let model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 7).unwrap();
        let dims: Vec<usize> = model.blocks().iter().map(|b| b.in_dim()).collect();
        assert_eq!(dims, vec![1, 3, 5]);

        let complex = SicNetModel::build(3, 4, &default_hidden_widths(3), 2, 7).unwrap();
        let dims: Vec<usize> = complex.blocks().iter().map(|b| b.in_dim()).collect();
        assert_eq!(dims, vec![2, 6, 10]);

        // Degenerate cascade: single block, no concatenation.
        let single = SicNetModel::build(1, 2, &default_hidden_widths(1), 1, 7).unwrap();
        assert_eq!(single.blocks()[0].in_dim(), 1);
    }

    #[test]
    fn build_rejects_inconsistent_widths() {
        assert!(SicNetModel::build(3, 2, &default_hidden_widths(2), 1, 7).is_err());
        assert!(SicNetModel::build(3, 2, &[vec![24], vec![0], vec![8]], 1, 7).is_err());
        assert!(SicNetModel::build(0, 2, &[], 1, 7).is_err());
    }

    #[test]
    fn forward_outputs_are_distributions() {
        let model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 21).unwrap();
        for y in [-7.3, -1.0, 0.0, 2.4, 7.0] {
            let out = model.forward(Complex64::new(y, 0.0)).unwrap();
            assert_eq!(out.probs.len(), 3);
            for p in &out.probs {
                assert!(p.iter().all(|&v| v >= 0.0));
                let sum: f64 = p.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zeroed_blocks_emit_uniform_distributions() {
        let mut model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 3).unwrap();
        for block in model.blocks_mut() {
            for layer in block.layers_mut() {
                layer.weights.as_mut_slice().fill(0.0);
                layer.bias.fill(0.0);
            }
        }
        let out = model.forward(Complex64::new(4.2, 0.0)).unwrap();
        for p in &out.probs {
            assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_wrong_feature_width() {
        let model = SicNetModel::build(2, 2, &default_hidden_widths(2), 1, 5).unwrap();
        assert!(model.forward_features(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn hard_decide_and_ties() {
        let c = Constellation::bpsk();
        assert_eq!(SicNetModel::hard_decide(&[0.9, 0.1], &c).re, 1.0);
        assert_eq!(SicNetModel::hard_decide(&[0.1, 0.9], &c).re, -1.0);
        // Exact tie goes to the lowest index.
        assert_eq!(SicNetModel::hard_decide(&[0.5, 0.5], &c).re, 1.0);
        // Degenerate one-hot distribution.
        assert_eq!(SicNetModel::hard_decide(&[0.0, 1.0], &c).re, -1.0);
    }

    #[test]
    fn llr_from_soft_bpsk_values() {
        let c = Constellation::bpsk();
        assert_eq!(SicNetModel::llr_from_soft(&[0.5, 0.5], &c).values()[0], 0.0);
        let l = SicNetModel::llr_from_soft(&[0.9, 0.1], &c).values()[0];
        assert!((l - 9.0_f64.ln()).abs() < 1e-12);
        // Degenerate distributions clip.
        assert_eq!(SicNetModel::llr_from_soft(&[1.0, 0.0], &c).values()[0], LLR_MAX);
        assert_eq!(SicNetModel::llr_from_soft(&[0.0, 1.0], &c).values()[0], -LLR_MAX);
    }

    #[test]
    fn qpsk_llrs_split_by_bit_partition() {
        let c = Constellation::qpsk();
        // Labels: 00, 01, 10, 11. p concentrated on index 1 (bits 0,1).
        let l = SicNetModel::llr_from_soft(&[0.1, 0.7, 0.1, 0.1], &c);
        assert_eq!(l.len(), 2);
        // Bit 0: P(0) = 0.8, P(1) = 0.2 -> positive.
        assert!((l.values()[0] - (0.8f64 / 0.2).ln()).abs() < 1e-12);
        // Bit 1: P(0) = 0.2, P(1) = 0.8 -> negative.
        assert!((l.values()[1] - (0.2f64 / 0.8).ln()).abs() < 1e-12);
    }
}
