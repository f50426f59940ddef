//! Joint training of the block cascade.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, Activations, GradientSet, Matrix, TrainConfig, PROB_FLOOR};
use crate::phy::LabeledSample;
use crate::sicnet::{LossWeights, SicNetModel};

/// Per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

/// Batch view of the dataset: features plus one label matrix per block that
/// carries a positive loss weight.
struct BatchData {
    features: Matrix,
    labels: Vec<Option<Matrix>>,
}

fn assemble(
    model: &SicNetModel,
    dataset: &[LabeledSample],
    weights: &LossWeights,
) -> Result<BatchData> {
    let k = model.user_index();
    let m = model.constellation_size();
    if weights.values().len() != k {
        return Err(Error::DimMismatch(format!(
            "{} loss weights for {k} blocks",
            weights.values().len()
        )));
    }
    let dim = model.input_dim_y();
    let mut features = Matrix::zeros(dataset.len(), dim);
    for (row, sample) in dataset.iter().enumerate() {
        features.row_mut(row).copy_from_slice(&sample.features(dim));
    }
    let mut labels = Vec::with_capacity(k);
    for block in 0..k {
        if weights.values()[block] == 0.0 {
            labels.push(None);
            continue;
        }
        let mut mat = Matrix::zeros(dataset.len(), m);
        for (row, sample) in dataset.iter().enumerate() {
            let hot = sample
                .onehots
                .get(block)
                .and_then(Option::as_ref)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "block {} carries loss weight {} but sample {row} has no label for it",
                        block + 1,
                        weights.values()[block]
                    ))
                })?;
            if hot.len() != m {
                return Err(Error::DimMismatch(format!(
                    "label width {} != constellation size {m}",
                    hot.len()
                )));
            }
            mat.row_mut(row).copy_from_slice(hot);
        }
        labels.push(Some(mat));
    }
    Ok(BatchData { features, labels })
}

/// Weighted cross-entropy loss of a batch and its gradients for every block.
///
/// The loss is the batch mean of `sum_i phi_i * CE(p_i, q_i)`. Gradients
/// flow through the concatenated soft inputs into upstream blocks, so with
/// purely local weights the early blocks still receive gradient via the
/// wiring.
pub fn loss_and_gradients(
    model: &SicNetModel,
    features: &Matrix,
    labels: &[Option<Matrix>],
    weights: &LossWeights,
) -> Result<(f64, Vec<GradientSet>)> {
    let k = model.user_index();
    let m = model.constellation_size();
    let batch = features.rows();
    debug_assert!(batch > 0);

    // Forward, accumulating the concatenated input of each block.
    let mut acts: Vec<Activations> = Vec::with_capacity(k);
    let mut input = features.clone();
    for block in model.blocks() {
        let a = block.forward(&input)?;
        input = input.hcat(a.output());
        acts.push(a);
    }

    // Loss and the direct (loss-term) gradient on each block output.
    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut out_grads: Vec<Matrix> = (0..k).map(|_| Matrix::zeros(batch, m)).collect();
    for i in 0..k {
        let phi = weights.values()[i];
        let Some(q) = labels[i].as_ref() else { continue };
        if phi == 0.0 {
            continue;
        }
        let p = acts[i].output();
        let grad = &mut out_grads[i];
        for b in 0..batch {
            for j in 0..m {
                let qv = q[(b, j)];
                if qv != 0.0 {
                    let pv = p[(b, j)].max(PROB_FLOOR);
                    loss -= phi * qv * pv.ln() * scale;
                    grad[(b, j)] = -phi * qv / pv * scale;
                }
            }
        }
    }

    // Backward from the deepest block; input gradients feed the received
    // value (discarded) and every earlier block's output.
    let dim = model.input_dim_y();
    let mut grads: Vec<Option<GradientSet>> = (0..k).map(|_| None).collect();
    for i in (0..k).rev() {
        let (gset, in_grad) = model.blocks()[i].backward(&acts[i], &out_grads[i])?;
        grads[i] = Some(gset);
        for upstream in 0..i {
            let offset = dim + upstream * m;
            for b in 0..batch {
                let src = in_grad.row(b);
                let dst = out_grads[upstream].row_mut(b);
                for j in 0..m {
                    dst[j] += src[offset + j];
                }
            }
        }
    }
    Ok((loss, grads.into_iter().map(Option::unwrap).collect()))
}

/// Trains the cascade in place with Adam on shuffled mini-batches.
///
/// Starts from the model's current parameters with fresh optimizer state.
/// The final partial batch of an epoch is used as-is. Fully deterministic
/// given `(dataset, weights, config)`.
pub fn train(
    model: &mut SicNetModel,
    dataset: &[LabeledSample],
    weights: &LossWeights,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let data = assemble(model, dataset, weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam: Vec<AdamState> = model.blocks().iter().map(AdamState::new).collect();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let features = data.features.gather_rows(chunk);
            let labels: Vec<Option<Matrix>> = data
                .labels
                .iter()
                .map(|l| l.as_ref().map(|mat| mat.gather_rows(chunk)))
                .collect();
            let (loss, grads) = loss_and_gradients(model, &features, &labels, weights)?;
            for (i, grad) in grads.iter().enumerate() {
                adam_step(&mut model.blocks_mut()[i], grad, &mut adam[i], config.learning_rate);
            }
            loss_sum += loss * chunk.len() as f64;
        }
        epoch_losses.push(loss_sum / dataset.len() as f64);
    }
    Ok(TrainReport { epoch_losses })
}

/// Online retraining: same procedure as [`train`] but keyed by an epoch
/// budget — warm start from the current parameters, fresh Adam moments.
/// `epochs == 0` leaves the model untouched.
pub fn retrain(
    model: &mut SicNetModel,
    dataset: &[LabeledSample],
    weights: &LossWeights,
    epochs: usize,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if epochs == 0 {
        return Ok(TrainReport {
            epoch_losses: Vec::new(),
        });
    }
    let cfg = TrainConfig {
        epochs,
        ..config.clone()
    };
    train(model, dataset, weights, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_difference_gradient;
    use crate::phy::{
        generate_dataset, snr_db_to_noise_variance, ChannelKind, ChannelSpec, Constellation,
        PowerProfile,
    };
    use crate::sicnet::default_hidden_widths;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_dataset(n: usize, seed: u64) -> Vec<LabeledSample> {
        let powers = PowerProfile::new(vec![16.0, 4.0, 1.0]).unwrap();
        let constellation = Constellation::bpsk();
        let spec = ChannelSpec::new(
            ChannelKind::LinearGaussian,
            Complex64::new(1.0, 0.0),
            snr_db_to_noise_variance(6.0),
            0.0,
            1,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        generate_dataset(n, &powers, &constellation, &spec, 3, &mut rng).unwrap()
    }

    fn batch_of(model: &SicNetModel, ds: &[LabeledSample]) -> (Matrix, Vec<Option<Matrix>>) {
        let data = assemble(model, ds, &LossWeights::combined(model.user_index())).unwrap();
        (data.features, data.labels)
    }

    #[test]
    fn perfect_onehot_outputs_give_zero_loss() {
        // Saturate the softmax: zero weights plus a huge bias on index 0
        // make every block emit exactly (1, 0) in f64. Matching labels then
        // cost nothing, and the loss is nonnegative in general.
        let mut model = SicNetModel::build(2, 2, &default_hidden_widths(2), 1, 1).unwrap();
        for block in model.blocks_mut() {
            for layer in block.layers_mut() {
                layer.weights.as_mut_slice().fill(0.0);
                layer.bias.fill(0.0);
            }
            let last = block.layers().len() - 1;
            block.layers_mut()[last].bias[0] = 1000.0;
        }
        let out = model.forward(Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(out.probs, vec![vec![1.0, 0.0], vec![1.0, 0.0]]);

        let matching = vec![LabeledSample {
            received: Complex64::new(1.0, 0.0),
            onehots: vec![Some(vec![1.0, 0.0]), Some(vec![1.0, 0.0])],
        }];
        let (features, labels) = batch_of(&model, &matching);
        let (loss, _) =
            loss_and_gradients(&model, &features, &labels, &LossWeights::combined(2)).unwrap();
        assert_eq!(loss, 0.0);

        // A mismatched label costs a clamped log instead of going infinite.
        let mismatched = vec![LabeledSample {
            received: Complex64::new(1.0, 0.0),
            onehots: vec![Some(vec![1.0, 0.0]), Some(vec![0.0, 1.0])],
        }];
        let (features, labels) = batch_of(&model, &mismatched);
        let (loss, _) =
            loss_and_gradients(&model, &features, &labels, &LossWeights::combined(2)).unwrap();
        assert!(loss > 0.0 && loss.is_finite());
    }

    #[test]
    fn missing_labels_rejected_only_when_weighted() {
        let model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 2).unwrap();
        let local_only = vec![LabeledSample {
            received: Complex64::new(0.5, 0.0),
            onehots: vec![None, None, Some(vec![1.0, 0.0])],
        }];
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 1,
            ..TrainConfig::default()
        };
        // Local loss needs only the final label.
        let mut m1 = model.clone();
        assert!(train(&mut m1, &local_only, &LossWeights::local(3), &cfg).is_ok());
        // Combined loss requires all of them.
        let mut m2 = model.clone();
        assert!(train(&mut m2, &local_only, &LossWeights::combined(3), &cfg).is_err());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let ds = small_dataset(300, 5);
        let cfg = TrainConfig {
            epochs: 3,
            seed: 9,
            ..TrainConfig::default()
        };
        let run = || {
            let mut model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 11).unwrap();
            let report = train(&mut model, &ds, &LossWeights::combined(3), &cfg).unwrap();
            (model, report)
        };
        let (m1, r1) = run();
        let (m2, r2) = run();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn loss_decreases_on_small_run() {
        let ds = small_dataset(500, 6);
        let cfg = TrainConfig {
            epochs: 30,
            seed: 4,
            ..TrainConfig::default()
        };
        let mut model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 13).unwrap();
        let report = train(&mut model, &ds, &LossWeights::local(3), &cfg).unwrap();
        let first = report.epoch_losses[0];
        let last = report.final_loss().unwrap();
        assert!(last < first, "loss went {first} -> {last}");
    }

    #[test]
    fn retrain_zero_epochs_is_a_noop() {
        let ds = small_dataset(100, 7);
        let mut model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 17).unwrap();
        let before = model.clone();
        let report =
            retrain(&mut model, &ds, &LossWeights::local(3), 0, &TrainConfig::default()).unwrap();
        assert_eq!(model, before);
        assert!(report.epoch_losses.is_empty());
    }

    #[test]
    fn retraining_on_same_data_does_not_blow_up_loss() {
        let ds = small_dataset(500, 8);
        let cfg = TrainConfig {
            epochs: 40,
            seed: 2,
            ..TrainConfig::default()
        };
        let mut model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 19).unwrap();
        let report = train(&mut model, &ds, &LossWeights::local(3), &cfg).unwrap();
        let trained_loss = report.final_loss().unwrap();
        let again = retrain(&mut model, &ds, &LossWeights::local(3), 10, &cfg).unwrap();
        let retrained_loss = again.final_loss().unwrap();
        assert!(
            retrained_loss <= trained_loss * 1.10,
            "{trained_loss} -> {retrained_loss}"
        );
    }

    #[test]
    fn analytic_gradients_match_finite_differences_per_block() {
        // Check the full cascade gradient, concatenation wiring included,
        // block by block against central differences. Components reached
        // only through two downstream softmaxes can be ~1e-4, so the check
        // carries a small absolute floor for the difference-quotient noise.
        let ds = small_dataset(6, 10);
        for weights in [LossWeights::combined(3), LossWeights::local(3)] {
            let model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 23).unwrap();
            let (features, labels) = batch_of(&model, &ds);
            let (_, analytic) =
                loss_and_gradients(&model, &features, &labels, &weights).unwrap();
            for block_idx in 0..3 {
                let fd = finite_difference_gradient(
                    |candidate| {
                        let mut probe = model.clone();
                        probe.blocks_mut()[block_idx] = candidate.clone();
                        let (loss, _) =
                            loss_and_gradients(&probe, &features, &labels, &weights).unwrap();
                        loss
                    },
                    &model.blocks()[block_idx],
                    1e-5,
                );
                for (la, lf) in analytic[block_idx].layers.iter().zip(&fd.layers) {
                    let pairs = la
                        .weights
                        .as_slice()
                        .iter()
                        .zip(lf.weights.as_slice())
                        .chain(la.bias.iter().zip(&lf.bias));
                    for (&a, &f) in pairs {
                        let tol = 1e-5 * a.abs().max(f.abs()) + 1e-8;
                        assert!(
                            (a - f).abs() <= tol,
                            "block {block_idx}: analytic {a} vs fd {f}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn local_loss_reaches_upstream_blocks_only_through_the_wiring() {
        let ds = small_dataset(8, 11);
        let model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 29).unwrap();
        let (features, labels) = batch_of(&model, &ds);
        let (_, local) =
            loss_and_gradients(&model, &features, &labels, &LossWeights::local(3)).unwrap();
        let (_, combined) =
            loss_and_gradients(&model, &features, &labels, &LossWeights::combined(3)).unwrap();
        let block1_norm = |g: &GradientSet| -> f64 {
            g.layers
                .iter()
                .flat_map(|l| l.weights.as_slice().iter().chain(l.bias.iter()))
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
        };
        // Both objectives push gradient into block 1: combined directly,
        // local only via the concatenated soft inputs.
        assert!(block1_norm(&combined[0]) > 0.0);
        assert!(block1_norm(&local[0]) > 0.0);
    }
}
