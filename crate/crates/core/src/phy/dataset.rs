//! Labeled-sample generation for receiver training and evaluation.

use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::phy::channel::{apply_channel, draw_csi_estimate, superpose, ChannelSpec, PowerProfile};
use crate::phy::constellation::Constellation;

/// One transmission: the received value plus the true symbol index of every
/// user (strongest first). Ground truth for Monte Carlo counting.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSample {
    pub received: Complex64,
    pub symbol_indices: Vec<usize>,
}

/// Training sample: received value plus one-hot labels `q_1..q_k`.
///
/// Slot `i` labels the symbol detected at cancellation stage `i + 1`; slots
/// may be `None` when that user's labels are unavailable (for example when
/// only the user of interest's own decoded message is known).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub received: Complex64,
    pub onehots: Vec<Option<Vec<f64>>>,
}

impl LabeledSample {
    /// Network input features: `[re]` for real signals, `[re, im]` for
    /// complex ones.
    pub fn features(&self, signal_dim: usize) -> Vec<f64> {
        match signal_dim {
            1 => vec![self.received.re],
            _ => vec![self.received.re, self.received.im],
        }
    }
}

/// Draws `count` transmissions with i.i.d. uniform symbols per user.
///
/// The channel applies `spec.h`; when `spec.csi_error_variance > 0` a fresh
/// noisy estimate of `h` is drawn for every sample, modeling data generated
/// under channel-knowledge error. Test sets use `csi_error_variance = 0` so
/// the true coefficient is applied.
pub fn generate_raw<R: Rng + ?Sized>(
    count: usize,
    powers: &PowerProfile,
    constellation: &Constellation,
    spec: &ChannelSpec,
    rng: &mut R,
) -> Result<Vec<TxSample>> {
    let users = powers.num_users();
    let m = constellation.size();
    let mut out = Vec::with_capacity(count);
    let mut symbols = vec![Complex64::new(0.0, 0.0); users];
    for _ in 0..count {
        let mut indices = Vec::with_capacity(users);
        for (slot, sym) in symbols.iter_mut().enumerate() {
            let idx = rng.random_range(0..m);
            indices.push(idx);
            *sym = constellation.point(idx);
            let _ = slot;
        }
        let x = superpose(&symbols, powers)?;
        let h = draw_csi_estimate(spec.h, spec.csi_error_variance, spec.signal_dim, rng);
        let y = apply_channel(x, &spec.with_h(h), rng);
        out.push(TxSample {
            received: y,
            symbol_indices: indices,
        });
    }
    Ok(out)
}

/// Generates a labeled training set of `count` samples for the user at
/// cancellation stage `k` (1-based): every sample carries the one-hot labels
/// of stages `1..=k`.
pub fn generate_dataset<R: Rng + ?Sized>(
    count: usize,
    powers: &PowerProfile,
    constellation: &Constellation,
    spec: &ChannelSpec,
    k: usize,
    rng: &mut R,
) -> Result<Vec<LabeledSample>> {
    assert!(k >= 1 && k <= powers.num_users(), "stage {k} out of range");
    let raw = generate_raw(count, powers, constellation, spec, rng)?;
    Ok(raw
        .into_iter()
        .map(|s| LabeledSample {
            received: s.received,
            onehots: s.symbol_indices[..k]
                .iter()
                .map(|&idx| Some(constellation.one_hot_index(idx)))
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::channel::ChannelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (PowerProfile, Constellation, ChannelSpec) {
        let powers = PowerProfile::new(vec![16.0, 4.0, 1.0]).unwrap();
        let constellation = Constellation::bpsk();
        let spec = ChannelSpec::new(
            ChannelKind::LinearGaussian,
            Complex64::new(1.0, 0.0),
            crate::phy::channel::snr_db_to_noise_variance(6.0),
            0.0,
            1,
        )
        .unwrap();
        (powers, constellation, spec)
    }

    #[test]
    fn dataset_is_deterministic_given_seed() {
        let (powers, constellation, spec) = setup();
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        let da = generate_dataset(100, &powers, &constellation, &spec, 3, &mut a).unwrap();
        let db = generate_dataset(100, &powers, &constellation, &spec, 3, &mut b).unwrap();
        assert_eq!(da, db);
    }

    #[test]
    fn labels_are_one_hot_for_all_stages() {
        let (powers, constellation, spec) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = generate_dataset(50, &powers, &constellation, &spec, 3, &mut rng).unwrap();
        for sample in &ds {
            assert_eq!(sample.onehots.len(), 3);
            for q in sample.onehots.iter().map(|q| q.as_ref().unwrap()) {
                assert_eq!(q.iter().filter(|&&v| v == 1.0).count(), 1);
                assert_eq!(q.iter().filter(|&&v| v == 0.0).count(), 1);
            }
        }
    }

    #[test]
    fn symbol_frequencies_are_uniform() {
        let (powers, constellation, spec) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let raw = generate_raw(n, &powers, &constellation, &spec, &mut rng).unwrap();
        for user in 0..3 {
            let ones = raw.iter().filter(|s| s.symbol_indices[user] == 1).count() as f64;
            // Binomial(n, 1/2): 3 sigma band around n/2.
            let sigma = (n as f64 * 0.25).sqrt();
            assert!(
                (ones - n as f64 / 2.0).abs() < 3.0 * sigma,
                "user {user}: {ones} ones"
            );
        }
    }
}
