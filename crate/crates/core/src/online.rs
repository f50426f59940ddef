//! Decision-directed online retraining under block fading.
//!
//! Per fading block: detect with the current network, decode each labeled
//! user's codeword, re-encode and re-modulate the decoded bits into one-hot
//! labels, retrain for a few epochs on those recovered labels, move to the
//! next block. No pilots are transmitted after the initial training; the
//! error-correcting code is what keeps the labels mostly right. True
//! transmitted bits are only ever read to measure the bit error rate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fec::ConvCode;
use crate::harness::derive_seed;
use crate::nn::TrainConfig;
use crate::phy::{
    apply_channel, superpose, ChannelKind, ChannelSpec, Constellation, FadingProfile,
    LabeledSample, PowerProfile,
};
use crate::sic::{sic_hard_detect, sic_residual, sic_soft_llr, SicContext};
use crate::sicnet::{retrain, LossWeights, SicNetModel};

/// Default label-quality gate: retrain on a block only when the decoder's
/// re-encoded word agrees with at least 85% of the raw bit decisions. Well
/// below the ~50% disagreement of a failed decode, comfortably above the
/// few-percent correction rate of a successful one.
pub const DEFAULT_LABEL_MISMATCH_GATE: f64 = 0.15;

/// How decoded bits are produced from the receiver's soft outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    /// Argmax symbol decisions, demodulated, then Hamming-metric Viterbi.
    Hard,
    /// Per-bit LLRs fed to the soft-input Viterbi decoder.
    Soft,
}

/// Which users contribute retraining labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelScope {
    /// Only the user of interest's own decoded message (local loss); the
    /// receiver does not know the other users' coding schemes.
    LocalOnly,
    /// All cancellation stages are decoded and labeled (combined loss).
    AllUsers,
}

/// Which detector the session runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionReceiver {
    /// The network receiver, retrained every block (`retrain_epochs > 0`)
    /// or left static (`retrain_epochs == 0`).
    SicNet(SicNetModel),
    /// Classical SIC with exact knowledge of every block's coefficient.
    /// No retraining; serves as the instantaneous-CSI baseline.
    ClassicalSic,
}

/// Configuration and state for one online run.
#[derive(Debug, Clone)]
pub struct OnlineSession {
    pub receiver: SessionReceiver,
    pub code: ConvCode,
    pub fading: FadingProfile,
    pub blocks: usize,
    pub info_bits_per_block: usize,
    pub decoder: DecoderKind,
    pub label_scope: LabelScope,
    pub retrain_epochs: usize,
    pub powers: PowerProfile,
    pub constellation: Constellation,
    pub noise_variance: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Label-quality gate: a block's labels are used for retraining only if
    /// the decoder's re-encoded word disagrees with the raw symbol decisions
    /// on at most this fraction of coded bits. A successful decode corrects
    /// a few percent of positions; a failed one disagrees on ~half, and
    /// retraining on such labels destroys the receiver. `1.0` disables the
    /// gate and retrains unconditionally.
    pub max_label_mismatch: f64,
}

/// Record of one fading block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTrace {
    pub block_index: usize,
    pub channel_coefficient: f64,
    /// Coded BER of the user of interest, measured before retraining.
    pub pre_retrain_ber: f64,
    pub bit_errors: usize,
    /// One-hot labels handed to retraining (streams x symbols); zero when
    /// the label gate rejected the block or retraining is disabled.
    pub labels_used: usize,
    /// Audit: whether the recovered labels equal the true transmitted
    /// one-hots for every labeled stream.
    pub labels_match_truth: bool,
}

/// Re-encodes and re-modulates decoded bit vectors into one-hot label
/// sequences, one stream per decoded user (pass a single vector under
/// [`LabelScope::LocalOnly`]).
pub fn recover_labels(
    decoded: &[Vec<u8>],
    code: &ConvCode,
    constellation: &Constellation,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let Some(first) = decoded.first() else {
        return Err(Error::InvalidInput("no decoded streams".into()));
    };
    if decoded.iter().any(|d| d.len() != first.len()) {
        return Err(Error::InvalidInput(
            "decoded streams have inconsistent lengths".into(),
        ));
    }
    decoded
        .iter()
        .map(|bits| {
            let reencoded = code.encode(bits)?;
            let indices = constellation.modulate_indices(&reencoded)?;
            Ok(indices
                .into_iter()
                .map(|i| constellation.one_hot_index(i))
                .collect())
        })
        .collect()
}

struct BlockSignals {
    info: Vec<Vec<u8>>,
    symbol_indices: Vec<Vec<usize>>,
    received: Vec<Complex64>,
}

/// One block of coded downlink traffic through the faded channel.
fn transmit_block(session: &OnlineSession, h: f64, rng: &mut ChaCha8Rng) -> Result<BlockSignals> {
    let users = session.powers.num_users();
    let constellation = &session.constellation;
    let info: Vec<Vec<u8>> = (0..users)
        .map(|_| {
            (0..session.info_bits_per_block)
                .map(|_| rng.random_range(0..2u8))
                .collect()
        })
        .collect();
    let symbol_indices: Vec<Vec<usize>> = info
        .iter()
        .map(|bits| {
            let coded = session.code.encode(bits)?;
            constellation.modulate_indices(&coded)
        })
        .collect::<Result<_>>()?;
    let spec = ChannelSpec::new(
        ChannelKind::LinearGaussian,
        Complex64::new(h, 0.0),
        session.noise_variance,
        0.0,
        constellation.signal_dim(),
    )?;
    let n_sym = symbol_indices[0].len();
    let mut received = Vec::with_capacity(n_sym);
    let mut points = vec![Complex64::new(0.0, 0.0); users];
    for t in 0..n_sym {
        for (u, p) in points.iter_mut().enumerate() {
            *p = constellation.point(symbol_indices[u][t]);
        }
        received.push(apply_channel(
            superpose(&points, &session.powers)?,
            &spec,
            rng,
        ));
    }
    Ok(BlockSignals {
        info,
        symbol_indices,
        received,
    })
}

/// Decodes the codeword of cancellation stage `stage` (1-based) from the
/// network's soft outputs for every symbol of the block. Returns the
/// decoded information bits and the raw (pre-decoder) hard bit decisions,
/// which the label gate compares against the re-encoded word.
fn decode_stage_sicnet(
    session: &OnlineSession,
    soft: &[Vec<Vec<f64>>],
    stage: usize,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let constellation = &session.constellation;
    let mut raw = Vec::with_capacity(soft.len() * constellation.bits_per_symbol());
    for p in soft {
        let idx = SicNetModel::argmax(&p[stage - 1]);
        raw.extend_from_slice(constellation.label(idx));
    }
    let info = match session.decoder {
        DecoderKind::Hard => session.code.viterbi_hard(&raw)?,
        DecoderKind::Soft => {
            let mut llrs = Vec::with_capacity(soft.len() * constellation.bits_per_symbol());
            for p in soft {
                llrs.extend_from_slice(
                    SicNetModel::llr_from_soft(&p[stage - 1], constellation).values(),
                );
            }
            session.code.viterbi_soft(&llrs)?
        }
    };
    Ok((info, raw))
}

/// Runs the session: detect, decode, measure, recover labels, retrain.
///
/// The receiver must already be trained for the first block's channel.
/// Identical sessions (same seed) produce identical traces.
pub fn run_online_session(session: &mut OnlineSession) -> Result<Vec<BlockTrace>> {
    let k = session.powers.num_users();
    let constellation = session.constellation.clone();
    let code = session.code.clone();
    let mut traces = Vec::with_capacity(session.blocks);

    for block in 0..session.blocks {
        let h = session.fading.coefficient(block as u64);
        let mut block_rng = ChaCha8Rng::seed_from_u64(derive_seed(
            session.seed,
            &["online-block", &block.to_string()],
        ));
        let signals = transmit_block(session, h, &mut block_rng)?;
        let truth_bits = &signals.info[k - 1];

        // Detect and decode with the current receiver. Each labeled stream
        // carries (stage, decoded info bits, raw pre-decoder bit decisions).
        let (decoded_interest, labeled_streams): (Vec<u8>, Vec<(usize, Vec<u8>, Vec<u8>)>) =
            match &session.receiver {
                SessionReceiver::SicNet(model) => {
                    let soft: Vec<Vec<Vec<f64>>> = signals
                        .received
                        .iter()
                        .map(|&y| Ok(model.forward(y)?.probs))
                        .collect::<Result<_>>()?;
                    let (own, own_raw) = decode_stage_sicnet(session, &soft, model.user_index())?;
                    let mut streams = Vec::new();
                    match session.label_scope {
                        LabelScope::LocalOnly => {
                            streams.push((model.user_index(), own.clone(), own_raw));
                        }
                        LabelScope::AllUsers => {
                            for stage in 1..=model.user_index() {
                                let (bits, raw) = if stage == model.user_index() {
                                    (own.clone(), own_raw.clone())
                                } else {
                                    decode_stage_sicnet(session, &soft, stage)?
                                };
                                streams.push((stage, bits, raw));
                            }
                        }
                    }
                    (own, streams)
                }
                SessionReceiver::ClassicalSic => {
                    let ctx = SicContext::new(
                        Complex64::new(h, 0.0),
                        &session.powers,
                        &constellation,
                        session.noise_variance,
                        k,
                    );
                    let own = match session.decoder {
                        DecoderKind::Hard => {
                            let mut coded = Vec::new();
                            for &y in &signals.received {
                                let det = sic_hard_detect(y, &ctx);
                                coded.extend_from_slice(constellation.label(det[k - 1]));
                            }
                            code.viterbi_hard(&coded)?
                        }
                        DecoderKind::Soft => {
                            let mut llrs = Vec::new();
                            for &y in &signals.received {
                                let det = sic_hard_detect(y, &ctx);
                                let z = sic_residual(y, &ctx, &det[..k - 1]);
                                llrs.extend_from_slice(sic_soft_llr(z, &ctx).values());
                            }
                            code.viterbi_soft(&llrs)?
                        }
                    };
                    (own, Vec::new())
                }
            };

        let bit_errors = decoded_interest
            .iter()
            .zip(truth_bits)
            .filter(|(a, b)| a != b)
            .count();
        let ber = bit_errors as f64 / session.info_bits_per_block as f64;

        // Recover labels and retrain (network receiver only).
        let mut labels_used = 0;
        let mut labels_match_truth = true;
        if let SessionReceiver::SicNet(model) = &mut session.receiver {
            if session.retrain_epochs > 0 {
                let decoded_bits: Vec<Vec<u8>> =
                    labeled_streams.iter().map(|(_, b, _)| b.clone()).collect();
                let label_streams = recover_labels(&decoded_bits, &code, &constellation)?;

                // Label gate: how far did the decoder have to move from the
                // raw decisions? Successful decodes only correct a few
                // percent; a wildly different re-encoded word means the
                // decode failed and its labels would poison the model.
                let gate_ok = labeled_streams.iter().zip(&label_streams).all(
                    |((_, info, raw), _)| {
                        let reencoded = code.encode(info).expect("decoded word re-encodes");
                        let mismatch = reencoded
                            .iter()
                            .zip(raw)
                            .filter(|(a, b)| a != b)
                            .count() as f64
                            / reencoded.len() as f64;
                        mismatch <= session.max_label_mismatch
                    },
                );

                if gate_ok {
                    labels_used = label_streams.iter().map(Vec::len).sum();

                    // Audit only: compare recovered labels with the
                    // transmitted symbol stream.
                    for ((stage, _, _), labels) in labeled_streams.iter().zip(&label_streams) {
                        let truth = &signals.symbol_indices[stage - 1];
                        if labels.iter().zip(truth).any(|(q, &idx)| q[idx] != 1.0) {
                            labels_match_truth = false;
                        }
                    }

                    let model_k = model.user_index();
                    let samples: Vec<LabeledSample> = signals
                        .received
                        .iter()
                        .enumerate()
                        .map(|(t, &y)| {
                            let mut onehots = vec![None; model_k];
                            for ((stage, _, _), labels) in
                                labeled_streams.iter().zip(&label_streams)
                            {
                                onehots[stage - 1] = Some(labels[t].clone());
                            }
                            LabeledSample {
                                received: y,
                                onehots,
                            }
                        })
                        .collect();
                    let weights = match session.label_scope {
                        LabelScope::LocalOnly => LossWeights::local(model_k),
                        LabelScope::AllUsers => LossWeights::combined(model_k),
                    };
                    let cfg = TrainConfig {
                        learning_rate: session.learning_rate,
                        batch_size: session.batch_size,
                        epochs: session.retrain_epochs,
                        seed: derive_seed(session.seed, &["online-retrain", &block.to_string()]),
                    };
                    retrain(model, &samples, &weights, session.retrain_epochs, &cfg)?;
                }
            }
        }

        traces.push(BlockTrace {
            block_index: block,
            channel_coefficient: h,
            pre_retrain_ber: ber,
            bit_errors,
            labels_used,
            labels_match_truth,
        });
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{generate_dataset, snr_db_to_noise_variance};
    use crate::sicnet::{default_hidden_widths, train};

    fn trained_model(h: f64, noise_variance: f64, samples: usize, epochs: usize) -> SicNetModel {
        let powers = PowerProfile::new(vec![16.0, 4.0, 1.0]).unwrap();
        let constellation = Constellation::bpsk();
        let spec = ChannelSpec::new(
            ChannelKind::LinearGaussian,
            Complex64::new(h, 0.0),
            noise_variance,
            0.0,
            1,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5150);
        let ds = generate_dataset(samples, &powers, &constellation, &spec, 3, &mut rng).unwrap();
        let mut model = SicNetModel::build(3, 2, &default_hidden_widths(3), 1, 6).unwrap();
        let cfg = TrainConfig {
            epochs,
            seed: 60,
            ..TrainConfig::default()
        };
        train(&mut model, &ds, &LossWeights::local(3), &cfg).unwrap();
        model
    }

    fn session(receiver: SessionReceiver, noise_variance: f64, fading: FadingProfile) -> OnlineSession {
        OnlineSession {
            receiver,
            code: ConvCode::new(),
            fading,
            blocks: 4,
            info_bits_per_block: 500,
            decoder: DecoderKind::Soft,
            label_scope: LabelScope::LocalOnly,
            retrain_epochs: 10,
            powers: PowerProfile::new(vec![16.0, 4.0, 1.0]).unwrap(),
            constellation: Constellation::bpsk(),
            noise_variance,
            learning_rate: 1e-3,
            batch_size: 100,
            seed: 99,
            max_label_mismatch: DEFAULT_LABEL_MISMATCH_GATE,
        }
    }

    #[test]
    fn recover_labels_round_trip_and_difference_propagation() {
        let code = ConvCode::new();
        let constellation = Constellation::bpsk();
        let bits: Vec<u8> = vec![1, 0, 1, 1, 0, 0, 1, 0];
        let labels = recover_labels(&[bits.clone()], &code, &constellation).unwrap();
        assert_eq!(labels.len(), 1);
        // Exact consistency with encode + modulate.
        let coded = code.encode(&bits).unwrap();
        let indices = constellation.modulate_indices(&coded).unwrap();
        assert_eq!(labels[0].len(), indices.len());
        for (q, idx) in labels[0].iter().zip(&indices) {
            assert_eq!(q[*idx], 1.0);
        }
        // One flipped info bit changes at least two coded positions.
        let mut flipped = bits.clone();
        flipped[3] ^= 1;
        let labels_flipped = recover_labels(&[flipped], &code, &constellation).unwrap();
        let differing = labels[0]
            .iter()
            .zip(&labels_flipped[0])
            .filter(|(a, b)| a != b)
            .count();
        assert!(differing >= 2, "only {differing} label positions changed");
    }

    #[test]
    fn recover_labels_rejects_bad_input() {
        let code = ConvCode::new();
        let constellation = Constellation::bpsk();
        assert!(recover_labels(&[], &code, &constellation).is_err());
        assert!(recover_labels(&[vec![1, 0], vec![1]], &code, &constellation).is_err());
    }

    #[test]
    fn static_channel_session_holds_performance_and_labels_stay_true() {
        // High SNR, no fading: every block decodes cleanly, labels match the
        // transmitted one-hots, and BER stays at zero.
        let nv = snr_db_to_noise_variance(14.0);
        let model = trained_model(1.0, nv, 2000, 60);
        let mut s = session(SessionReceiver::SicNet(model), nv, FadingProfile::Static(1.0));
        let traces = run_online_session(&mut s).unwrap();
        assert_eq!(traces.len(), 4);
        for t in &traces {
            assert_eq!(t.channel_coefficient, 1.0);
            assert_eq!(t.bit_errors, 0, "block {}", t.block_index);
            assert!(t.labels_match_truth);
            // Local scope: one stream, one label per coded BPSK symbol.
            assert_eq!(t.labels_used, ConvCode::coded_len(500));
        }
    }

    #[test]
    fn zero_retrain_epochs_leaves_the_model_static() {
        let nv = snr_db_to_noise_variance(12.0);
        let model = trained_model(1.0, nv, 1500, 40);
        let mut s = session(SessionReceiver::SicNet(model.clone()), nv, FadingProfile::Static(1.0));
        s.retrain_epochs = 0;
        run_online_session(&mut s).unwrap();
        match &s.receiver {
            SessionReceiver::SicNet(m) => assert_eq!(m, &model),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sessions_are_deterministic() {
        let nv = snr_db_to_noise_variance(13.0);
        let model = trained_model(1.0, nv, 1500, 40);
        let run = || {
            let mut s = session(SessionReceiver::SicNet(model.clone()), nv, FadingProfile::Static(1.0));
            s.blocks = 3;
            run_online_session(&mut s).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn classical_sic_session_tracks_known_fading() {
        let nv = snr_db_to_noise_variance(14.0);
        let mut s = session(
            SessionReceiver::ClassicalSic,
            nv,
            FadingProfile::reference_ripple(),
        );
        s.decoder = DecoderKind::Hard;
        s.blocks = 3;
        let traces = run_online_session(&mut s).unwrap();
        // Blocks 0..2 have strong coefficients (1.8, 1.73, 1.55): error-free.
        for t in &traces {
            assert_eq!(t.bit_errors, 0, "block {}", t.block_index);
        }
    }
}
