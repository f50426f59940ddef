//! Shared experiment machinery: systems under test, receiver training, and
//! the SER / coded-BER / online evaluation loops used by the presets.
//!
//! Every evaluation point derives two independent streams from the master
//! seed: a *trial* stream keyed only by (experiment, SNR), so that all
//! detectors at one SNR face identical symbols and noise (paired common
//! random numbers), and a *detector* stream for detector-private randomness
//! such as fresh channel-estimate draws.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fec::ConvCode;
use crate::harness::mc::{estimate_error_rate, ResultRow, StopRule, TrialOutcome};
use crate::harness::seed::{derive_seed, derive_substream};
use crate::nn::TrainConfig;
use crate::online::{
    run_online_session, DecoderKind, LabelScope, OnlineSession, SessionReceiver,
};
use crate::phy::{
    apply_channel, draw_csi_estimate, generate_raw, snr_db_to_noise_variance, superpose,
    ChannelKind, ChannelSpec, Constellation, FadingProfile, LabeledSample, PowerProfile,
};
use crate::sic::{sic_hard_detect, sic_residual, sic_soft_llr, SicContext};
use crate::sicnet::{
    default_hidden_widths, train, LossWeights, SicNetModel,
};

/// A downlink configuration under test. `powers` is the descending rank
/// profile; `interest_rank` is the 1-based rank of the user whose symbol the
/// receivers recover (users ranked below it are uncancelled interference).
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub powers: PowerProfile,
    pub constellation: Constellation,
    pub interest_rank: usize,
    pub h_true: Complex64,
    pub channel_kind: ChannelKind,
}

impl SystemSpec {
    /// The reference three-user BPSK downlink: powers (16, 4, 1), unit
    /// channel, user of interest at rank 3.
    pub fn reference(channel_kind: ChannelKind) -> Self {
        SystemSpec {
            powers: PowerProfile::new(vec![16.0, 4.0, 1.0]).expect("descending"),
            constellation: Constellation::bpsk(),
            interest_rank: 3,
            h_true: Complex64::new(1.0, 0.0),
            channel_kind,
        }
    }

    pub fn channel_spec(&self, noise_variance: f64, csi_error_variance: f64) -> ChannelSpec {
        ChannelSpec::new(
            self.channel_kind,
            self.h_true,
            noise_variance,
            csi_error_variance,
            self.constellation.signal_dim(),
        )
        .expect("valid channel")
    }
}

/// How a network receiver's training data is produced and consumed.
#[derive(Debug, Clone)]
pub struct ReceiverTraining {
    pub samples: usize,
    pub snr_db: f64,
    /// Channel-estimate error variance applied while generating the data.
    pub csi_error_variance: f64,
    pub loss: LossKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Local,
    Combined,
}

impl Default for ReceiverTraining {
    /// The reference training recipe: 5000 samples at 6 dB, 200 epochs of
    /// Adam with batches of 100 and learning rate 1e-3.
    fn default() -> Self {
        ReceiverTraining {
            samples: 5000,
            snr_db: 6.0,
            csi_error_variance: 0.0,
            loss: LossKind::Local,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 100,
        }
    }
}

impl ReceiverTraining {
    fn weights(&self, k: usize) -> LossWeights {
        match self.loss {
            LossKind::Local => LossWeights::local(k),
            LossKind::Combined => LossWeights::combined(k),
        }
    }
}

/// Labeled training set for a `model_k`-block receiver on `system`.
///
/// When the cascade depth matches the interest rank, every stage gets its
/// rank's one-hot label. Mismatched cascades (rank reorderings, extra
/// users) only label the final block with the interest user's symbol, which
/// is all the local loss needs.
pub fn labeled_dataset(
    system: &SystemSpec,
    training: &ReceiverTraining,
    model_k: usize,
    count: usize,
    data_seed: u64,
) -> Result<Vec<LabeledSample>> {
    let spec = system.channel_spec(
        snr_db_to_noise_variance(training.snr_db),
        training.csi_error_variance,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let raw = generate_raw(count, &system.powers, &system.constellation, &spec, &mut rng)?;
    let matched = system.interest_rank == model_k;
    Ok(raw
        .into_iter()
        .map(|s| {
            let mut onehots: Vec<Option<Vec<f64>>> = vec![None; model_k];
            if matched {
                for stage in 0..model_k - 1 {
                    onehots[stage] =
                        Some(system.constellation.one_hot_index(s.symbol_indices[stage]));
                }
            }
            onehots[model_k - 1] = Some(
                system
                    .constellation
                    .one_hot_index(s.symbol_indices[system.interest_rank - 1]),
            );
            LabeledSample {
                received: s.received,
                onehots,
            }
        })
        .collect())
}

/// Builds and trains a fresh `model_k`-block receiver for `system`.
pub fn train_receiver(
    system: &SystemSpec,
    training: &ReceiverTraining,
    model_k: usize,
    seed: u64,
) -> Result<SicNetModel> {
    let mut model = SicNetModel::build(
        model_k,
        system.constellation.size(),
        &default_hidden_widths(model_k),
        system.constellation.signal_dim(),
        derive_seed(seed, &["init"]),
    )?;
    continue_training(&mut model, system, training, seed)?;
    Ok(model)
}

/// Trains an existing receiver further on data from `system` (fresh
/// dataset, fresh optimizer state, current parameters as the start point).
pub fn continue_training(
    model: &mut SicNetModel,
    system: &SystemSpec,
    training: &ReceiverTraining,
    seed: u64,
) -> Result<()> {
    let dataset = labeled_dataset(
        system,
        training,
        model.user_index(),
        training.samples,
        derive_seed(seed, &["data"]),
    )?;
    let cfg = TrainConfig {
        learning_rate: training.learning_rate,
        batch_size: training.batch_size,
        epochs: training.epochs,
        seed: derive_seed(seed, &["shuffle"]),
    };
    train(model, &dataset, &training.weights(model.user_index()), &cfg)?;
    Ok(())
}

/// Symbol-by-symbol detector under SER test.
pub enum SerDetector<'a> {
    /// Model-based SIC; when `csi_error_variance > 0` a fresh channel
    /// estimate is drawn per trial from the detector's own stream.
    ClassicalSic { csi_error_variance: f64 },
    SicNet(&'a SicNetModel),
}

fn snr_tag(snr_db: f64) -> String {
    format!("snr={snr_db:.3}")
}

/// One transmitted symbol for every user plus the channel output.
fn draw_trial(
    system: &SystemSpec,
    spec: &ChannelSpec,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Complex64) {
    let m = system.constellation.size();
    let users = system.powers.num_users();
    let mut indices = Vec::with_capacity(users);
    let mut points = Vec::with_capacity(users);
    for _ in 0..users {
        let idx = rng.random_range(0..m);
        indices.push(idx);
        points.push(system.constellation.point(idx));
    }
    let x = superpose(&points, &system.powers).expect("matching lengths");
    let y = apply_channel(x, spec, rng);
    (indices, y)
}

/// Monte Carlo SER of one detector at one SNR.
pub fn evaluate_ser(
    experiment: &str,
    detector_id: &str,
    detector: &SerDetector,
    system: &SystemSpec,
    snr_db: f64,
    stop: StopRule,
    master_seed: u64,
) -> ResultRow {
    let tag = snr_tag(snr_db);
    let trial_stream = derive_seed(master_seed, &[experiment, "trial", &tag]);
    let detector_stream = derive_seed(master_seed, &[experiment, detector_id, &tag]);
    let noise_variance = snr_db_to_noise_variance(snr_db);
    let spec = system.channel_spec(noise_variance, 0.0);
    let interest = system.interest_rank;

    estimate_error_rate(experiment, detector_id, snr_db, stop, detector_stream, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_substream(trial_stream, t));
        let (indices, y) = draw_trial(system, &spec, &mut rng);
        let detected = match detector {
            SerDetector::ClassicalSic { csi_error_variance } => {
                let h_est = if *csi_error_variance > 0.0 {
                    let mut det_rng =
                        ChaCha8Rng::seed_from_u64(derive_substream(detector_stream, t));
                    draw_csi_estimate(
                        system.h_true,
                        *csi_error_variance,
                        system.constellation.signal_dim(),
                        &mut det_rng,
                    )
                } else {
                    system.h_true
                };
                let ctx = SicContext::new(
                    h_est,
                    &system.powers,
                    &system.constellation,
                    noise_variance,
                    interest,
                );
                sic_hard_detect(y, &ctx)[interest - 1]
            }
            SerDetector::SicNet(model) => {
                let out = model.forward(y).expect("matching input dim");
                SicNetModel::argmax(out.user())
            }
        };
        TrialOutcome {
            errors: (detected != indices[interest - 1]) as u64,
            units: 1,
        }
    })
}

/// Codeword-level receiver under coded-BER test.
pub enum CodedReceiver<'a> {
    SicHard { csi_error_variance: f64 },
    SicSoft { csi_error_variance: f64 },
    SicNetHard(&'a SicNetModel),
    SicNetSoft(&'a SicNetModel),
}

/// Monte Carlo coded BER: each trial transmits one codeword per user
/// (zero-tail terminated) and counts information-bit errors for the user of
/// interest. `stop.max_units` counts information bits.
pub fn evaluate_coded_ber(
    experiment: &str,
    detector_id: &str,
    receiver: &CodedReceiver,
    system: &SystemSpec,
    code: &ConvCode,
    info_bits_per_codeword: usize,
    snr_db: f64,
    stop: StopRule,
    master_seed: u64,
) -> ResultRow {
    let tag = snr_tag(snr_db);
    let trial_stream = derive_seed(master_seed, &[experiment, "coded-trial", &tag]);
    let detector_stream = derive_seed(master_seed, &[experiment, detector_id, &tag]);
    let noise_variance = snr_db_to_noise_variance(snr_db);
    let spec = system.channel_spec(noise_variance, 0.0);
    let constellation = &system.constellation;
    let users = system.powers.num_users();
    let interest = system.interest_rank;

    estimate_error_rate(experiment, detector_id, snr_db, stop, detector_stream, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_substream(trial_stream, t));
        // Transmit one codeword per user.
        let info: Vec<Vec<u8>> = (0..users)
            .map(|_| {
                (0..info_bits_per_codeword)
                    .map(|_| rng.random_range(0..2u8))
                    .collect()
            })
            .collect();
        let symbol_indices: Vec<Vec<usize>> = info
            .iter()
            .map(|bits| {
                let coded = code.encode(bits).expect("nonempty block");
                constellation
                    .modulate_indices(&coded)
                    .expect("coded length divides")
            })
            .collect();
        let n_sym = symbol_indices[0].len();
        let mut points = vec![Complex64::new(0.0, 0.0); users];
        let ys: Vec<Complex64> = (0..n_sym)
            .map(|s| {
                for (u, p) in points.iter_mut().enumerate() {
                    *p = constellation.point(symbol_indices[u][s]);
                }
                let x = superpose(&points, &system.powers).expect("matching lengths");
                apply_channel(x, &spec, &mut rng)
            })
            .collect();

        // Receive.
        let sic_ctx = |csi_error_variance: f64| {
            let h_est = if csi_error_variance > 0.0 {
                let mut det_rng = ChaCha8Rng::seed_from_u64(derive_substream(detector_stream, t));
                draw_csi_estimate(
                    system.h_true,
                    csi_error_variance,
                    constellation.signal_dim(),
                    &mut det_rng,
                )
            } else {
                system.h_true
            };
            SicContext::new(
                h_est,
                &system.powers,
                constellation,
                noise_variance,
                interest,
            )
        };
        let decoded = match receiver {
            CodedReceiver::SicHard { csi_error_variance } => {
                let ctx = sic_ctx(*csi_error_variance);
                let mut coded = Vec::with_capacity(2 * n_sym);
                for &y in &ys {
                    let det = sic_hard_detect(y, &ctx);
                    coded.extend_from_slice(constellation.label(det[interest - 1]));
                }
                code.viterbi_hard(&coded).expect("consistent framing")
            }
            CodedReceiver::SicSoft { csi_error_variance } => {
                let ctx = sic_ctx(*csi_error_variance);
                let mut llrs = Vec::with_capacity(2 * n_sym);
                for &y in &ys {
                    let det = sic_hard_detect(y, &ctx);
                    let z = sic_residual(y, &ctx, &det[..interest - 1]);
                    llrs.extend_from_slice(sic_soft_llr(z, &ctx).values());
                }
                code.viterbi_soft(&llrs).expect("finite clipped llrs")
            }
            CodedReceiver::SicNetHard(model) => {
                let mut coded = Vec::with_capacity(2 * n_sym);
                for &y in &ys {
                    let out = model.forward(y).expect("matching input dim");
                    coded.extend_from_slice(constellation.label(SicNetModel::argmax(out.user())));
                }
                code.viterbi_hard(&coded).expect("consistent framing")
            }
            CodedReceiver::SicNetSoft(model) => {
                let mut llrs = Vec::with_capacity(2 * n_sym);
                for &y in &ys {
                    let out = model.forward(y).expect("matching input dim");
                    llrs.extend_from_slice(
                        SicNetModel::llr_from_soft(out.user(), constellation).values(),
                    );
                }
                code.viterbi_soft(&llrs).expect("finite clipped llrs")
            }
        };
        let truth = &info[interest - 1];
        let errors = decoded
            .iter()
            .zip(truth)
            .filter(|(a, b)| a != b)
            .count() as u64;
        TrialOutcome {
            errors,
            units: info_bits_per_codeword as u64,
        }
    })
}

/// Receiver variants of the block-fading online experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnlineVariant {
    /// Network retrained every block from re-encoded FEC decisions.
    Retrained(DecoderKind),
    /// Network trained once on the first block, never updated.
    Static(DecoderKind),
    /// Model-based SIC with exact per-block channel knowledge.
    SicPerfectCsi(DecoderKind),
}

/// Settings of the block-fading experiment.
#[derive(Debug, Clone)]
pub struct OnlineExperiment {
    pub system: SystemSpec,
    pub fading: FadingProfile,
    pub blocks: usize,
    pub info_bits_per_block: usize,
    pub retrain_epochs: usize,
    pub label_scope: LabelScope,
    /// Retraining label gate; see [`OnlineSession::max_label_mismatch`].
    pub max_label_mismatch: f64,
    /// Initial pilot training on the first block's channel.
    pub initial_training: ReceiverTraining,
}

impl OnlineExperiment {
    /// The reference setup: ripple-faded user 3, 100 blocks of 1000 info
    /// bits, 10 retraining epochs per block, local labels only, retraining
    /// gated on decode success.
    pub fn reference() -> Self {
        OnlineExperiment {
            system: SystemSpec::reference(ChannelKind::LinearGaussian),
            fading: FadingProfile::reference_ripple(),
            blocks: 100,
            info_bits_per_block: 1000,
            retrain_epochs: 10,
            label_scope: LabelScope::LocalOnly,
            max_label_mismatch: crate::online::DEFAULT_LABEL_MISMATCH_GATE,
            initial_training: ReceiverTraining::default(),
        }
    }
}

/// Trains the initial receiver for an online run: pilot data generated on
/// the first block's channel coefficient at the operating SNR.
pub fn train_initial_online_receiver(
    exp: &OnlineExperiment,
    snr_db: f64,
    master_seed: u64,
) -> Result<SicNetModel> {
    let mut system = exp.system.clone();
    system.h_true = Complex64::new(exp.fading.coefficient(0), 0.0);
    let training = ReceiverTraining {
        snr_db,
        ..exp.initial_training.clone()
    };
    train_receiver(
        &system,
        &training,
        system.interest_rank,
        derive_seed(master_seed, &["online-initial", &snr_tag(snr_db)]),
    )
}

/// Runs one online variant at one SNR and aggregates the per-block traces
/// into a coded-BER row. All variants at one (experiment, SNR) share the
/// same block data stream.
pub fn evaluate_online(
    experiment: &str,
    detector_id: &str,
    variant: OnlineVariant,
    exp: &OnlineExperiment,
    initial_model: Option<&SicNetModel>,
    snr_db: f64,
    master_seed: u64,
) -> Result<ResultRow> {
    let start = std::time::Instant::now();
    let tag = snr_tag(snr_db);
    let session_seed = derive_seed(master_seed, &[experiment, "session", &tag]);
    let (receiver, decoder, retrain_epochs) = match variant {
        OnlineVariant::Retrained(d) => (
            SessionReceiver::SicNet(initial_model.expect("network variant needs a model").clone()),
            d,
            exp.retrain_epochs,
        ),
        OnlineVariant::Static(d) => (
            SessionReceiver::SicNet(initial_model.expect("network variant needs a model").clone()),
            d,
            0,
        ),
        OnlineVariant::SicPerfectCsi(d) => (SessionReceiver::ClassicalSic, d, 0),
    };
    let mut session = OnlineSession {
        receiver,
        code: ConvCode::new(),
        fading: exp.fading,
        blocks: exp.blocks,
        info_bits_per_block: exp.info_bits_per_block,
        decoder,
        label_scope: exp.label_scope,
        retrain_epochs,
        powers: exp.system.powers.clone(),
        constellation: exp.system.constellation.clone(),
        noise_variance: snr_db_to_noise_variance(snr_db),
        learning_rate: exp.initial_training.learning_rate,
        batch_size: exp.initial_training.batch_size,
        seed: session_seed,
        max_label_mismatch: exp.max_label_mismatch,
    };
    let traces = run_online_session(&mut session)?;
    let errors: u64 = traces.iter().map(|t| t.bit_errors as u64).sum();
    let trials = (exp.blocks * exp.info_bits_per_block) as u64;
    Ok(ResultRow::new(
        experiment,
        detector_id,
        snr_db,
        trials,
        errors,
        start.elapsed().as_secs_f64(),
        session_seed,
    ))
}
