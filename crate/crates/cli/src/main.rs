//! Command-line driver for the downlink simulation lab.
//!
//! Subcommands: `train` (fit a receiver and save a checkpoint), `eval`
//! (SER sweep of a checkpoint and/or classical SIC), `preset` (the fig4..
//! fig11 reproductions), `online` (block-fading online-retraining session).
//! Shared flags can also come from a `key = value` config file passed with
//! `--config`; explicit flags win over file values.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use sicnet_core::error::Error;
use sicnet_core::harness::{
    evaluate_online, evaluate_ser, run_preset, train_initial_online_receiver, train_receiver,
    write_csv, ConfigFile, LossKind, OnlineExperiment, OnlineVariant, PresetOverrides,
    ReceiverTraining, ResultRow, SerDetector, StopRule, SystemSpec, DEFAULT_SEED, DEFAULT_TRIALS,
};
use sicnet_core::online::{DecoderKind, LabelScope};
use sicnet_core::phy::{ChannelKind, Constellation};
use sicnet_core::sicnet::SicNetModel;

#[derive(Parser)]
#[command(
    name = "sicnet",
    about = "Link-level simulation of a power-domain non-orthogonal downlink",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a receiver and save its checkpoint.
    Train(TrainArgs),
    /// Sweep symbol error rate for a saved model and/or classical SIC.
    Eval(EvalArgs),
    /// Run a preset experiment (fig4..fig11) and write its CSV.
    Preset(PresetArgs),
    /// Run the block-fading online-retraining experiment.
    Online(OnlineArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelArg {
    Linear,
    Quantized,
}

impl From<ChannelArg> for ChannelKind {
    fn from(value: ChannelArg) -> Self {
        match value {
            ChannelArg::Linear => ChannelKind::LinearGaussian,
            ChannelArg::Quantized => ChannelKind::QuantizedGaussian,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Local,
    Combined,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModulationArg {
    Bpsk,
    Qpsk,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecoderArg {
    Hard,
    Soft,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Local,
    All,
}

/// Flags shared by every subcommand; unset values fall back to the config
/// file, then to built-in defaults.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Master seed; every stream of the run derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Test units (symbols or info bits) per SNR point.
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated SNR grid in dB, e.g. `0,2,4,6`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_grid: Option<Vec<f64>>,
    /// Channel-estimate error variance.
    #[arg(long)]
    csi_error_var: Option<f64>,
    /// Channel model.
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Training-loss preset.
    #[arg(long, value_enum)]
    loss: Option<LossArg>,
    /// Output path (CSV for sweeps, checkpoint for train).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Common flag values after merging with the config file.
struct Resolved {
    seed: u64,
    trials: u64,
    snr_grid: Option<Vec<f64>>,
    csi_error_var: f64,
    channel: ChannelKind,
    loss: LossKind,
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<Resolved, Error> {
        let file = match &self.config {
            Some(path) => ConfigFile::from_path(path)?,
            None => ConfigFile::default(),
        };
        let parse = |key: &str| -> Option<&str> { file.get(key) };
        let bad = |key: &str, value: &str| {
            Error::InvalidConfig(format!("config key `{key}`: cannot parse `{value}`"))
        };

        let seed = match (self.seed, parse("seed")) {
            (Some(v), _) => v,
            (None, Some(s)) => s.parse().map_err(|_| bad("seed", s))?,
            _ => DEFAULT_SEED,
        };
        let trials = match (self.trials, parse("trials")) {
            (Some(v), _) => v,
            (None, Some(s)) => s.parse().map_err(|_| bad("trials", s))?,
            _ => DEFAULT_TRIALS,
        };
        let snr_grid = match (&self.snr_grid, parse("snr_grid")) {
            (Some(v), _) => Some(v.clone()),
            (None, Some(s)) => Some(
                s.split(',')
                    .map(|part| part.trim().parse::<f64>().map_err(|_| bad("snr_grid", s)))
                    .collect::<Result<Vec<f64>, Error>>()?,
            ),
            _ => None,
        };
        let csi_error_var = match (self.csi_error_var, parse("csi_error_var")) {
            (Some(v), _) => v,
            (None, Some(s)) => s.parse().map_err(|_| bad("csi_error_var", s))?,
            _ => 0.0,
        };
        let channel = match (self.channel, parse("channel")) {
            (Some(v), _) => v.into(),
            (None, Some("linear")) => ChannelKind::LinearGaussian,
            (None, Some("quantized")) => ChannelKind::QuantizedGaussian,
            (None, Some(other)) => return Err(bad("channel", other)),
            _ => ChannelKind::LinearGaussian,
        };
        let loss = match (self.loss, parse("loss")) {
            (Some(LossArg::Local), _) => LossKind::Local,
            (Some(LossArg::Combined), _) => LossKind::Combined,
            (None, Some("local")) => LossKind::Local,
            (None, Some("combined")) => LossKind::Combined,
            (None, Some(other)) => return Err(bad("loss", other)),
            _ => LossKind::Local,
        };
        let out = self
            .out
            .clone()
            .or_else(|| parse("out").map(PathBuf::from));
        if csi_error_var < 0.0 {
            return Err(Error::InvalidConfig("csi_error_var must be >= 0".into()));
        }
        Ok(Resolved {
            seed,
            trials,
            snr_grid,
            csi_error_var,
            channel,
            loss,
            out,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training SNR in dB.
    #[arg(long, default_value_t = 6.0)]
    train_snr: f64,
    /// Number of labeled training samples.
    #[arg(long, default_value_t = 5000)]
    train_size: usize,
    /// Training epochs.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Symbol alphabet.
    #[arg(long, value_enum, default_value_t = ModulationArg::Bpsk)]
    modulation: ModulationArg,
    /// Cancellation stage of the user of interest (network depth).
    #[arg(long, default_value_t = 3)]
    user: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint to evaluate; omit to sweep classical SIC only.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Skip the classical SIC reference sweep.
    #[arg(long)]
    no_sic: bool,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name: fig4, fig5, fig6, fig7, fig8, fig9, fig10 or fig11.
    name: String,
    #[command(flatten)]
    common: CommonArgs,
    /// Restrict to a comma-separated list of detector ids.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
}

#[derive(Args)]
struct OnlineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Fading blocks per session.
    #[arg(long, default_value_t = 100)]
    blocks: usize,
    /// Information bits per block (one zero-tail codeword).
    #[arg(long, default_value_t = 1000)]
    info_bits: usize,
    /// Retraining epochs per block.
    #[arg(long, default_value_t = 10)]
    retrain_epochs: usize,
    /// FEC decoder used for detection and label recovery.
    #[arg(long, value_enum, default_value_t = DecoderArg::Soft)]
    decoder: DecoderArg,
    /// Which users contribute retraining labels.
    #[arg(long, value_enum, default_value_t = ScopeArg::Local)]
    scope: ScopeArg,
}

/// Builds the downlink the checkpoint was trained for.
fn system_for_model(model: &SicNetModel, kind: ChannelKind) -> Result<SystemSpec, Error> {
    let mut system = SystemSpec::reference(kind);
    match (model.constellation_size(), model.input_dim_y()) {
        (2, 1) => {}
        (4, 2) => {
            system.constellation = Constellation::qpsk();
            system.h_true = Complex64::new(0.4472, 0.8944);
        }
        (m, d) => {
            return Err(Error::InvalidConfig(format!(
                "no built-in system for M = {m}, input dimension {d}"
            )))
        }
    }
    if model.user_index() > system.powers.num_users() {
        return Err(Error::InvalidConfig(format!(
            "checkpoint stage {} exceeds the {}-user reference system",
            model.user_index(),
            system.powers.num_users()
        )));
    }
    system.interest_rank = model.user_index();
    Ok(system)
}

fn cmd_train(args: &TrainArgs) -> Result<(), Error> {
    let common = args.common.resolve()?;
    let out = common
        .out
        .ok_or_else(|| Error::InvalidConfig("train needs --out <checkpoint path>".into()))?;
    let mut system = SystemSpec::reference(common.channel);
    if args.modulation == ModulationArg::Qpsk {
        system.constellation = Constellation::qpsk();
        system.h_true = Complex64::new(0.4472, 0.8944);
    }
    if args.user == 0 || args.user > system.powers.num_users() {
        return Err(Error::InvalidConfig(format!(
            "--user must be in 1..={}",
            system.powers.num_users()
        )));
    }
    system.interest_rank = args.user;
    let training = ReceiverTraining {
        samples: args.train_size,
        snr_db: args.train_snr,
        csi_error_variance: common.csi_error_var,
        loss: common.loss,
        epochs: args.epochs,
        ..ReceiverTraining::default()
    };
    let model = train_receiver(&system, &training, args.user, common.seed)?;
    model.save(&out)?;
    eprintln!(
        "trained stage-{} receiver ({} samples @ {} dB, {:?} loss) -> {}",
        args.user,
        args.train_size,
        args.train_snr,
        common.loss,
        out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let common = args.common.resolve()?;
    let out = common
        .out
        .clone()
        .ok_or_else(|| Error::InvalidConfig("eval needs --out <csv path>".into()))?;
    let grid = common
        .snr_grid
        .clone()
        .unwrap_or_else(|| vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0]);
    let model = args
        .model
        .as_deref()
        .map(SicNetModel::load)
        .transpose()?;
    if model.is_none() && args.no_sic {
        return Err(Error::InvalidConfig(
            "nothing to evaluate: no --model and --no-sic".into(),
        ));
    }
    let system = match &model {
        Some(m) => system_for_model(m, common.channel)?,
        None => SystemSpec::reference(common.channel),
    };
    let stop = StopRule::budget(common.trials);
    let mut rows: Vec<ResultRow> = Vec::new();
    for &snr in &grid {
        if let Some(model) = &model {
            rows.push(evaluate_ser(
                "eval",
                "sicnet",
                &SerDetector::SicNet(model),
                &system,
                snr,
                stop,
                common.seed,
            ));
        }
        if !args.no_sic {
            let id = if common.csi_error_var > 0.0 {
                "sic-imperfect"
            } else {
                "sic-perfect"
            };
            rows.push(evaluate_ser(
                "eval",
                id,
                &SerDetector::ClassicalSic {
                    csi_error_variance: common.csi_error_var,
                },
                &system,
                snr,
                stop,
                common.seed,
            ));
        }
    }
    write_csv(&rows, &out)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_preset(args: &PresetArgs) -> Result<(), Error> {
    let common = args.common.resolve()?;
    let overrides = PresetOverrides {
        seed: Some(common.seed),
        trials: Some(common.trials),
        snr_grid: common.snr_grid.clone(),
        out: common.out.clone(),
        detectors: args.detectors.clone(),
    };
    let run = run_preset(&args.name, &overrides)?;
    let total_seconds: f64 = run.rows.iter().map(|r| r.seconds).sum();
    eprintln!(
        "{}: {} rows -> {} ({total_seconds:.1}s of evaluation)",
        args.name,
        run.rows.len(),
        run.csv_path.display()
    );
    Ok(())
}

fn cmd_online(args: &OnlineArgs) -> Result<(), Error> {
    let common = args.common.resolve()?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("online.csv"));
    let grid = common.snr_grid.clone().unwrap_or_else(|| vec![13.0, 14.0]);
    let decoder = match args.decoder {
        DecoderArg::Hard => DecoderKind::Hard,
        DecoderArg::Soft => DecoderKind::Soft,
    };
    let mut exp = OnlineExperiment::reference();
    exp.blocks = args.blocks;
    exp.info_bits_per_block = args.info_bits;
    exp.retrain_epochs = args.retrain_epochs;
    exp.label_scope = match args.scope {
        ScopeArg::Local => LabelScope::LocalOnly,
        ScopeArg::All => LabelScope::AllUsers,
    };

    let mut rows = Vec::new();
    for &snr in &grid {
        let initial = train_initial_online_receiver(&exp, snr, common.seed)?;
        for (id, variant) in [
            ("sicnet-online", OnlineVariant::Retrained(decoder)),
            ("sicnet-static", OnlineVariant::Static(decoder)),
            ("sic-perfect-hard", OnlineVariant::SicPerfectCsi(DecoderKind::Hard)),
        ] {
            rows.push(evaluate_online(
                "online",
                id,
                variant,
                &exp,
                Some(&initial),
                snr,
                common.seed,
            )?);
        }
    }
    write_csv(&rows, &out)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Preset(args) => cmd_preset(args),
        Command::Online(args) => cmd_online(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
