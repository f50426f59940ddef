//! Experiment driver: seeded Monte Carlo error-rate estimation, preset
//! experiments, CSV output, and the plain-text configuration format.

mod config;
mod csv;
mod experiments;
mod mc;
mod presets;
mod seed;

pub use config::{ConfigFile, KNOWN_KEYS};
pub use csv::{format_rate, parse_result_csv, rows_to_csv, write_csv, CSV_HEADER};
pub use experiments::{
    evaluate_coded_ber, evaluate_online, evaluate_ser, labeled_dataset, train_initial_online_receiver,
    train_receiver, CodedReceiver, LossKind, OnlineExperiment, OnlineVariant, ReceiverTraining,
    SerDetector, SystemSpec,
};
pub use mc::{estimate_error_rate, ResultRow, StopRule, TrialOutcome};
pub use presets::{
    preset_rows, run_preset, PresetOverrides, PresetRun, DEFAULT_SEED, DEFAULT_TRIALS, PRESET_NAMES,
};
pub use seed::{derive_seed, derive_substream};
