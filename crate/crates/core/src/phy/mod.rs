//! Signal-level model of the non-orthogonal downlink.
//!
//! Constellations with bit labels, superposition coding over a descending
//! power profile, linear and 3-bit-quantized Gaussian channels, block-fading
//! coefficient rules, channel-estimate error injection, and labeled-dataset
//! generation. All randomness flows through explicit rng arguments, so
//! parallel workers own independent seeded streams.

mod channel;
mod constellation;
mod dataset;
mod fading;

pub use channel::{
    apply_channel, draw_csi_estimate, quantize, snr_db_to_noise_variance, superpose, ChannelKind,
    ChannelSpec, PowerProfile,
};
pub use constellation::Constellation;
pub use dataset::{generate_dataset, generate_raw, LabeledSample, TxSample};
pub use fading::{fading_coefficient, FadingProfile};
