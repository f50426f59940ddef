//! Link-level simulation of a power-domain non-orthogonal downlink.
//!
//! The crate models a base station that superimposes the symbols of several
//! users with descending powers, and a receiver that recovers its own symbol
//! by successive interference cancellation. Two receivers are implemented:
//!
//! * [`sic`] — the classical model-based detector (recursive hard decisions
//!   plus Gaussian-approximation bit LLRs), and
//! * [`sicnet`] — a cascade of small dense networks, one per cancellation
//!   stage, trained end-to-end on labeled samples and able to emit soft
//!   symbol distributions and bit LLRs without a channel model.
//!
//! Around them sit [`phy`] (constellations, superposition, linear/quantized
//! Gaussian channels, block fading, dataset generation), [`fec`] (the
//! rate-1/2 `[7,5]` convolutional code with hard- and soft-input Viterbi
//! decoding), [`online`] (decision-directed retraining from re-encoded FEC
//! decisions under block fading), and [`harness`] (seeded Monte Carlo
//! SER/BER estimation, preset experiments, CSV output).

pub mod error;
pub mod fec;
pub mod harness;
pub mod nn;
pub mod online;
pub mod phy;
pub mod sic;
pub mod sicnet;

pub use error::{Error, Result};
