//! Superposition coding and the linear / quantized Gaussian channels.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Descending per-user power coefficients `P_1 >= P_2 >= ... >= P_K`.
///
/// The ordering is the piece of side information every receiver is assumed
/// to know; detection chains walk it strongest-first.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    coefficients: Vec<f64>,
}

impl PowerProfile {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidConfig("power profile is empty".into()));
        }
        if coefficients.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidConfig("powers must be positive".into()));
        }
        if coefficients.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig(
                "powers must be in descending order".into(),
            ));
        }
        Ok(PowerProfile { coefficients })
    }

    pub fn num_users(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficient(&self, user: usize) -> f64 {
        self.coefficients[user]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Amplitude `sqrt(P_user)` applied by superposition coding.
    pub fn amplitude(&self, user: usize) -> f64 {
        self.coefficients[user].sqrt()
    }
}

/// Superposition coding: `x = sum_k sqrt(P_k) x_k`.
pub fn superpose(symbols: &[Complex64], powers: &PowerProfile) -> Result<Complex64> {
    if symbols.len() != powers.num_users() {
        return Err(Error::DimMismatch(format!(
            "{} symbols for {} users",
            symbols.len(),
            powers.num_users()
        )));
    }
    Ok(symbols
        .iter()
        .enumerate()
        .map(|(k, &s)| powers.amplitude(k) * s)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// `y = h x + w`.
    LinearGaussian,
    /// `y = Q(h x + w)` with the 3-bit quantizer applied per real dimension.
    QuantizedGaussian,
}

/// Channel description as seen by one user.
///
/// `noise_variance` is the total noise power; for complex signals
/// (`signal_dim == 2`) it is split equally between the real and imaginary
/// dimensions. `csi_error_variance` describes how inaccurate a receiver's
/// channel estimate is; the channel itself always applies `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub h: Complex64,
    pub noise_variance: f64,
    pub csi_error_variance: f64,
    pub signal_dim: usize,
}

impl ChannelSpec {
    pub fn new(
        kind: ChannelKind,
        h: Complex64,
        noise_variance: f64,
        csi_error_variance: f64,
        signal_dim: usize,
    ) -> Result<Self> {
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        if csi_error_variance < 0.0 {
            return Err(Error::InvalidConfig("csi error variance must be >= 0".into()));
        }
        if !(signal_dim == 1 || signal_dim == 2) {
            return Err(Error::InvalidConfig("signal dimension must be 1 or 2".into()));
        }
        Ok(ChannelSpec {
            kind,
            h,
            noise_variance,
            csi_error_variance,
            signal_dim,
        })
    }

    /// Same channel with a different coefficient.
    pub fn with_h(&self, h: Complex64) -> ChannelSpec {
        ChannelSpec { h, ..self.clone() }
    }
}

/// SNR convention used throughout: `sigma^2 = 10^(-SNR_dB / 10)`, the SNR
/// being defined for the user of interest whose channel has unit mean power.
pub fn snr_db_to_noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// 3-bit magnitude quantizer with levels `{+-1, +-3, +-5, +-7}`.
///
/// Boundary inputs (|u| in {2, 4, 6}) map to the higher-magnitude level and
/// `sign(0) = +1`, so the map is total and has odd symmetry everywhere else.
pub fn quantize(u: f64) -> f64 {
    let a = u.abs();
    let level = if a < 2.0 {
        1.0
    } else if a < 4.0 {
        3.0
    } else if a < 6.0 {
        5.0
    } else {
        7.0
    };
    if u < 0.0 {
        -level
    } else {
        level
    }
}

/// Passes `x` through the channel: scale by `h`, add white Gaussian noise,
/// and quantize per real dimension when the channel is non-linear.
pub fn apply_channel<R: Rng + ?Sized>(x: Complex64, spec: &ChannelSpec, rng: &mut R) -> Complex64 {
    let per_dim = spec.noise_variance / spec.signal_dim as f64;
    let normal = Normal::new(0.0, per_dim.sqrt()).expect("valid std dev");
    let hx = spec.h * x;
    let mut y = Complex64::new(hx.re + normal.sample(rng), hx.im);
    if spec.signal_dim == 2 {
        y.im += normal.sample(rng);
    }
    if spec.kind == ChannelKind::QuantizedGaussian {
        y.re = quantize(y.re);
        if spec.signal_dim == 2 {
            y.im = quantize(y.im);
        }
    }
    y
}

/// Draws a noisy channel estimate `h + e`, `e ~ N(0, eps^2)` (split across
/// both dimensions for complex channels). `eps^2 = 0` returns `h` exactly.
pub fn draw_csi_estimate<R: Rng + ?Sized>(
    h: Complex64,
    csi_error_variance: f64,
    signal_dim: usize,
    rng: &mut R,
) -> Complex64 {
    if csi_error_variance == 0.0 {
        return h;
    }
    let per_dim = csi_error_variance / signal_dim as f64;
    let normal = Normal::new(0.0, per_dim.sqrt()).expect("valid std dev");
    let mut est = Complex64::new(h.re + normal.sample(rng), h.im);
    if signal_dim == 2 {
        est.im += normal.sample(rng);
    }
    est
}
