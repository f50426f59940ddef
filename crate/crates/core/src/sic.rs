//! Model-based successive interference cancellation.
//!
//! The detector for the user at stage `k` walks the power profile strongest
//! first: detect the nearest constellation point, reconstruct its
//! contribution with the channel estimate, subtract, and recurse until the
//! user's own symbol is reached. Soft outputs are per-bit log-likelihood
//! ratios under a Gaussian approximation of the residual.

use num_complex::Complex64;

use crate::phy::{Constellation, PowerProfile};

/// Hard clip applied to every log-likelihood ratio. Gaussian kernels
/// underflow at high SNR; the clip keeps soft decoder metrics finite.
pub const LLR_MAX: f64 = 50.0;

/// Per-bit log-likelihood ratios, sign convention
/// `L = log Pr(bit = 0) / Pr(bit = 1)`, clipped to `[-LLR_MAX, LLR_MAX]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(Vec<f64>);

impl LlrVector {
    /// Clips raw ratios into range; infinities become `+-LLR_MAX`.
    pub fn from_raw(values: Vec<f64>) -> Self {
        LlrVector(
            values
                .into_iter()
                .map(|v| v.clamp(-LLR_MAX, LLR_MAX))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Everything the model-based detector knows: its channel estimate, the
/// cancellation chain's power profile, the alphabet, the noise variance,
/// and which stage (1-based) carries the user of interest.
#[derive(Debug, Clone)]
pub struct SicContext<'a> {
    pub h_est: Complex64,
    pub powers: &'a PowerProfile,
    pub constellation: &'a Constellation,
    pub noise_variance: f64,
    pub user_index: usize,
}

impl<'a> SicContext<'a> {
    pub fn new(
        h_est: Complex64,
        powers: &'a PowerProfile,
        constellation: &'a Constellation,
        noise_variance: f64,
        user_index: usize,
    ) -> Self {
        assert!(
            user_index >= 1 && user_index <= powers.num_users(),
            "user index {user_index} outside 1..={}",
            powers.num_users()
        );
        assert!(noise_variance > 0.0, "noise variance must be positive");
        SicContext {
            h_est,
            powers,
            constellation,
            noise_variance,
            user_index,
        }
    }
}

/// Nearest constellation point to `target / amplitude`, i.e.
/// `argmin_x |target - amplitude * x|`. Exact ties go to the lowest index.
fn nearest_point(target: Complex64, amplitude: Complex64, constellation: &Constellation) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (idx, &point) in constellation.points().iter().enumerate() {
        let d = (target - amplitude * point).norm_sqr();
        if d < best_dist {
            best_dist = d;
            best = idx;
        }
    }
    best
}

/// Recursive hard detection: returns the constellation indices of stages
/// `1..=k`, the last entry being the user of interest's own symbol.
pub fn sic_hard_detect(y: Complex64, ctx: &SicContext) -> Vec<usize> {
    let mut residual = y;
    let mut detected = Vec::with_capacity(ctx.user_index);
    for stage in 0..ctx.user_index {
        let amplitude = ctx.h_est * ctx.powers.amplitude(stage);
        let idx = nearest_point(residual, amplitude, ctx.constellation);
        residual -= amplitude * ctx.constellation.point(idx);
        detected.push(idx);
    }
    detected
}

/// Residual after cancelling the given preceding-stage estimates:
/// `z = y - sum_i sqrt(P_i) h x_i`.
pub fn sic_residual(y: Complex64, ctx: &SicContext, preceding: &[usize]) -> Complex64 {
    debug_assert!(preceding.len() < ctx.powers.num_users());
    let mut z = y;
    for (stage, &idx) in preceding.iter().enumerate() {
        z -= ctx.h_est * ctx.powers.amplitude(stage) * ctx.constellation.point(idx);
    }
    z
}

/// Per-bit LLRs for the user of interest from the cancelled residual `z`.
///
/// Uses the Gaussian kernel `p(z|x) ~ exp(-|z - sqrt(P_k) h x|^2 / 2 sigma^2)`
/// with the *channel* noise variance; residual-interference variance is
/// deliberately not folded in.
pub fn sic_soft_llr(z: Complex64, ctx: &SicContext) -> LlrVector {
    let amplitude = ctx.h_est * ctx.powers.amplitude(ctx.user_index - 1);
    let scale = -1.0 / (2.0 * ctx.noise_variance);
    let constellation = ctx.constellation;
    let exponents: Vec<f64> = constellation
        .points()
        .iter()
        .map(|&p| scale * (z - amplitude * p).norm_sqr())
        .collect();

    let llrs = (0..constellation.bits_per_symbol())
        .map(|bit| {
            let zero =
                log_sum_exp(constellation.bit_partition(bit, 0).iter().map(|&i| exponents[i]));
            let one =
                log_sum_exp(constellation.bit_partition(bit, 1).iter().map(|&i| exponents[i]));
            zero - one
        })
        .collect();
    LlrVector::from_raw(llrs)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + vals.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
