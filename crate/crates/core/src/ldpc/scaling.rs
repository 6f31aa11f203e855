//! Offline and online LLR scaling factors for the decoder input.
//!
//! The offline factor `α` is fitted from training LLRs with known bits: the
//! histogram-based log ratio `f(L) = log p(L | +1) / p(L | -1)` is regressed
//! on `L` through the origin. For a consistent LLR `f(L) = L`, so `α` measures
//! how over- or under-confident the detector is. The online factor rescales
//! the second-iteration LLRs so their mean magnitude matches the scaled
//! training reference.

use crate::error::{Error, Result};

/// Minimum number of training samples accepted by [`offline_scaling_train`].
pub const MIN_TRAINING_SAMPLES: usize = 10_000;

/// Number of histogram bins spanning `[-max|L|, max|L|]`.
pub const HISTOGRAM_BINS: usize = 64;

/// Bins need this many samples of each bit value to enter the fit.
pub const MIN_BIN_COUNT: usize = 20;

/// Clip range for the fitted `α`; also the upper guard for `f`.
pub const ALPHA_RANGE: (f64, f64) = (0.1, 10.0);

/// Denominators below this are treated as zero by [`online_scaling`].
pub const ONLINE_GUARD: f64 = 1e-6;

/// Per-user scaling state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingState {
    /// Offline factor `α_k`.
    pub alpha: f64,
    /// Mean absolute training LLR `L̄_k` (before scaling).
    pub mean_abs_llr: f64,
    /// Online factor `f_k`, set once at the second outer iteration.
    pub online: Option<f64>,
}

impl ScalingState {
    /// No scaling at all.
    pub fn identity() -> Self {
        Self {
            alpha: 1.0,
            mean_abs_llr: 0.0,
            online: None,
        }
    }

    /// Stored reference `α_k L̄_k`.
    pub fn scaled_reference(&self) -> f64 {
        self.alpha * self.mean_abs_llr
    }
}

impl Default for ScalingState {
    fn default() -> Self {
        Self::identity()
    }
}

/// Result of the offline fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfflineFit {
    pub alpha: f64,
    pub mean_abs_llr: f64,
    /// Number of histogram bins that entered the regression.
    pub bins_used: usize,
}

impl From<OfflineFit> for ScalingState {
    fn from(fit: OfflineFit) -> Self {
        Self {
            alpha: fit.alpha,
            mean_abs_llr: fit.mean_abs_llr,
            online: None,
        }
    }
}

/// Fits `α` from LLR samples and their transmitted GF(2) bits (0 ⇔ +1).
pub fn offline_scaling_train(llrs: &[f64], bits: &[u8]) -> Result<OfflineFit> {
    if llrs.len() != bits.len() {
        return Err(Error::DimensionMismatch {
            context: "training LLRs and bits",
            expected: llrs.len(),
            found: bits.len(),
        });
    }
    if llrs.len() < MIN_TRAINING_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_TRAINING_SAMPLES,
            found: llrs.len(),
        });
    }
    let mean_abs_llr = llrs.iter().map(|l| l.abs()).sum::<f64>() / llrs.len() as f64;
    let span = llrs.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if span == 0.0 {
        return Ok(OfflineFit {
            alpha: ALPHA_RANGE.1,
            mean_abs_llr,
            bins_used: 0,
        });
    }

    let width = 2.0 * span / HISTOGRAM_BINS as f64;
    let mut plus = [0usize; HISTOGRAM_BINS];
    let mut minus = [0usize; HISTOGRAM_BINS];
    for (&l, &b) in llrs.iter().zip(bits) {
        let idx = (((l + span) / width) as usize).min(HISTOGRAM_BINS - 1);
        if b & 1 == 0 {
            plus[idx] += 1;
        } else {
            minus[idx] += 1;
        }
    }
    let n_plus = plus.iter().sum::<usize>() as f64;
    let n_minus = minus.iter().sum::<usize>() as f64;

    // count-weighted least squares through the origin
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut bins_used = 0;
    for i in 0..HISTOGRAM_BINS {
        if plus[i] < MIN_BIN_COUNT || minus[i] < MIN_BIN_COUNT {
            continue;
        }
        let center = -span + (i as f64 + 0.5) * width;
        let f = ((plus[i] as f64 / n_plus) / (minus[i] as f64 / n_minus)).ln();
        let weight = (plus[i] + minus[i]) as f64;
        sxy += weight * center * f;
        sxx += weight * center * center;
        bins_used += 1;
    }
    let alpha = if bins_used == 0 || sxx == 0.0 {
        ALPHA_RANGE.1
    } else {
        (sxy / sxx).clamp(ALPHA_RANGE.0, ALPHA_RANGE.1)
    };
    Ok(OfflineFit {
        alpha,
        mean_abs_llr,
        bins_used,
    })
}

/// `f_k = α_k L̄_k / L̄_k^{2nd}`, capped at `ALPHA_RANGE.1` when the
/// second-iteration mean is below [`ONLINE_GUARD`].
pub fn online_scaling(state: &ScalingState, second_mean_abs: f64) -> f64 {
    if !(second_mean_abs >= ONLINE_GUARD) {
        return ALPHA_RANGE.1;
    }
    (state.scaled_reference() / second_mean_abs).min(ALPHA_RANGE.1)
}

/// Mean absolute value of a slice (0 for an empty slice).
pub fn mean_abs(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64
    }
}
