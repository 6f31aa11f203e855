//! Quasi-uniform message quantizer: uniform steps of `Δ` near zero,
//! geometrically growing levels `d^r N Δ` further out, saturating at
//! `d^{N+1} N Δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerParams {
    /// Uniform step size `Δ`.
    pub delta: f64,
    /// Growth rate `d` of the non-uniform levels.
    pub growth: f64,
    /// Number of levels per range `N`.
    pub levels: u32,
}

impl Default for QuantizerParams {
    fn default() -> Self {
        Self {
            delta: 0.25,
            growth: 1.3,
            levels: 6,
        }
    }
}

impl QuantizerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("quantizer step must be > 0, got {}", self.delta)));
        }
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return Err(Error::InvalidConfig(format!("quantizer growth must be > 1, got {}", self.growth)));
        }
        if self.levels < 1 {
            return Err(Error::InvalidConfig("quantizer needs at least one level".into()));
        }
        Ok(())
    }
}

/// A quasi-uniform quantizer with its level table precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiUniformQuantizer {
    params: QuantizerParams,
    /// `d^r N Δ` for `r = 1..=N+1`; the last entry is the saturation level.
    geometric: Vec<f64>,
}

impl QuasiUniformQuantizer {
    pub fn new(params: QuantizerParams) -> Result<Self> {
        params.validate()?;
        let n = params.levels as i32;
        let base = params.levels as f64 * params.delta;
        let geometric = (1..=n + 1).map(|r| params.growth.powi(r) * base).collect();
        Ok(Self { params, geometric })
    }

    pub fn params(&self) -> &QuantizerParams {
        &self.params
    }

    /// Largest representable magnitude `d^{N+1} N Δ`.
    pub fn saturation(&self) -> f64 {
        *self.geometric.last().expect("at least two geometric levels")
    }

    /// Quantizes the non-negative magnitude `a`.
    #[inline]
    fn magnitude(&self, a: f64) -> f64 {
        let first = self.geometric[0];
        if a < first {
            let delta = self.params.delta;
            let n = self.params.levels as f64;
            // cells [mΔ - Δ/2, mΔ + Δ/2), top cell open-ended at NΔ
            let m = (a / delta + 0.5).floor().min(n);
            return m * delta;
        }
        // largest r with d^r N Δ <= a
        match self.geometric.iter().rposition(|&level| level <= a) {
            Some(i) => self.geometric[i],
            None => first,
        }
    }

    /// Odd-symmetric quantization `Q(-L) = -Q(L)`. NaN maps to 0.
    #[inline]
    pub fn quantize(&self, l: f64) -> f64 {
        if l.is_nan() {
            return 0.0;
        }
        let q = self.magnitude(l.abs());
        if l < 0.0 {
            -q
        } else {
            q
        }
    }

    pub fn quantize_slice(&self, values: &mut [f64]) {
        for v in values {
            *v = self.quantize(*v);
        }
    }
}

/// Free-function form of [`QuasiUniformQuantizer::quantize`].
pub fn quasi_uniform_quantize(l: f64, params: &QuantizerParams) -> Result<f64> {
    Ok(QuasiUniformQuantizer::new(*params)?.quantize(l))
}
