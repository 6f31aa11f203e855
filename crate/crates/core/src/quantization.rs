//! 1-bit quantization and the second-order statistics of quantized Gaussian
//! vectors.
//!
//! For a zero-mean circularly symmetric Gaussian vector `s` with covariance
//! `C`, the 1-bit quantizer `Q(s) = (sign(Re s) + j sign(Im s)) / √2` yields
//!
//! * cross-covariance `E[Q(s) sᴴ] = √(2/π) K C`, with `K = diag(C)^{-1/2}`;
//! * covariance `E[Q(s) Q(s)ᴴ] = (2/π) (asin(K Re{C} K) + j asin(K Im{C} K))`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Relative tolerance for the Hermitian-symmetry check on covariance inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Normalized correlations up to `1 + CORRELATION_SLACK` are clamped to 1.
pub const CORRELATION_SLACK: f64 = 1e-9;

/// `√(2/π)`, the Bussgang gain of a unit-variance 1-bit quantizer.
pub fn bussgang_constant() -> f64 {
    FRAC_2_PI.sqrt()
}

#[inline]
fn sign_level(v: f64) -> f64 {
    // ties go to the positive level
    if v >= 0.0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    }
}

/// Quantizes a single complex sample to `(±1 ± j) / √2`.
#[inline]
pub fn quantize_sample(z: C64) -> C64 {
    C64::new(sign_level(z.re), sign_level(z.im))
}

/// Elementwise 1-bit quantization of real and imaginary parts.
pub fn quantize_1bit(y: &[C64]) -> Vec<C64> {
    y.iter().map(|&z| quantize_sample(z)).collect()
}

/// Second-order statistics of a 1-bit quantized Gaussian vector.
#[derive(Debug, Clone)]
pub struct BussgangStats {
    /// Diagonal of `K = diag(C)^{-1/2}`.
    pub gain: Vec<f64>,
    /// Covariance of the quantized vector.
    pub quantized_cov: CMatrix,
    /// Cross-covariance between the quantized and unquantized vectors.
    pub cross_cov: CMatrix,
}

impl BussgangStats {
    pub fn new(c: &CMatrix) -> Result<Self> {
        let c = validated_hermitian(c)?;
        let gain = gain_of(&c)?;
        Ok(Self {
            quantized_cov: arcsine_from_gain(&c, &gain)?,
            cross_cov: cross_from_gain(&c, &gain),
            gain,
        })
    }
}

/// Checks Hermitian symmetry within [`HERMITIAN_TOL`] and returns the
/// symmetrized matrix `(C + Cᴴ)/2`.
pub fn validated_hermitian(c: &CMatrix) -> Result<CMatrix> {
    if !c.is_square() {
        return Err(Error::InvalidDimensions(format!(
            "covariance must be square, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    let deviation = c.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(c.hermitian_part())
}

fn gain_of(c: &CMatrix) -> Result<Vec<f64>> {
    c.diagonal()
        .iter()
        .enumerate()
        .map(|(index, d)| {
            if d.re > 0.0 && d.re.is_finite() {
                Ok(1.0 / d.re.sqrt())
            } else {
                Err(Error::DegenerateCovariance { index, value: d.re })
            }
        })
        .collect()
}

/// The Bussgang gain `K = diag(C)^{-1/2}`, returned as its diagonal.
pub fn bussgang_gain(c: &CMatrix) -> Result<Vec<f64>> {
    if !c.is_square() {
        return Err(Error::InvalidDimensions(format!(
            "covariance must be square, got {}x{}",
            c.rows(),
            c.cols()
        )));
    }
    gain_of(c)
}

fn clamp_correlation(v: f64, row: usize, col: usize) -> Result<f64> {
    if !v.is_finite() || v.abs() > 1.0 + CORRELATION_SLACK {
        return Err(Error::InvalidCorrelation { row, col, value: v });
    }
    Ok(v.clamp(-1.0, 1.0))
}

fn arcsine_from_gain(c: &CMatrix, gain: &[f64]) -> Result<CMatrix> {
    let n = c.rows();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        out[(r, r)] = C64::new(1.0, 0.0);
        for col in (r + 1)..n {
            let rho = c[(r, col)] * (gain[r] * gain[col]);
            let re = clamp_correlation(rho.re, r, col)?;
            let im = clamp_correlation(rho.im, r, col)?;
            let v = C64::new(re.asin(), im.asin()) * FRAC_2_PI;
            out[(r, col)] = v;
            out[(col, r)] = v.conj();
        }
    }
    Ok(out)
}

/// Covariance of the 1-bit quantized vector via the arcsine law.
///
/// The output is exactly Hermitian with an exactly unit diagonal.
pub fn arcsine_covariance(c: &CMatrix) -> Result<CMatrix> {
    let c = validated_hermitian(c)?;
    let gain = gain_of(&c)?;
    arcsine_from_gain(&c, &gain)
}

fn cross_from_gain(c: &CMatrix, gain: &[f64]) -> CMatrix {
    let a = bussgang_constant();
    CMatrix::from_fn(c.rows(), c.cols(), |r, col| c[(r, col)] * (a * gain[r]))
}

/// Cross-covariance `E[Q(s) sᴴ] = √(2/π) K C`.
pub fn cross_covariance(c: &CMatrix) -> Result<CMatrix> {
    let c = validated_hermitian(c)?;
    let gain = gain_of(&c)?;
    Ok(cross_from_gain(&c, &gain))
}
