//! Block-fading channel, AWGN, QPSK mapping and soft symbol estimation.
//!
//! Bit convention used throughout the crate: GF(2) bit `0` is the antipodal
//! value `+1`, GF(2) bit `1` is `-1`, and an LLR is `log P(+1) / P(-1)`, so a
//! positive LLR favours bit `0`.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Average transmit symbol energy. Fixed at one for the whole crate.
pub const SIGMA_X2: f64 = 1.0;

/// Flat-fading channel for one block plus the receiver noise level.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// M×K channel matrix.
    pub h: CMatrix,
    /// Total complex noise power per receive antenna.
    pub sigma_n2: f64,
}

impl ChannelRealization {
    pub fn new(h: CMatrix, sigma_n2: f64) -> Result<Self> {
        if !(sigma_n2 > 0.0 && sigma_n2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be positive and finite, got {sigma_n2}"
            )));
        }
        if h.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidConfig("channel has non-finite entries".into()));
        }
        Ok(Self { h, sigma_n2 })
    }

    pub fn antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn users(&self) -> usize {
        self.h.cols()
    }
}

/// How the SNR axis maps to a noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrConvention {
    /// `σ_x² / σ_n²` per user and receive antenna.
    #[default]
    PerUser,
    /// `K σ_x² / σ_n²`, total received signal power per antenna.
    SumPower,
}

impl SnrConvention {
    pub fn noise_variance(self, snr_db: f64, users: usize) -> f64 {
        let linear = 10f64.powf(snr_db / 10.0);
        match self {
            SnrConvention::PerUser => SIGMA_X2 / linear,
            SnrConvention::SumPower => users as f64 * SIGMA_X2 / linear,
        }
    }
}

/// Draws a sample from `CN(0, variance)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// IID `CN(0, 1)` channel matrix of size M×K.
pub fn generate_channel<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    sigma_n2: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if k == 0 || m < k {
        return Err(Error::InvalidDimensions(format!(
            "need M >= K >= 1, got M={m}, K={k}"
        )));
    }
    let h = CMatrix::from_fn(m, k, |_, _| complex_gaussian(rng, 1.0));
    ChannelRealization::new(h, sigma_n2)
}

/// Returns `H x + n` with `n ~ CN(0, σ_n² I)`.
pub fn transmit<R: Rng + ?Sized>(
    h: &CMatrix,
    x: &[C64],
    sigma_n2: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let mut y = h.mul_vec(x)?;
    if sigma_n2 > 0.0 {
        for v in &mut y {
            *v += complex_gaussian(rng, sigma_n2);
        }
    }
    Ok(y)
}

/// A labelled complex constellation with antipodal bit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<C64>,
    /// `labels[i][l]` is the antipodal value (+1/-1) of bit `l` of point `i`.
    labels: Vec<Vec<f64>>,
    bits_per_symbol: usize,
}

/// Supported modulation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulationScheme {
    #[default]
    Qpsk,
}

impl std::str::FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Self::Qpsk),
            other => Err(Error::InvalidConfig(format!("unknown modulation scheme `{other}`"))),
        }
    }
}

impl ModulationScheme {
    pub fn constellation(self) -> Constellation {
        match self {
            ModulationScheme::Qpsk => Constellation::qpsk(),
        }
    }
}

impl Constellation {
    /// Gray-labelled QPSK with unit average energy: `(b¹ + j b²) / √2`.
    pub fn qpsk() -> Self {
        let mut points = Vec::with_capacity(4);
        let mut labels = Vec::with_capacity(4);
        for idx in 0..4usize {
            let b1 = if idx & 0b10 == 0 { 1.0 } else { -1.0 };
            let b2 = if idx & 0b01 == 0 { 1.0 } else { -1.0 };
            points.push(C64::new(b1, b2) * FRAC_1_SQRT_2);
            labels.push(vec![b1, b2]);
        }
        Self {
            points,
            labels,
            bits_per_symbol: 2,
        }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn labels(&self) -> &[Vec<f64>] {
        &self.labels
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Average symbol energy over uniformly used points.
    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Maps GF(2) bits (MSB first within a symbol) to constellation points.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let mc = self.bits_per_symbol;
        if bits.len() % mc != 0 {
            return Err(Error::DimensionMismatch {
                context: "bit count must be a multiple of bits per symbol",
                expected: bits.len().div_ceil(mc) * mc,
                found: bits.len(),
            });
        }
        Ok(bits
            .chunks_exact(mc)
            .map(|chunk| {
                let idx = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
                self.points[idx]
            })
            .collect())
    }

    /// Minimum-distance demapping back to GF(2) bits.
    pub fn hard_demap(&self, symbols: &[C64]) -> Vec<u8> {
        let mc = self.bits_per_symbol;
        let mut bits = Vec::with_capacity(symbols.len() * mc);
        for s in symbols {
            let (idx, _) = self
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (s - p).norm_sqr()))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            for l in (0..mc).rev() {
                bits.push(((idx >> l) & 1) as u8);
            }
        }
        bits
    }

    /// Prior probability of every point given per-bit LLRs `le`.
    pub fn point_probabilities(&self, le: &[f64]) -> Vec<f64> {
        self.labels
            .iter()
            .map(|label| {
                label
                    .iter()
                    .zip(le)
                    .map(|(s, l)| 1.0 / (1.0 + (-s * l).exp()))
                    .product()
            })
            .collect()
    }

    /// Soft symbol mean and variance by enumerating the constellation.
    pub fn soft_symbol_enumerated(&self, le: &[f64]) -> (C64, f64) {
        let probs = self.point_probabilities(le);
        let mean: C64 = self.points.iter().zip(&probs).map(|(x, p)| x * p).sum();
        let energy: f64 = self.points.iter().zip(&probs).map(|(x, p)| x.norm_sqr() * p).sum();
        (mean, (energy - mean.norm_sqr()).max(0.0))
    }
}

/// Closed-form soft QPSK symbol `(tanh(L¹/2) + j tanh(L²/2)) / √2`.
#[inline]
pub fn soft_qpsk(le1: f64, le2: f64) -> C64 {
    C64::new((le1 / 2.0).tanh(), (le2 / 2.0).tanh()) * FRAC_1_SQRT_2
}

/// Soft symbol estimate from extrinsic LLRs.
pub fn soft_symbol(le: &[f64], scheme: ModulationScheme) -> C64 {
    match scheme {
        ModulationScheme::Qpsk => soft_qpsk(le[0], le[1]),
    }
}

/// Maps GF(2) bits to symbols of `scheme`.
pub fn map_bits(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<C64>> {
    scheme.constellation().map_bits(bits)
}

pub fn hard_demap(symbols: &[C64], scheme: ModulationScheme) -> Vec<u8> {
    scheme.constellation().hard_demap(symbols)
}

/// Which second-moment surrogate feeds the interference covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorVariance {
    /// `q_j = |x̃_j|²`.
    #[default]
    Instantaneous,
    /// `q_j = σ_x² - v_j` where `v_j` is the posterior symbol variance.
    Complement,
}

/// Soft symbol means and second-moment surrogates for all K users at one
/// channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSymbolBelief {
    pub x_tilde: Vec<C64>,
    pub q: Vec<f64>,
}

impl SoftSymbolBelief {
    /// The no-prior belief (`x̃ = 0`, `q = 0`).
    pub fn zero(users: usize) -> Self {
        Self {
            x_tilde: vec![C64::new(0.0, 0.0); users],
            q: vec![0.0; users],
        }
    }

    /// Builds the belief from one LLR group (`bits_per_symbol` values) per user.
    pub fn from_llrs(per_user: &[&[f64]], constellation: &Constellation, mode: PriorVariance) -> Self {
        let mut x_tilde = Vec::with_capacity(per_user.len());
        let mut q = Vec::with_capacity(per_user.len());
        for le in per_user {
            let (mean, var) = if constellation.bits_per_symbol() == 2 && constellation.len() == 4 {
                let m = soft_qpsk(le[0], le[1]);
                (m, (SIGMA_X2 - m.norm_sqr()).max(0.0))
            } else {
                constellation.soft_symbol_enumerated(le)
            };
            x_tilde.push(mean);
            q.push(match mode {
                PriorVariance::Instantaneous => mean.norm_sqr(),
                PriorVariance::Complement => (SIGMA_X2 - var).clamp(0.0, SIGMA_X2),
            });
        }
        Self { x_tilde, q }
    }

    pub fn users(&self) -> usize {
        self.x_tilde.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn channel_is_deterministic_per_seed() {
        let a = generate_channel(2, 1, 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = generate_channel(2, 1, 1.0, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a.h, b.h);
        let big = generate_channel(32, 12, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!((big.antennas(), big.users()), (32, 12));
    }

    #[test]
    fn channel_rejects_bad_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_channel(2, 3, 1.0, &mut rng).is_err());
        assert!(generate_channel(2, 0, 1.0, &mut rng).is_err());
        assert!(generate_channel(2, 1, 0.0, &mut rng).is_err());
    }

    #[test]
    fn channel_entries_have_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += complex_gaussian(&mut rng, 1.0).norm_sqr();
        }
        assert!((acc / n as f64 - 1.0).abs() < 0.02);
    }

    #[test]
    fn transmit_noiseless_and_noise_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = CMatrix::from_row_major(2, 1, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(transmit(&h, &[c(1.0, 0.0)], 0.0, &mut rng).unwrap(), vec![c(1.0, 0.0); 2]);

        let h = CMatrix::zeros(4, 1);
        let sigma2 = 0.3;
        let mut acc = 0.0;
        let trials = 25_000;
        for _ in 0..trials {
            let y = transmit(&h, &[c(0.0, 0.0)], sigma2, &mut rng).unwrap();
            acc += y.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        let est = acc / (4 * trials) as f64;
        assert!((est / sigma2 - 1.0).abs() < 0.02, "{est}");
        assert!(transmit(&h, &[c(0.0, 0.0); 2], sigma2, &mut rng).is_err());
    }

    #[test]
    fn qpsk_mapping() {
        let s = FRAC_1_SQRT_2;
        let q = Constellation::qpsk();
        assert_eq!(q.map_bits(&[0, 0]).unwrap(), vec![c(s, s)]);
        assert_eq!(q.map_bits(&[1, 0]).unwrap(), vec![c(-s, s)]);
        assert!(q.map_bits(&[1, 0, 1]).is_err());
        assert!((q.average_energy() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qpsk_round_trip_512_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits: Vec<u8> = (0..512).map(|_| rng.random_range(0..2u8)).collect();
        let syms = map_bits(&bits, ModulationScheme::Qpsk).unwrap();
        assert_eq!(hard_demap(&syms, ModulationScheme::Qpsk), bits);
    }

    #[test]
    fn soft_symbol_examples() {
        let s = FRAC_1_SQRT_2;
        assert_eq!(soft_symbol(&[0.0, 0.0], ModulationScheme::Qpsk), c(0.0, 0.0));
        let sure = soft_symbol(&[f64::INFINITY, f64::NEG_INFINITY], ModulationScheme::Qpsk);
        assert_eq!(sure, c(s, -s));
        let q = Constellation::qpsk();
        let (enumerated, _) = q.soft_symbol_enumerated(&[2.0, 0.0]);
        let closed = soft_symbol(&[2.0, 0.0], ModulationScheme::Qpsk);
        assert!((enumerated - closed).norm() < 1e-12);
        assert!((closed.re - 1f64.tanh() * s).abs() < 1e-15 && closed.im == 0.0);
        assert!((closed.re - 0.53855).abs() < 1e-4);
    }

    #[test]
    fn enumeration_matches_tanh_on_grid() {
        let q = Constellation::qpsk();
        let grid: Vec<f64> = (0..=40).map(|i| -20.0 + i as f64).collect();
        for &a in &grid {
            for &b in &grid {
                let (e, _) = q.soft_symbol_enumerated(&[a, b]);
                assert!((e - soft_qpsk(a, b)).norm() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn soft_magnitude_grows_with_reliability() {
        let mut prev = 0.0;
        for i in 0..50 {
            let m = soft_qpsk(i as f64 * 0.5, 0.7).norm();
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn belief_modes_agree_for_constant_modulus() {
        let q = Constellation::qpsk();
        let llrs = [[1.0, -2.0], [0.0, 0.5], [8.0, 8.0]];
        let refs: Vec<&[f64]> = llrs.iter().map(|l| l.as_slice()).collect();
        let a = SoftSymbolBelief::from_llrs(&refs, &q, PriorVariance::Instantaneous);
        let b = SoftSymbolBelief::from_llrs(&refs, &q, PriorVariance::Complement);
        for (x, y) in a.q.iter().zip(&b.q) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.q.iter().all(|&v| (0.0..=SIGMA_X2).contains(&v)));
    }

    #[test]
    fn snr_conventions() {
        assert!((SnrConvention::PerUser.noise_variance(10.0, 12) - 0.1).abs() < 1e-15);
        assert!((SnrConvention::SumPower.noise_variance(10.0, 12) - 1.2).abs() < 1e-12);
    }
}
