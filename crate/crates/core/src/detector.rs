//! Low-resolution-aware MMSE detection with soft parallel interference
//! cancellation, plus a conventional MMSE baseline.
//!
//! Per fading block the receiver computes the unquantized covariance
//! `C_y = σ_x² H Hᴴ + σ_n² I`, the Bussgang gain `K = diag(C_y)^{-1/2}` and the
//! quantized covariance `C_yQ` (arcsine law). These live in a
//! [`DetectorWorkspace`] and are shared by every user, channel use and outer
//! iteration. Only the prior-dependent part of the filter covariance
//!
//! ```text
//! C_yQk = C_yQ - (C_yQx̃ Hᴴ)ᴴ - C_yQx̃ Hᴴ + H C_x̃ Hᴴ,   C_yQx̃ = √(2/π) K H C_x̃
//! ```
//!
//! is rebuilt per channel use. With `P = H C_x̃ Hᴴ` this is elementwise
//! `C_yQk[m,n] = C_yQ[m,n] + P[m,n] (1 - √(2/π)(K_m + K_n))`, which is what the
//! fast path assembles.
//!
//! That covariance belongs to the cancellation `y_Q - H x̃_k`. After 1-bit
//! quantization, interferer `j` appears in `y_Q` as `√(2/π) K h_j x_j`, so
//! subtracting `h_j x̃_j` overshoots by roughly `1/(√(2/π) K_m)`, about 4x for
//! twelve users. [`Cancellation::Bussgang`] subtracts `√(2/π) K H x̃_k`
//! instead, with `C_yQk[m,n] = C_yQ[m,n] - (2/π) K_m K_n P[m,n]`. It is the
//! default used by [`detect_user`]; the printed form stays available as
//! [`Cancellation::Verbatim`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_solve_in_place, dot_conj, CMatrix, Cholesky, C64};
use crate::modem::{Constellation, SoftSymbolBelief, SIGMA_X2};
use crate::quantization::{arcsine_covariance, bussgang_constant, quantize_sample};

/// LLR magnitude clip applied to every detector output.
pub const LLR_CLIP: f64 = 30.0;

/// Floor for the conditional variance `η²`.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Relative diagonal loading `λ = REGULARIZATION · trace(C) / M`, used only
/// when the unloaded factorization fails.
pub const REGULARIZATION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    #[default]
    LraMmse,
    MmseBaseline,
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lra-mmse" => Ok(Self::LraMmse),
            "mmse-baseline" | "mmse" => Ok(Self::MmseBaseline),
            other => Err(Error::InvalidConfig(format!("unknown detector `{other}`"))),
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::LraMmse => "lra-mmse",
            Self::MmseBaseline => "mmse-baseline",
        })
    }
}

/// Model for the conditional mean `μ_k = E[x̂_k | x]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanModel {
    /// `w_kᴴ (Q(h_k x + H x̃_k) - H x̃_k)`.
    #[default]
    Quantized,
    /// `w_kᴴ √(2/π) K h_k x`.
    Linearized,
}

/// What the soft interference cancellation subtracts from `y_Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cancellation {
    /// `y_Q - H x̃_k`, with `C_yQk` from the Bussgang cross-covariance. The
    /// subtracted term has the scale of the unquantized signal, so with
    /// accurate priors it adds more interference than it removes.
    Verbatim,
    /// `y_Q - √(2/π) K H x̃_k`, which removes the interference at the scale it
    /// has after quantization; `C_yQk = C_yQ - (2/π) K H C_x̃ Hᴴ K`.
    #[default]
    Bussgang,
}

impl std::str::FromStr for Cancellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(Self::Verbatim),
            "bussgang" => Ok(Self::Bussgang),
            other => Err(Error::InvalidConfig(format!("unknown cancellation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorOptions {
    pub kind: DetectorKind,
    pub mean_model: MeanModel,
    pub cancellation: Cancellation,
    pub llr_clip: f64,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self {
            kind: DetectorKind::LraMmse,
            mean_model: MeanModel::Quantized,
            cancellation: Cancellation::Bussgang,
            llr_clip: LLR_CLIP,
        }
    }
}

/// A receive filter `w_k` together with its cross-correlation vector `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserFilter {
    pub w: Vec<C64>,
    pub c: Vec<C64>,
}

impl UserFilter {
    /// `Re{w_kᴴ c}`; the imaginary part is round-off.
    pub fn gain(&self) -> f64 {
        dot_conj(&self.w, &self.c).re
    }

    /// `η² = r - r²`, floored at [`VARIANCE_FLOOR`].
    pub fn variance(&self) -> f64 {
        conditional_variance(self.gain())
    }
}

/// Per-block receiver statistics, built once and shared read-only.
#[derive(Debug, Clone)]
pub struct DetectorWorkspace {
    h: CMatrix,
    columns: Vec<Vec<C64>>,
    sigma_n2: f64,
    c_y: CMatrix,
    gain: Vec<f64>,
    c_yq: CMatrix,
    base: Cholesky,
    /// `1 - √(2/π)(K_m + K_n)`, row-major M×M.
    pic_weight: Vec<f64>,
    /// `-(2/π) K_m K_n`, row-major M×M.
    bussgang_weight: Vec<f64>,
    /// `h_j h_jᴴ` for every user, row-major M×M each.
    outer: Vec<Vec<C64>>,
}

impl DetectorWorkspace {
    pub fn new(h: &CMatrix, sigma_n2: f64) -> Result<Self> {
        if !(sigma_n2 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be positive, got {sigma_n2}"
            )));
        }
        let m = h.rows();
        let c_y = unquantized_covariance(h, sigma_n2);
        let gain: Vec<f64> = c_y.diagonal().iter().map(|d| 1.0 / d.re.sqrt()).collect();
        let c_yq = arcsine_covariance(&c_y)?;
        let base = Cholesky::regularized(&c_yq, REGULARIZATION)?;
        let a = bussgang_constant();
        let mut pic_weight = vec![0.0; m * m];
        let mut bussgang_weight = vec![0.0; m * m];
        for r in 0..m {
            for c in 0..m {
                pic_weight[r * m + c] = 1.0 - a * (gain[r] + gain[c]);
                bussgang_weight[r * m + c] = -a * a * gain[r] * gain[c];
            }
        }
        let columns: Vec<Vec<C64>> = (0..h.cols()).map(|k| h.column(k)).collect();
        let outer = columns
            .iter()
            .map(|hj| {
                let mut o = Vec::with_capacity(m * m);
                for r in 0..m {
                    for c in 0..m {
                        o.push(hj[r] * hj[c].conj());
                    }
                }
                o
            })
            .collect();
        Ok(Self {
            h: h.clone(),
            columns,
            sigma_n2,
            c_y,
            gain,
            c_yq,
            base,
            pic_weight,
            bussgang_weight,
            outer,
        })
    }

    pub fn antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn users(&self) -> usize {
        self.h.cols()
    }

    pub fn channel(&self) -> &CMatrix {
        &self.h
    }

    pub fn column(&self, k: usize) -> &[C64] {
        &self.columns[k]
    }

    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    pub fn unquantized_cov(&self) -> &CMatrix {
        &self.c_y
    }

    pub fn gain(&self) -> &[f64] {
        &self.gain
    }

    pub fn quantized_cov(&self) -> &CMatrix {
        &self.c_yq
    }

    /// `c = σ_x² √(2/π) K h_k`.
    pub fn cross_vector(&self, k: usize) -> Vec<C64> {
        let a = SIGMA_X2 * bussgang_constant();
        self.columns[k]
            .iter()
            .zip(&self.gain)
            .map(|(h, g)| h * (a * g))
            .collect()
    }

    /// The full prior-aware covariance `C_yQk` of the printed cancellation
    /// `y_Q - H x̃_k`, as a dense matrix.
    pub fn filter_covariance(&self, belief: &SoftSymbolBelief, k: usize) -> CMatrix {
        self.filter_covariance_for(belief, k, Cancellation::Verbatim)
    }

    /// [`Self::filter_covariance`] for a given cancellation rule.
    pub fn filter_covariance_for(&self, belief: &SoftSymbolBelief, k: usize, cancellation: Cancellation) -> CMatrix {
        let m = self.antennas();
        let mut buf = vec![C64::new(0.0, 0.0); m * m];
        self.assemble_lower(belief, k, cancellation, &mut buf);
        let mut out = CMatrix::zeros(m, m);
        for r in 0..m {
            for c in 0..=r {
                out[(r, c)] = buf[r * m + c];
                out[(c, r)] = buf[r * m + c].conj();
            }
        }
        out
    }

    fn has_prior(belief: &SoftSymbolBelief, k: usize) -> bool {
        belief.q.iter().enumerate().any(|(j, &q)| j != k && q > 0.0)
    }

    /// Writes the lower triangle of `C_yQk` into `buf`.
    fn assemble_lower(&self, belief: &SoftSymbolBelief, k: usize, cancellation: Cancellation, buf: &mut [C64]) {
        let m = self.antennas();
        for r in 0..m {
            let row = &mut buf[r * m..r * m + r + 1];
            row.fill(C64::new(0.0, 0.0));
        }
        for (j, outer) in self.outer.iter().enumerate() {
            let q = belief.q[j];
            if j == k || q == 0.0 {
                continue;
            }
            for r in 0..m {
                let dst = &mut buf[r * m..r * m + r + 1];
                let src = &outer[r * m..r * m + r + 1];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * q;
                }
            }
        }
        let c_yq = self.c_yq.as_slice();
        let weight = match cancellation {
            Cancellation::Verbatim => &self.pic_weight,
            Cancellation::Bussgang => &self.bussgang_weight,
        };
        for r in 0..m {
            for c in 0..=r {
                let i = r * m + c;
                buf[i] = c_yq[i] + buf[i] * weight[i];
            }
        }
    }

    /// Solves `C_yQk w = c` for the printed cancellation `y_Q - H x̃_k`.
    pub fn build_filter(&self, belief: &SoftSymbolBelief, k: usize) -> Result<UserFilter> {
        self.build_filter_for(belief, k, Cancellation::Verbatim)
    }

    /// [`Self::build_filter`] for a given cancellation rule.
    pub fn build_filter_for(&self, belief: &SoftSymbolBelief, k: usize, cancellation: Cancellation) -> Result<UserFilter> {
        let mut scratch = FilterScratch::new(self.antennas());
        self.build_filter_with(belief, k, cancellation, &mut scratch)
    }

    fn build_filter_with(
        &self,
        belief: &SoftSymbolBelief,
        k: usize,
        cancellation: Cancellation,
        scratch: &mut FilterScratch,
    ) -> Result<UserFilter> {
        check_user(k, self.users())?;
        if belief.users() != self.users() {
            return Err(Error::DimensionMismatch {
                context: "belief users",
                expected: self.users(),
                found: belief.users(),
            });
        }
        let c = self.cross_vector(k);
        if !Self::has_prior(belief, k) {
            return Ok(UserFilter {
                w: self.base.solve(&c),
                c,
            });
        }
        let m = self.antennas();
        self.assemble_lower(belief, k, cancellation, &mut scratch.cov);
        let trace: f64 = (0..m).map(|i| scratch.cov[i * m + i].re).sum();
        let lambda = REGULARIZATION * trace / m as f64;
        for boost in [0.0, 1.0, 100.0] {
            scratch.factor.copy_from_slice(&scratch.cov);
            for i in 0..m {
                scratch.factor[i * m + i] += lambda * boost;
            }
            if cholesky_in_place(&mut scratch.factor, m) {
                let mut w = c.clone();
                cholesky_solve_in_place(&scratch.factor, m, &mut w);
                return Ok(UserFilter { w, c });
            }
        }
        Err(Error::SingularCovariance)
    }

    /// Conventional MMSE filter for user `k`; ignores quantization and priors.
    pub fn baseline_filter(&self, k: usize) -> Result<UserFilter> {
        check_user(k, self.users())?;
        let chol = Cholesky::regularized(&self.c_y, REGULARIZATION)?;
        let c: Vec<C64> = self.columns[k].iter().map(|h| h * SIGMA_X2).collect();
        Ok(UserFilter { w: chol.solve(&c), c })
    }

    /// `H x̃_k`: the soft interference seen by user `k`.
    pub fn soft_interference(&self, belief: &SoftSymbolBelief, k: usize, out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        for (j, hj) in self.columns.iter().enumerate() {
            let x = belief.x_tilde[j];
            if j == k || (x.re == 0.0 && x.im == 0.0) {
                continue;
            }
            for (o, h) in out.iter_mut().zip(hj) {
                *o += h * x;
            }
        }
    }
}

fn check_user(k: usize, users: usize) -> Result<()> {
    if k >= users {
        return Err(Error::DimensionMismatch {
            context: "user index",
            expected: users,
            found: k,
        });
    }
    Ok(())
}

/// Reusable buffers for the per-symbol filter path.
#[derive(Debug, Clone)]
pub struct FilterScratch {
    cov: Vec<C64>,
    factor: Vec<C64>,
    interference: Vec<C64>,
    residual: Vec<C64>,
    hypothesis: Vec<C64>,
}

impl FilterScratch {
    pub fn new(m: usize) -> Self {
        Self {
            cov: vec![C64::new(0.0, 0.0); m * m],
            factor: vec![C64::new(0.0, 0.0); m * m],
            interference: vec![C64::new(0.0, 0.0); m],
            residual: vec![C64::new(0.0, 0.0); m],
            hypothesis: vec![C64::new(0.0, 0.0); m],
        }
    }
}

/// `C_y = σ_x² H Hᴴ + σ_n² I`.
pub fn unquantized_covariance(h: &CMatrix, sigma_n2: f64) -> CMatrix {
    let m = h.rows();
    let mut c = CMatrix::zeros(m, m);
    for r in 0..m {
        for col in r..m {
            let v: C64 = h.row(r).iter().zip(h.row(col)).map(|(a, b)| a * b.conj()).sum();
            let v = v * SIGMA_X2 + if r == col { C64::new(sigma_n2, 0.0) } else { C64::new(0.0, 0.0) };
            c[(r, col)] = v;
            c[(col, r)] = v.conj();
        }
    }
    // exact real diagonal
    for i in 0..m {
        c[(i, i)].im = 0.0;
    }
    c
}

/// Soft parallel interference cancellation: `y_Q - H x̃_k`, where `x̃_k` is the
/// belief with user `k` zeroed.
pub fn soft_pic(y_q: &[C64], h: &CMatrix, belief: &SoftSymbolBelief, k: usize) -> Result<Vec<C64>> {
    if y_q.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            context: "received vector",
            expected: h.rows(),
            found: y_q.len(),
        });
    }
    if belief.users() != h.cols() {
        return Err(Error::DimensionMismatch {
            context: "belief users",
            expected: h.cols(),
            found: belief.users(),
        });
    }
    check_user(k, h.cols())?;
    let mut x = belief.x_tilde.clone();
    x[k] = C64::new(0.0, 0.0);
    let hx = h.mul_vec(&x)?;
    Ok(y_q.iter().zip(&hx).map(|(y, i)| y - i).collect())
}

/// The LRA-MMSE filter `w_k` and cross-correlation `c` for one channel use,
/// for the printed cancellation `y_Q - H x̃_k`.
pub fn build_filter(
    h: &CMatrix,
    sigma_n2: f64,
    belief: &SoftSymbolBelief,
    k: usize,
) -> Result<UserFilter> {
    DetectorWorkspace::new(h, sigma_n2)?.build_filter(belief, k)
}

/// `x̂_k = w_kᴴ y_Qk`.
pub fn filter_output(w: &[C64], y: &[C64]) -> C64 {
    dot_conj(w, y)
}

/// `η² = r - r²` floored at [`VARIANCE_FLOOR`].
pub fn conditional_variance(r: f64) -> f64 {
    (r - r * r).max(VARIANCE_FLOOR)
}

/// Conditional mean and variance of `x̂_k` given that user `k` sent `x`.
pub fn conditional_moments(
    filter: &UserFilter,
    h: &CMatrix,
    belief: &SoftSymbolBelief,
    k: usize,
    x: C64,
    model: MeanModel,
) -> Result<(C64, f64)> {
    let eta2 = filter.variance();
    let mu = match model {
        MeanModel::Linearized => dot_conj(&filter.w, &filter.c) * (x / SIGMA_X2),
        MeanModel::Quantized => {
            let mut xk = belief.x_tilde.clone();
            check_user(k, xk.len())?;
            xk[k] = C64::new(0.0, 0.0);
            let interference = h.mul_vec(&xk)?;
            let hk = h.column(k);
            filter
                .w
                .iter()
                .zip(hk.iter().zip(&interference))
                .map(|(w, (hk, i))| w.conj() * (quantize_sample(hk * x + i) - i))
                .sum()
        }
    };
    Ok((mu, eta2))
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn log_sum_exp(acc: (f64, f64), v: f64) -> (f64, f64) {
    // (running max, running sum of exp(x - max))
    let (m, s) = acc;
    if v == f64::NEG_INFINITY {
        (m, s)
    } else if v <= m {
        (m, s + (v - m).exp())
    } else {
        (v, s * (m - v).exp() + 1.0)
    }
}

/// Extrinsic per-bit LLRs from the Gaussian likelihood of `x̂` under each
/// hypothesis, written into `out` (one value per bit of the constellation).
pub fn detector_llr_into(
    x_hat: C64,
    mus: &[C64],
    eta2: &[f64],
    constellation: &Constellation,
    le_prior: &[f64],
    llr_clip: f64,
    out: &mut [f64],
) {
    let mc = constellation.bits_per_symbol();
    let labels = constellation.labels();
    for (l, o) in out.iter_mut().enumerate().take(mc) {
        let mut num = (f64::NEG_INFINITY, 0.0);
        let mut den = (f64::NEG_INFINITY, 0.0);
        for (i, label) in labels.iter().enumerate() {
            let v2 = eta2[i];
            let mut metric = -(std::f64::consts::PI * v2).ln() - (x_hat - mus[i]).norm_sqr() / v2;
            for (s, le) in label.iter().zip(le_prior) {
                metric -= softplus(-s * le);
            }
            if label[l] > 0.0 {
                num = log_sum_exp(num, metric);
            } else {
                den = log_sum_exp(den, metric);
            }
        }
        let llr = (num.0 + num.1.ln()) - (den.0 + den.1.ln()) - le_prior[l];
        *o = if llr.is_nan() { 0.0 } else { llr.clamp(-llr_clip, llr_clip) };
    }
}

/// Extrinsic per-bit LLRs; see [`detector_llr_into`].
pub fn detector_llr(
    x_hat: C64,
    moments: &[(C64, f64)],
    constellation: &Constellation,
    le_prior: &[f64],
    llr_clip: f64,
) -> Vec<f64> {
    let mus: Vec<C64> = moments.iter().map(|m| m.0).collect();
    let eta2: Vec<f64> = moments.iter().map(|m| m.1).collect();
    let mut out = vec![0.0; constellation.bits_per_symbol()];
    detector_llr_into(x_hat, &mus, &eta2, constellation, le_prior, llr_clip, &mut out);
    out
}

/// Conventional MMSE filter `(σ_x² H Hᴴ + σ_n² I)^{-1} h_k σ_x²`.
pub fn mmse_baseline_filter(h: &CMatrix, sigma_n2: f64, k: usize) -> Result<Vec<C64>> {
    check_user(k, h.cols())?;
    let c_y = unquantized_covariance(h, sigma_n2);
    let chol = Cholesky::regularized(&c_y, REGULARIZATION)?;
    let rhs: Vec<C64> = h.column(k).iter().map(|v| v * SIGMA_X2).collect();
    Ok(chol.solve(&rhs))
}

/// Detects user `k` over a block of channel uses.
///
/// `observations[t]` is the quantized receive vector at channel use `t`.
/// `beliefs` carries the soft symbols of all users per channel use, or `None`
/// when no prior is available. `le_prior` holds the decoder extrinsics of
/// user `k` (`bits_per_symbol` per channel use) and is subtracted from the
/// posterior LLR. Returns the extrinsic detector LLRs of user `k`.
pub fn detect_user(
    ws: &DetectorWorkspace,
    observations: &[Vec<C64>],
    beliefs: Option<&[SoftSymbolBelief]>,
    le_prior: &[f64],
    k: usize,
    constellation: &Constellation,
    opts: &DetectorOptions,
) -> Result<Vec<f64>> {
    check_user(k, ws.users())?;
    let mc = constellation.bits_per_symbol();
    let t_len = observations.len();
    if le_prior.len() != mc * t_len {
        return Err(Error::DimensionMismatch {
            context: "prior LLRs",
            expected: mc * t_len,
            found: le_prior.len(),
        });
    }
    if let Some(b) = beliefs {
        if b.len() != t_len {
            return Err(Error::DimensionMismatch {
                context: "beliefs per channel use",
                expected: t_len,
                found: b.len(),
            });
        }
    }
    let m = ws.antennas();
    let points = constellation.points();
    let hk = ws.column(k);
    let mut scratch = FilterScratch::new(m);
    let mut mus = vec![C64::new(0.0, 0.0); points.len()];
    let mut eta2 = vec![0.0; points.len()];
    let mut out = vec![0.0; mc * t_len];

    let fixed = match opts.kind {
        DetectorKind::MmseBaseline => Some(ws.baseline_filter(k)?),
        DetectorKind::LraMmse if beliefs.is_none() => {
            Some(ws.build_filter_with(&SoftSymbolBelief::zero(ws.users()), k, opts.cancellation, &mut scratch)?)
        }
        DetectorKind::LraMmse => None,
    };

    let scale: Vec<f64> = match opts.cancellation {
        Cancellation::Verbatim => vec![1.0; m],
        Cancellation::Bussgang => ws.gain().iter().map(|g| bussgang_constant() * g).collect(),
    };
    let fill_moments = |filter: &UserFilter,
                        interference: &[C64],
                        hyp: &mut [C64],
                        mus: &mut [C64],
                        eta2: &mut [f64]| {
        let v = filter.variance();
        eta2.fill(v);
        match opts.mean_model {
            MeanModel::Linearized => {
                let r = dot_conj(&filter.w, &filter.c) / SIGMA_X2;
                for (mu, x) in mus.iter_mut().zip(points) {
                    *mu = r * x;
                }
            }
            MeanModel::Quantized => {
                for (mu, x) in mus.iter_mut().zip(points) {
                    for (((hv, h), i), g) in hyp.iter_mut().zip(hk).zip(interference).zip(&scale) {
                        *hv = quantize_sample(h * x + i) - i * g;
                    }
                    *mu = dot_conj(&filter.w, hyp);
                }
            }
        }
    };

    let zero_interference = vec![C64::new(0.0, 0.0); m];
    if let (Some(filter), None) = (&fixed, beliefs) {
        fill_moments(filter, &zero_interference, &mut scratch.hypothesis, &mut mus, &mut eta2);
    }

    for (t, y) in observations.iter().enumerate() {
        if y.len() != m {
            return Err(Error::DimensionMismatch {
                context: "received vector",
                expected: m,
                found: y.len(),
            });
        }
        let prior = &le_prior[t * mc..(t + 1) * mc];
        let x_hat = match beliefs {
            None => filter_output(&fixed.as_ref().expect("fixed filter").w, y),
            Some(b) => {
                let belief = &b[t];
                ws.soft_interference(belief, k, &mut scratch.interference);
                let owned;
                let filter = match &fixed {
                    Some(f) => f,
                    None => {
                        owned = ws.build_filter_with(belief, k, opts.cancellation, &mut scratch)?;
                        &owned
                    }
                };
                for (((r, yv), i), g) in scratch.residual.iter_mut().zip(y).zip(&scratch.interference).zip(&scale) {
                    *r = yv - i * g;
                }
                fill_moments(filter, &scratch.interference, &mut scratch.hypothesis, &mut mus, &mut eta2);
                filter_output(&filter.w, &scratch.residual)
            }
        };
        detector_llr_into(
            x_hat,
            &mus,
            &eta2,
            constellation,
            prior,
            opts.llr_clip,
            &mut out[t * mc..(t + 1) * mc],
        );
    }
    Ok(out)
}
