//! Bussgang-based LMMSE (BLMMSE) channel estimation from 1-bit quantized
//! pilot observations.
//!
//! With `Y_p = H X_p + N` (M×τ) and `y_p = vec(Y_p) = (X_pᵀ ⊗ I_M) vec(H) + n`,
//! the covariance of `y_p` under `C_h = I` is `(X_pᵀ X_p^* + σ_n² I_τ) ⊗ I_M`.
//! The arcsine law acts elementwise and `asin(0) = 0`, so the quantized
//! covariance keeps the Kronecker form `G ⊗ I_M`. The estimate therefore
//! reduces to
//!
//! ```text
//! Ĥ = Y_Q G^{-T} D X_pᴴ,   D = √(2/π) diag(X_pᵀ X_p^* + σ_n² I)^{-1/2}
//! ```
//!
//! which needs one τ×τ factorization instead of an Mτ×Mτ one.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Cholesky, C64};
use crate::quantization::{arcsine_covariance, bussgang_constant};
use crate::detector::REGULARIZATION;

/// Orthogonal pilot sequences for all users.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    /// K×τ pilot matrix.
    pub pilots: CMatrix,
    pub sigma_x2: f64,
}

impl PilotBlock {
    pub fn users(&self) -> usize {
        self.pilots.rows()
    }

    pub fn tau(&self) -> usize {
        self.pilots.cols()
    }

    /// The τ×τ core `X_pᵀ X_p^* + σ_n² I_τ`.
    pub fn core(&self, sigma_n2: f64) -> CMatrix {
        let tau = self.tau();
        let x = &self.pilots;
        let mut a = CMatrix::from_fn(tau, tau, |t, s| {
            (0..x.rows()).map(|k| x[(k, t)] * x[(k, s)].conj()).sum()
        });
        for t in 0..tau {
            a[(t, t)] = C64::new(a[(t, t)].re + sigma_n2, 0.0);
        }
        a
    }

    /// `X̃_p = X_pᵀ ⊗ I_M`.
    pub fn expanded(&self, m: usize) -> CMatrix {
        self.pilots.transpose().kron(&CMatrix::identity(m))
    }
}

/// K rows of the τ-point DFT matrix scaled to per-symbol power `σ_x²`.
pub fn build_pilot_matrix(users: usize, tau: usize, sigma_x2: f64) -> Result<PilotBlock> {
    if users == 0 || tau < users {
        return Err(Error::InvalidDimensions(format!(
            "pilot length tau={tau} must be at least K={users} >= 1"
        )));
    }
    let amp = sigma_x2.sqrt();
    let pilots = CMatrix::from_fn(users, tau, |k, t| {
        // reduce the exponent modulo tau before scaling to keep the phases exact
        let phase = -2.0 * PI * ((k * t) % tau) as f64 / tau as f64;
        C64::from_polar(amp, phase)
    });
    Ok(PilotBlock { pilots, sigma_x2 })
}

fn check_observations(y_qp: &CMatrix, pilots: &PilotBlock) -> Result<()> {
    if y_qp.cols() != pilots.tau() {
        return Err(Error::DimensionMismatch {
            context: "pilot observations (columns)",
            expected: pilots.tau(),
            found: y_qp.cols(),
        });
    }
    Ok(())
}

fn pilot_gains(core: &CMatrix) -> Vec<f64> {
    let a = bussgang_constant();
    core.diagonal().iter().map(|d| a / d.re.sqrt()).collect()
}

/// BLMMSE estimate of the M×K channel from M×τ quantized pilot observations.
pub fn blmmse_estimate(y_qp: &CMatrix, pilots: &PilotBlock, sigma_n2: f64) -> Result<CMatrix> {
    check_observations(y_qp, pilots)?;
    let core = pilots.core(sigma_n2);
    let g = arcsine_covariance(&core)?;
    let gains = pilot_gains(&core);
    let chol = Cholesky::regularized(&g, REGULARIZATION)?;
    // G Zᵀ = Y_Qᵀ
    let zt = chol.solve_matrix(&y_qp.transpose());
    let (m, k_users, tau) = (y_qp.rows(), pilots.users(), pilots.tau());
    let x = &pilots.pilots;
    Ok(CMatrix::from_fn(m, k_users, |r, k| {
        (0..tau).map(|t| zt[(t, r)] * gains[t] * x[(k, t)].conj()).sum()
    }))
}

/// Scaled least-squares reference `(A_p X̃_p)ᴴ y_Qp`, reshaped to M×K.
pub fn scaled_ls_estimate(y_qp: &CMatrix, pilots: &PilotBlock, sigma_n2: f64) -> Result<CMatrix> {
    check_observations(y_qp, pilots)?;
    let gains = pilot_gains(&pilots.core(sigma_n2));
    let x = &pilots.pilots;
    Ok(CMatrix::from_fn(y_qp.rows(), pilots.users(), |r, k| {
        (0..pilots.tau()).map(|t| y_qp[(r, t)] * gains[t] * x[(k, t)].conj()).sum()
    }))
}

/// Reference BLMMSE estimate that forms the full Mτ×Mτ covariance. Cubic in
/// `Mτ`; meant for cross-checking [`blmmse_estimate`] on small dimensions.
pub fn blmmse_estimate_dense(y_qp: &CMatrix, pilots: &PilotBlock, sigma_n2: f64) -> Result<CMatrix> {
    check_observations(y_qp, pilots)?;
    let (m, k_users, tau) = (y_qp.rows(), pilots.users(), pilots.tau());
    let xt = pilots.expanded(m);
    let mut c_yp = xt.mul(&xt.adjoint())?;
    for i in 0..m * tau {
        c_yp[(i, i)] += sigma_n2;
    }
    let c_yqp = arcsine_covariance(&c_yp.hermitian_part())?;
    let a = bussgang_constant();
    let ap: Vec<f64> = c_yp.diagonal().iter().map(|d| a / d.re.sqrt()).collect();
    let apx = CMatrix::from_fn(m * tau, k_users * m, |r, c| xt[(r, c)] * ap[r]);
    // column-major vectorization
    let y: Vec<C64> = (0..tau).flat_map(|t| (0..m).map(move |r| (r, t))).map(|(r, t)| y_qp[(r, t)]).collect();
    let z = Cholesky::regularized(&c_yqp, REGULARIZATION)?.solve(&y);
    let h = apx.adjoint().mul_vec(&z)?;
    Ok(CMatrix::from_fn(m, k_users, |r, k| h[k * m + r]))
}
