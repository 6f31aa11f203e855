//! Outer detection/decoding loop with extrinsic LLR exchange.
//!
//! Iteration 1 detects without priors, scales the detector LLRs by the
//! offline factor `α_k` and decodes. Later iterations rebuild the soft symbol
//! beliefs from the decoder extrinsics, detect with soft interference
//! cancellation, scale by the online factor `f_k` (fixed at iteration 2) and
//! decode again. A user whose decoder reached a valid codeword keeps its
//! decision and its last extrinsics; the loop ends early once every user has
//! converged.

use crate::detector::{detect_user, DetectorOptions, DetectorWorkspace, LLR_CLIP};
use crate::error::{Error, Result};
use crate::ldpc::scaling::{mean_abs, online_scaling, ScalingState};
use crate::ldpc::{LdpcCode, QuasiUniformQuantizer, SpaDecoder, DEFAULT_INNER_ITERATIONS};
use crate::linalg::{CMatrix, C64};
use crate::modem::{Constellation, PriorVariance, SoftSymbolBelief};

/// Receiver settings for [`run_idd`].
#[derive(Debug, Clone)]
pub struct IddParams {
    pub detector: DetectorOptions,
    pub prior_variance: PriorVariance,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Quasi-uniform quantizer for decoder messages and the detector-to-decoder LLRs.
    pub quantizer: Option<QuasiUniformQuantizer>,
    /// Also quantize the decoder-to-detector extrinsics.
    pub quantize_feedback: bool,
    pub offline_scaling: bool,
    pub online_scaling: bool,
}

impl Default for IddParams {
    fn default() -> Self {
        Self {
            detector: DetectorOptions::default(),
            prior_variance: PriorVariance::Instantaneous,
            outer_iterations: 3,
            inner_iterations: DEFAULT_INNER_ITERATIONS,
            quantizer: None,
            quantize_feedback: true,
            offline_scaling: false,
            online_scaling: false,
        }
    }
}

/// Receiver state after one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    /// Decoded message bits per user.
    pub decoded: Vec<Vec<u8>>,
    pub converged: Vec<bool>,
    /// Mean |L_c| of the unscaled detector output per user (0 when skipped).
    pub mean_abs_llr: Vec<f64>,
    /// Scaling factor applied to each user's decoder input.
    pub applied_scale: Vec<f64>,
    /// Whether this iteration ran the detector and decoder at all.
    pub executed: bool,
}

impl IterationReport {
    /// `(bit_errors, frame_errors)` against the transmitted messages.
    pub fn errors(&self, truth: &[Vec<u8>]) -> (u64, u64) {
        let mut bits = 0;
        let mut frames = 0;
        for (dec, tx) in self.decoded.iter().zip(truth) {
            let e = dec.iter().zip(tx).filter(|(a, b)| a != b).count() as u64;
            bits += e;
            frames += (e > 0) as u64;
        }
        (bits, frames)
    }
}

#[derive(Debug, Clone)]
pub struct IddOutput {
    /// One report per configured outer iteration; iterations after an early
    /// exit repeat the final decisions with `executed == false`.
    pub iterations: Vec<IterationReport>,
    /// Scaling state after the run (with `online` set where it was computed).
    pub scaling: Vec<ScalingState>,
    /// Final detector-bound extrinsics per user.
    pub extrinsic: Vec<Vec<f64>>,
}

impl IddOutput {
    pub fn final_decisions(&self) -> &[Vec<u8>] {
        &self.iterations.last().expect("at least one iteration").decoded
    }
}

fn beliefs_from_extrinsics(
    le: &[Vec<f64>],
    channel_uses: usize,
    constellation: &Constellation,
    mode: PriorVariance,
) -> Vec<SoftSymbolBelief> {
    let mc = constellation.bits_per_symbol();
    (0..channel_uses)
        .map(|t| {
            let groups: Vec<&[f64]> = le.iter().map(|l| &l[t * mc..(t + 1) * mc]).collect();
            SoftSymbolBelief::from_llrs(&groups, constellation, mode)
        })
        .collect()
}

/// Runs the iterative receiver on one fading block.
///
/// `observations[t]` is the quantized M-vector at channel use `t`; each user's
/// codeword spans all channel uses. `scaling` carries one trained state per
/// user (ignored when scaling is disabled).
#[allow(clippy::too_many_arguments)]
pub fn run_idd(
    observations: &[Vec<C64>],
    h_hat: &CMatrix,
    sigma_n2: f64,
    code: &LdpcCode,
    decoder: &SpaDecoder,
    constellation: &Constellation,
    params: &IddParams,
    scaling: &[ScalingState],
) -> Result<IddOutput> {
    let users = h_hat.cols();
    let mc = constellation.bits_per_symbol();
    if observations.len() * mc != code.n() {
        return Err(Error::DimensionMismatch {
            context: "coded bits per block",
            expected: code.n(),
            found: observations.len() * mc,
        });
    }
    if params.outer_iterations == 0 {
        return Err(Error::InvalidConfig("at least one outer iteration is required".into()));
    }
    let scaling_enabled = params.offline_scaling || params.online_scaling;
    if scaling_enabled && scaling.len() != users {
        return Err(Error::DimensionMismatch {
            context: "scaling states",
            expected: users,
            found: scaling.len(),
        });
    }

    let ws = DetectorWorkspace::new(h_hat, sigma_n2)?;
    let quantizer = params.quantizer.as_ref();
    let mut states: Vec<ScalingState> = if scaling_enabled {
        scaling.iter().map(|s| ScalingState { online: None, ..*s }).collect()
    } else {
        vec![ScalingState::identity(); users]
    };
    let mut le = vec![vec![0.0; code.n()]; users];
    let mut decoded = vec![vec![0u8; code.k()]; users];
    let mut converged = vec![false; users];
    let mut reports = Vec::with_capacity(params.outer_iterations);

    for iteration in 1..=params.outer_iterations {
        if converged.iter().all(|&c| c) {
            let last: &IterationReport = reports.last().expect("iteration 1 always runs");
            reports.push(IterationReport {
                iteration,
                executed: false,
                ..last.clone()
            });
            continue;
        }
        let beliefs = (iteration > 1)
            .then(|| beliefs_from_extrinsics(&le, observations.len(), constellation, params.prior_variance));
        let mut mean_abs_llr = vec![0.0; users];
        let mut applied_scale = vec![0.0; users];
        let mut next_le = le.clone();

        for k in 0..users {
            if converged[k] {
                continue;
            }
            let mut lc = detect_user(
                &ws,
                observations,
                beliefs.as_deref(),
                &le[k],
                k,
                constellation,
                &params.detector,
            )?;
            let raw_mean = mean_abs(&lc);
            mean_abs_llr[k] = raw_mean;
            let state = &mut states[k];
            let scale = if iteration == 1 {
                if params.offline_scaling {
                    state.alpha
                } else {
                    1.0
                }
            } else if params.online_scaling && state.scaled_reference() > 0.0 {
                let f = state.online.unwrap_or_else(|| online_scaling(state, raw_mean));
                state.online = Some(f);
                f
            } else {
                1.0
            };
            applied_scale[k] = scale;
            if scale != 1.0 {
                lc.iter_mut().for_each(|l| *l *= scale);
            }
            if let Some(q) = quantizer {
                q.quantize_slice(&mut lc);
            }
            let out = decoder.decode(&lc, quantizer, params.inner_iterations);
            let mut extrinsic = out.extrinsic;
            for e in &mut extrinsic {
                *e = e.clamp(-LLR_CLIP, LLR_CLIP);
            }
            if let (Some(q), true) = (quantizer, params.quantize_feedback) {
                q.quantize_slice(&mut extrinsic);
            }
            next_le[k] = extrinsic;
            decoded[k] = code.extract_message(&out.hard_bits);
            converged[k] = out.converged;
        }
        le = next_le;
        reports.push(IterationReport {
            iteration,
            decoded: decoded.clone(),
            converged: converged.clone(),
            mean_abs_llr,
            applied_scale,
            executed: true,
        });
    }

    Ok(IddOutput {
        iterations: reports,
        scaling: states,
        extrinsic: le,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::{complex_gaussian, generate_channel};
    use crate::quantization::quantize_1bit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Block {
        messages: Vec<Vec<u8>>,
        observations: Vec<Vec<C64>>,
        h: CMatrix,
    }

    fn block(code: &LdpcCode, m: usize, k: usize, sigma_n2: f64, seed: u64) -> Block {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Constellation::qpsk();
        let messages: Vec<Vec<u8>> = (0..k)
            .map(|_| (0..code.k()).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let symbols: Vec<Vec<C64>> = messages
            .iter()
            .map(|msg| q.map_bits(&code.encode(msg).unwrap()).unwrap())
            .collect();
        let ch = generate_channel(m, k, sigma_n2, &mut rng).unwrap();
        let observations = (0..code.n() / 2)
            .map(|t| {
                let x: Vec<C64> = symbols.iter().map(|s| s[t]).collect();
                let mut y = ch.h.mul_vec(&x).unwrap();
                for v in &mut y {
                    *v += complex_gaussian(&mut rng, sigma_n2);
                }
                quantize_1bit(&y)
            })
            .collect();
        Block {
            messages,
            observations,
            h: ch.h,
        }
    }

    #[test]
    fn single_pass_baseline_runs_once() {
        let code = LdpcCode::construct(512, 0.5, 1).unwrap();
        let dec = SpaDecoder::new(&code);
        let b = block(&code, 8, 2, 0.5, 1);
        let params = IddParams {
            outer_iterations: 1,
            ..Default::default()
        };
        let out = run_idd(&b.observations, &b.h, 0.5, &code, &dec, &Constellation::qpsk(), &params, &[])
            .unwrap();
        assert_eq!(out.iterations.len(), 1);
        assert!(out.iterations[0].executed);
        assert!(out.scaling.iter().all(|s| s.online.is_none()));
    }

    #[test]
    fn noiseless_single_user_converges_first_iteration() {
        let code = LdpcCode::construct(512, 0.5, 1).unwrap();
        let dec = SpaDecoder::new(&code);
        let sigma_n2 = 1e-6;
        let b = block(&code, 4, 1, sigma_n2, 2);
        let out = run_idd(
            &b.observations,
            &b.h,
            sigma_n2,
            &code,
            &dec,
            &Constellation::qpsk(),
            &IddParams::default(),
            &[],
        )
        .unwrap();
        assert!(out.iterations[0].converged[0]);
        assert_eq!(out.iterations[0].errors(&b.messages), (0, 0));
        assert!(!out.iterations[1].executed);
        assert_eq!(out.final_decisions(), &b.messages[..]);
    }

    #[test]
    fn iterations_help_a_loaded_system() {
        let code = LdpcCode::construct(512, 0.5, 1).unwrap();
        let dec = SpaDecoder::new(&code);
        let sigma_n2 = 10f64.powf(-0.5);
        let params = IddParams::default();
        let mut first = 0;
        let mut last = 0;
        for seed in 0..4 {
            let b = block(&code, 16, 6, sigma_n2, 100 + seed);
            let out = run_idd(&b.observations, &b.h, sigma_n2, &code, &dec, &Constellation::qpsk(), &params, &[])
                .unwrap();
            first += out.iterations[0].errors(&b.messages).0;
            last += out.iterations[2].errors(&b.messages).0;
        }
        assert!(last <= first, "first={first} last={last}");
    }

    #[test]
    fn rejects_wrong_block_length() {
        let code = LdpcCode::construct(512, 0.5, 1).unwrap();
        let dec = SpaDecoder::new(&code);
        let obs = vec![vec![C64::new(0.0, 0.0); 2]; 10];
        let h = CMatrix::identity(2);
        assert!(run_idd(&obs, &h, 1.0, &code, &dec, &Constellation::qpsk(), &IddParams::default(), &[]).is_err());
    }
}
