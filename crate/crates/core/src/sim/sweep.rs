//! Monte-Carlo BER/FER sweeps and the offline-scaling training phase.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::ThreadPool;

use super::config::{CsiMode, SystemConfig};
use super::rng::{block_stream, Purpose};
use crate::detector::{detect_user, DetectorWorkspace};
use crate::error::{Error, Result};
use crate::estimator::{blmmse_estimate, build_pilot_matrix, PilotBlock};
use crate::idd::{run_idd, IddParams};
use crate::ldpc::scaling::{offline_scaling_train, ScalingState};
use crate::ldpc::{LdpcCode, SpaDecoder};
use crate::linalg::{CMatrix, C64};
use crate::modem::{complex_gaussian, generate_channel, transmit, Constellation, SIGMA_X2};
use crate::quantization::{quantize_1bit, quantize_sample};

/// Error counts for one outer iteration, mergeable by addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorTally {
    pub bit_errors: u64,
    pub bits: u64,
    pub frame_errors: u64,
    pub frames: u64,
    pub blocks: u64,
    /// Sum over blocks of the squared per-block bit error count.
    pub block_errors_sq: u64,
}

impl ErrorTally {
    /// Tally for one block of `frames` codewords of `bits_per_frame` bits.
    pub fn from_block(bit_errors: u64, frame_errors: u64, frames: u64, bits_per_frame: u64) -> Self {
        Self {
            bit_errors,
            bits: frames * bits_per_frame,
            frame_errors,
            frames,
            blocks: 1,
            block_errors_sq: bit_errors * bit_errors,
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
        self.frame_errors += other.frame_errors;
        self.frames += other.frames;
        self.blocks += other.blocks;
        self.block_errors_sq += other.block_errors_sq;
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.frames as f64
        }
    }

    /// Standard error of [`Self::ber`] treating blocks as the independent
    /// unit, since all users of a block share one channel draw.
    pub fn ber_std_error(&self) -> f64 {
        if self.blocks < 2 || self.bits == 0 {
            return f64::INFINITY;
        }
        let b = self.blocks as f64;
        let per_block_bits = self.bits as f64 / b;
        let mean = self.bit_errors as f64 / b;
        let mean_sq = self.block_errors_sq as f64 / b;
        let var = (mean_sq - mean * mean).max(0.0) * b / (b - 1.0);
        (var / b).sqrt() / per_block_bits
    }
}

/// Per-iteration tallies of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub snr_db: f64,
    pub sigma_n2: f64,
    /// One tally per outer iteration.
    pub tallies: Vec<ErrorTally>,
    pub scaling: Vec<ScalingState>,
    pub seconds: f64,
}

/// Everything generated for one fading block.
#[derive(Debug, Clone)]
pub struct BlockData {
    pub messages: Vec<Vec<u8>>,
    pub coded: Vec<Vec<u8>>,
    pub channel: CMatrix,
    pub channel_estimate: CMatrix,
    pub observations: Vec<Vec<C64>>,
}

/// A configured simulator: code, decoder, pilots and worker pool.
pub struct Simulator {
    config: SystemConfig,
    code: LdpcCode,
    decoder: SpaDecoder,
    constellation: Constellation,
    pilots: Option<PilotBlock>,
    params: IddParams,
    pool: ThreadPool,
}

impl Simulator {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let code = match &config.alist {
            Some(path) => LdpcCode::read_alist(path, None)?,
            None => LdpcCode::construct(config.code_length, 0.5, config.code_seed)?,
        };
        let constellation = config.modulation.constellation();
        if code.n() % constellation.bits_per_symbol() != 0 {
            return Err(Error::InvalidConfig(format!(
                "code length {} does not fill whole symbols",
                code.n()
            )));
        }
        let pilots = match config.csi {
            CsiMode::Perfect => None,
            CsiMode::Blmmse => Some(build_pilot_matrix(config.users, config.tau, SIGMA_X2)?),
        };
        let params = config.idd_params()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            decoder: SpaDecoder::new(&code),
            code,
            constellation,
            pilots,
            params,
            pool,
            config,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    pub fn params(&self) -> &IddParams {
        &self.params
    }

    fn scaling_enabled(&self) -> bool {
        self.params.offline_scaling || self.params.online_scaling
    }

    /// Draws messages, channel, optional pilot-based estimate and the
    /// quantized data observations of one block.
    pub fn generate_block(&self, snr_index: usize, sigma_n2: f64, block: u64, training: bool) -> Result<BlockData> {
        let (p_bits, p_channel, p_pilot, p_data) = if training {
            (
                Purpose::TrainingBits,
                Purpose::TrainingChannel,
                Purpose::TrainingPilotNoise,
                Purpose::TrainingDataNoise,
            )
        } else {
            (Purpose::Bits, Purpose::Channel, Purpose::PilotNoise, Purpose::DataNoise)
        };
        let stream = |p: Purpose| -> ChaCha8Rng { block_stream(self.config.seed, p, snr_index, block) };
        let (m, k) = (self.config.antennas, self.config.users);

        let mut rng = stream(p_bits);
        let messages: Vec<Vec<u8>> = (0..k)
            .map(|_| (0..self.code.k()).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let coded = messages.iter().map(|msg| self.code.encode(msg)).collect::<Result<Vec<_>>>()?;
        let symbols = coded
            .iter()
            .map(|c| self.constellation.map_bits(c))
            .collect::<Result<Vec<_>>>()?;

        let channel = generate_channel(m, k, sigma_n2, &mut stream(p_channel))?.h;
        let channel_estimate = match &self.pilots {
            None => channel.clone(),
            Some(pilots) => {
                let mut rng = stream(p_pilot);
                let y = channel.mul(&pilots.pilots)?;
                let y_qp = CMatrix::from_fn(m, pilots.tau(), |r, t| {
                    quantize_sample(y[(r, t)] + complex_gaussian(&mut rng, sigma_n2))
                });
                blmmse_estimate(&y_qp, pilots, sigma_n2)?
            }
        };

        let mut rng = stream(p_data);
        let mut x = vec![C64::new(0.0, 0.0); k];
        let observations = (0..symbols[0].len())
            .map(|t| {
                for (xk, s) in x.iter_mut().zip(&symbols) {
                    *xk = s[t];
                }
                transmit(&channel, &x, sigma_n2, &mut rng).map(|y| quantize_1bit(&y))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockData {
            messages,
            coded,
            channel,
            channel_estimate,
            observations,
        })
    }

    /// Runs the receiver on one block and counts errors per outer iteration.
    pub fn simulate_block(
        &self,
        snr_index: usize,
        sigma_n2: f64,
        block: u64,
        scaling: &[ScalingState],
    ) -> Result<Vec<ErrorTally>> {
        let data = self.generate_block(snr_index, sigma_n2, block, false)?;
        let out = run_idd(
            &data.observations,
            &data.channel_estimate,
            sigma_n2,
            &self.code,
            &self.decoder,
            &self.constellation,
            &self.params,
            scaling,
        )?;
        let frames = self.config.users as u64;
        Ok(out
            .iterations
            .iter()
            .map(|report| {
                let (bits, frame_errors) = report.errors(&data.messages);
                ErrorTally::from_block(bits, frame_errors, frames, self.code.k() as u64)
            })
            .collect())
    }

    /// Fits the per-user scaling state for one SNR point from first-iteration
    /// detector LLRs on known training blocks. Returns identity states when
    /// scaling is disabled.
    pub fn run_training_phase(&self, snr_index: usize, sigma_n2: f64) -> Result<Vec<ScalingState>> {
        let users = self.config.users;
        if !self.scaling_enabled() {
            return Ok(vec![ScalingState::identity(); users]);
        }
        let blocks = self.config.training_blocks as u64;
        let per_block: Vec<Vec<Vec<f64>>> = self.pool.install(|| {
            (0..blocks)
                .into_par_iter()
                .map(|b| self.training_llrs(snr_index, sigma_n2, b))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut llrs = vec![Vec::new(); users];
        let mut bits = vec![Vec::new(); users];
        for (b, block_llrs) in per_block.into_iter().enumerate() {
            let data_bits = self.training_bits(snr_index, b as u64)?;
            for k in 0..users {
                llrs[k].extend_from_slice(&block_llrs[k]);
                bits[k].extend_from_slice(&data_bits[k]);
            }
        }
        (0..users)
            .map(|k| offline_scaling_train(&llrs[k], &bits[k]).map(ScalingState::from))
            .collect()
    }

    fn training_llrs(&self, snr_index: usize, sigma_n2: f64, block: u64) -> Result<Vec<Vec<f64>>> {
        let data = self.generate_block(snr_index, sigma_n2, block, true)?;
        let ws = DetectorWorkspace::new(&data.channel_estimate, sigma_n2)?;
        let zeros = vec![0.0; self.code.n()];
        (0..self.config.users)
            .map(|k| {
                detect_user(
                    &ws,
                    &data.observations,
                    None,
                    &zeros,
                    k,
                    &self.constellation,
                    &self.params.detector,
                )
            })
            .collect()
    }

    fn training_bits(&self, snr_index: usize, block: u64) -> Result<Vec<Vec<u8>>> {
        let mut rng = block_stream(self.config.seed, Purpose::TrainingBits, snr_index, block);
        (0..self.config.users)
            .map(|_| {
                let msg: Vec<u8> = (0..self.code.k()).map(|_| rng.random_range(0..2u8)).collect();
                self.code.encode(&msg)
            })
            .collect()
    }

    /// Simulates one SNR point of the grid.
    pub fn run_point(&self, snr_index: usize) -> Result<PointResult> {
        let start = Instant::now();
        let snr_db = *self
            .config
            .snr
            .get(snr_index)
            .ok_or_else(|| Error::InvalidConfig(format!("no SNR point {snr_index}")))?;
        let sigma_n2 = self.config.noise_variance(snr_db);
        let scaling = self.run_training_phase(snr_index, sigma_n2)?;
        let mut tallies = vec![ErrorTally::default(); self.config.iterations];
        let trials = self.config.trials as u64;
        let batch = self.config.batch as u64;
        let mut next = 0;
        while next < trials {
            let end = (next + batch).min(trials);
            let results: Vec<Vec<ErrorTally>> = self.pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|b| self.simulate_block(snr_index, sigma_n2, b, &scaling))
                    .collect::<Result<Vec<_>>>()
            })?;
            for block in &results {
                for (t, b) in tallies.iter_mut().zip(block) {
                    t.merge(b);
                }
            }
            next = end;
            let final_errors = tallies.last().map_or(0, |t| t.bit_errors);
            if self.config.max_errors > 0 && final_errors >= self.config.max_errors {
                break;
            }
        }
        log::info!(
            "snr {snr_db:+.2} dB: {} blocks, final BER {:.3e}",
            tallies.last().map_or(0, |t| t.blocks),
            tallies.last().map_or(0.0, |t| t.ber())
        );
        Ok(PointResult {
            snr_db,
            sigma_n2,
            tallies,
            scaling,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Simulates every SNR point. An empty grid or zero trials yields no
    /// points.
    pub fn run(&self) -> Result<Vec<PointResult>> {
        if self.config.trials == 0 {
            return Ok(Vec::new());
        }
        (0..self.config.snr.len()).map(|i| self.run_point(i)).collect()
    }
}

/// Convenience wrapper: builds a [`Simulator`] and returns per-point results.
pub fn run_ber_sweep_detailed(config: &SystemConfig) -> Result<Vec<PointResult>> {
    Simulator::new(config.clone())?.run()
}
