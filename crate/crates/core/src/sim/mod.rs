//! Monte-Carlo harness: configuration, random streams, sweeps and outputs.

pub mod config;
pub mod output;
pub mod rng;
pub mod sweep;

pub use config::{CsiMode, Switch, SystemConfig};
pub use output::{emit_plot_script, read_csv, records_from_points, write_csv, BerRecord, Series, CSV_HEADER};
pub use sweep::{run_ber_sweep_detailed, BlockData, ErrorTally, PointResult, Simulator};

use crate::error::Result;

/// Runs the configured sweep and returns one record per (SNR point, iteration).
pub fn run_ber_sweep(config: &SystemConfig) -> Result<Vec<BerRecord>> {
    Ok(records_from_points(&run_ber_sweep_detailed(config)?))
}

/// Per-user scaling state for one SNR point of `config`.
pub fn run_training_phase(config: &SystemConfig, snr_index: usize) -> Result<Vec<crate::ldpc::ScalingState>> {
    let snr_db = *config
        .snr
        .get(snr_index)
        .ok_or_else(|| crate::Error::InvalidConfig(format!("no SNR point {snr_index}")))?;
    Simulator::new(config.clone())?.run_training_phase(snr_index, config.noise_variance(snr_db))
}
