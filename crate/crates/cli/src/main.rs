//! `idd-sim`: BER/FER sweeps of the 1-bit IDD receiver.
//!
//! Settings come from the built-in defaults, then an optional TOML file
//! (`--config`), then individual flags, each named after its config key.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use onebit_idd::detector::{Cancellation, DetectorKind, MeanModel};
use onebit_idd::modem::{PriorVariance, SnrConvention};
use onebit_idd::sim::{
    emit_plot_script, records_from_points, write_csv, CsiMode, Series, Simulator, Switch, SystemConfig,
};

/// A parsed SNR grid; a newtype so clap treats the flag as a single value.
#[derive(Debug, Clone, PartialEq)]
struct SnrGrid(Vec<f64>);

fn parse_snr_grid(text: &str) -> Result<SnrGrid, String> {
    parse_snr_values(text).map(SnrGrid)
}

fn parse_snr_values(text: &str) -> Result<Vec<f64>, String> {
    // either a list `a,b,c` or a range `start:step:stop`
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad SNR range `{text}`: {e}")))
            .collect::<Result<_, _>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(format!("SNR range must be start:step:stop, got `{text}`"));
        };
        if !(step > 0.0) || stop < start {
            return Err(format!("empty SNR range `{text}`"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad SNR value `{p}`: {e}")))
        .collect()
}

fn parse_switch(text: &str) -> Result<Switch, String> {
    text.parse().map_err(|e: onebit_idd::Error| e.to_string())
}

fn parse_with<T: std::str::FromStr<Err = onebit_idd::Error>>(text: &str) -> Result<T, String> {
    text.parse().map_err(|e: onebit_idd::Error| e.to_string())
}

fn parse_convention(text: &str) -> Result<SnrConvention, String> {
    match text {
        "per-user" => Ok(SnrConvention::PerUser),
        "sum-power" => Ok(SnrConvention::SumPower),
        other => Err(format!("unknown SNR convention `{other}` (per-user|sum-power)")),
    }
}

fn parse_mean_model(text: &str) -> Result<MeanModel, String> {
    match text {
        "quantized" => Ok(MeanModel::Quantized),
        "linearized" => Ok(MeanModel::Linearized),
        other => Err(format!("unknown mean model `{other}` (quantized|linearized)")),
    }
}

fn parse_prior_variance(text: &str) -> Result<PriorVariance, String> {
    match text {
        "instantaneous" => Ok(PriorVariance::Instantaneous),
        "complement" => Ok(PriorVariance::Complement),
        other => Err(format!("unknown prior variance `{other}` (instantaneous|complement)")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "idd-sim", version, about = "BER/FER sweeps for uplink MU-MIMO with 1-bit ADCs")]
struct Cli {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,

    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    antennas: Option<usize>,
    /// SNR grid in dB: `a,b,c` or `start:step:stop`.
    #[arg(long, value_parser = parse_snr_grid, allow_hyphen_values = true)]
    snr: Option<SnrGrid>,
    #[arg(long, value_parser = parse_convention)]
    snr_convention: Option<SnrConvention>,
    /// Fading blocks per SNR point (one codeword per user each).
    #[arg(long)]
    trials: Option<usize>,
    /// Final-iteration bit-error budget per point (0 disables).
    #[arg(long)]
    max_errors: Option<u64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    code_seed: Option<u64>,
    #[arg(long)]
    code_length: Option<usize>,
    /// Parity-check matrix in alist format.
    #[arg(long)]
    alist: Option<PathBuf>,
    /// lra-mmse | mmse-baseline
    #[arg(long, value_parser = parse_with::<DetectorKind>)]
    detector: Option<DetectorKind>,
    #[arg(long, value_parser = parse_mean_model)]
    mean_model: Option<MeanModel>,
    /// verbatim | bussgang
    #[arg(long, value_parser = parse_with::<Cancellation>)]
    cancellation: Option<Cancellation>,
    #[arg(long, value_parser = parse_prior_variance)]
    prior_variance: Option<PriorVariance>,
    #[arg(long)]
    llr_clip: Option<f64>,
    /// perfect | blmmse
    #[arg(long, value_parser = parse_with::<CsiMode>)]
    csi: Option<CsiMode>,
    #[arg(long)]
    tau: Option<usize>,
    /// on | off
    #[arg(long, value_parser = parse_switch)]
    quantizer: Option<Switch>,
    #[arg(long)]
    quantizer_delta: Option<f64>,
    #[arg(long)]
    quantizer_growth: Option<f64>,
    #[arg(long)]
    quantizer_levels: Option<u32>,
    #[arg(long, value_parser = parse_switch)]
    quantize_feedback: Option<Switch>,
    /// on | off; sets both scaling factors
    #[arg(long, value_parser = parse_switch)]
    scaling: Option<Switch>,
    #[arg(long, value_parser = parse_switch)]
    offline_scaling: Option<Switch>,
    #[arg(long, value_parser = parse_switch)]
    online_scaling: Option<Switch>,
    #[arg(long)]
    training_blocks: Option<usize>,
    /// Outer detector/decoder iterations.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    inner_iterations: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Python plot script output path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

macro_rules! override_fields {
    ($cfg:ident, $cli:ident; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $cli.$field { $cfg.$field = v; })*
    };
}

impl Cli {
    fn into_config(self) -> Result<(SystemConfig, bool)> {
        let mut cfg = match &self.config {
            Some(path) => SystemConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => SystemConfig::default(),
        };
        let print = self.print_config;
        let cli = self;
        override_fields!(cfg, cli;
            users, antennas, snr_convention, trials, max_errors, batch, seed, code_seed,
            code_length, detector, mean_model, cancellation, prior_variance, llr_clip, csi, tau, quantizer,
            quantizer_delta, quantizer_growth, quantizer_levels, quantize_feedback, scaling,
            training_blocks, iterations, inner_iterations, workers,
        );
        if let Some(SnrGrid(grid)) = cli.snr {
            cfg.snr = grid;
        }
        if cli.alist.is_some() {
            cfg.alist = cli.alist;
        }
        if cli.offline_scaling.is_some() {
            cfg.offline_scaling = cli.offline_scaling;
        }
        if cli.online_scaling.is_some() {
            cfg.online_scaling = cli.online_scaling;
        }
        if cli.out.is_some() {
            cfg.out = cli.out;
        }
        if cli.plot.is_some() {
            cfg.plot = cli.plot;
        }
        cfg.validate()?;
        Ok((cfg, print))
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (cfg, print) = Cli::parse().into_config()?;
    if print {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }
    log::info!(
        "{}: K={} M={} trials={} iterations={} snr={:?}",
        cfg.label(),
        cfg.users,
        cfg.antennas,
        cfg.trials,
        cfg.iterations,
        cfg.snr
    );
    let sim = Simulator::new(cfg.clone())?;
    let records = records_from_points(&sim.run()?);
    match &cfg.out {
        Some(path) => {
            write_csv(&records, path).with_context(|| format!("writing {}", path.display()))?;
            log::info!("wrote {}", path.display());
        }
        None => onebit_idd::sim::output::write_csv_to(&records, std::io::stdout().lock())?,
    }
    if let Some(path) = &cfg.plot {
        let series = Series {
            label: cfg.label(),
            records,
        };
        emit_plot_script(&[series], path).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}
