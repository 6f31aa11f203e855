//! Simulation configuration: a flat TOML table of kebab-case keys.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detector::{Cancellation, DetectorKind, DetectorOptions, MeanModel, LLR_CLIP};
use crate::error::{Error, Result};
use crate::idd::IddParams;
use crate::ldpc::{QuantizerParams, QuasiUniformQuantizer, DEFAULT_INNER_ITERATIONS};
use crate::modem::{ModulationScheme, PriorVariance, SnrConvention};

/// An on/off flag that reads `on`/`off` (or a TOML boolean) and writes `on`/`off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Switch(pub bool);

impl Switch {
    pub const ON: Switch = Switch(true);
    pub const OFF: Switch = Switch(false);

    pub fn is_on(self) -> bool {
        self.0
    }
}

impl FromStr for Switch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "on" | "true" | "yes" | "1" => Ok(Switch::ON),
            "off" | "false" | "no" | "0" => Ok(Switch::OFF),
            other => Err(Error::Parse(format!("expected on|off, got `{other}`"))),
        }
    }
}

impl fmt::Display for Switch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.0 { "on" } else { "off" })
    }
}

impl Serialize for Switch {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Switch {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Bool(bool),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Bool(b) => Ok(Switch(b)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Where the receiver's channel knowledge comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    #[default]
    Perfect,
    Blmmse,
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(Self::Perfect),
            "blmmse" | "estimated" => Ok(Self::Blmmse),
            other => Err(Error::InvalidConfig(format!("unknown csi mode `{other}`"))),
        }
    }
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Perfect => "perfect",
            Self::Blmmse => "blmmse",
        })
    }
}

/// Every knob of a BER/FER sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of single-antenna users `K`.
    pub users: usize,
    /// Number of receive antennas `M`.
    pub antennas: usize,
    /// SNR grid in dB.
    pub snr: Vec<f64>,
    pub snr_convention: SnrConvention,
    /// Fading blocks per SNR point; each block carries one codeword per user.
    pub trials: usize,
    /// Stop a point early once the final-iteration bit errors reach this
    /// budget (checked between batches; 0 disables).
    pub max_errors: u64,
    /// Blocks simulated between early-stop checks. Part of the result's
    /// identity: changing it can change where a point stops.
    pub batch: usize,
    pub seed: u64,
    /// Seed of the PEG construction.
    pub code_seed: u64,
    pub code_length: usize,
    /// Optional parity-check matrix in alist format; overrides the PEG code.
    pub alist: Option<PathBuf>,
    pub modulation: ModulationScheme,
    pub detector: DetectorKind,
    pub mean_model: MeanModel,
    pub cancellation: Cancellation,
    pub prior_variance: PriorVariance,
    pub llr_clip: f64,
    pub csi: CsiMode,
    /// Pilot length `τ` for estimated CSI.
    pub tau: usize,
    /// Quasi-uniform quantization of decoder messages.
    pub quantizer: Switch,
    pub quantizer_delta: f64,
    pub quantizer_growth: f64,
    pub quantizer_levels: u32,
    /// Also quantize the extrinsics fed back to the detector.
    pub quantize_feedback: Switch,
    /// Enables both scaling factors unless overridden individually.
    pub scaling: Switch,
    pub offline_scaling: Option<Switch>,
    pub online_scaling: Option<Switch>,
    /// Training blocks per SNR point for the offline factor.
    pub training_blocks: usize,
    /// Outer detector/decoder iterations.
    pub iterations: usize,
    pub inner_iterations: usize,
    /// Worker threads (0 uses all cores). Never affects the results.
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let q = QuantizerParams::default();
        Self {
            users: 12,
            antennas: 32,
            snr: vec![-6.0, -4.0, -2.0, 0.0, 2.0],
            snr_convention: SnrConvention::PerUser,
            trials: 200,
            max_errors: 0,
            batch: 16,
            seed: 1,
            code_seed: 1,
            code_length: 512,
            alist: None,
            modulation: ModulationScheme::Qpsk,
            detector: DetectorKind::LraMmse,
            mean_model: MeanModel::Quantized,
            cancellation: Cancellation::Bussgang,
            prior_variance: PriorVariance::Instantaneous,
            llr_clip: LLR_CLIP,
            csi: CsiMode::Perfect,
            tau: 70,
            quantizer: Switch::OFF,
            quantizer_delta: q.delta,
            quantizer_growth: q.growth,
            quantizer_levels: q.levels,
            quantize_feedback: Switch::ON,
            scaling: Switch::OFF,
            offline_scaling: None,
            online_scaling: None,
            training_blocks: 40,
            iterations: 3,
            inner_iterations: DEFAULT_INNER_ITERATIONS,
            workers: 1,
            out: None,
            plot: None,
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("users", self.users),
            ("antennas", self.antennas),
            ("batch", self.batch),
            ("code-length", self.code_length),
            ("iterations", self.iterations),
            ("inner-iterations", self.inner_iterations),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("`{name}` must be positive")));
            }
        }
        if let Some(x) = self.snr.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!("SNR grid contains {x}")));
        }
        if !(self.llr_clip > 0.0) {
            return Err(Error::InvalidConfig("`llr-clip` must be positive".into()));
        }
        if self.csi == CsiMode::Blmmse && self.tau < self.users {
            return Err(Error::InvalidConfig(format!(
                "pilot length tau={} is shorter than K={}",
                self.tau, self.users
            )));
        }
        if self.code_length % self.modulation.constellation().bits_per_symbol() != 0 {
            return Err(Error::InvalidConfig("code length must fill whole symbols".into()));
        }
        if self.offline_scaling() && self.training_blocks == 0 {
            return Err(Error::InvalidConfig("offline scaling needs training blocks".into()));
        }
        self.quantizer_params().validate()
    }

    pub fn offline_scaling(&self) -> bool {
        self.offline_scaling.unwrap_or(self.scaling).is_on()
    }

    pub fn online_scaling(&self) -> bool {
        self.online_scaling.unwrap_or(self.scaling).is_on()
    }

    pub fn quantizer_params(&self) -> QuantizerParams {
        QuantizerParams {
            delta: self.quantizer_delta,
            growth: self.quantizer_growth,
            levels: self.quantizer_levels,
        }
    }

    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.snr_convention.noise_variance(snr_db, self.users)
    }

    pub fn idd_params(&self) -> Result<IddParams> {
        let quantizer = if self.quantizer.is_on() {
            Some(QuasiUniformQuantizer::new(self.quantizer_params())?)
        } else {
            None
        };
        Ok(IddParams {
            detector: DetectorOptions {
                kind: self.detector,
                mean_model: self.mean_model,
                cancellation: self.cancellation,
                llr_clip: self.llr_clip,
            },
            prior_variance: self.prior_variance,
            outer_iterations: self.iterations,
            inner_iterations: self.inner_iterations,
            quantizer,
            quantize_feedback: self.quantize_feedback.is_on(),
            offline_scaling: self.offline_scaling(),
            online_scaling: self.online_scaling(),
        })
    }

    /// Short series label used in plots, e.g. `lra-mmse/perfect/q+s`.
    pub fn label(&self) -> String {
        let mut extras = Vec::new();
        if self.quantizer.is_on() {
            extras.push("q");
        }
        if self.offline_scaling() || self.online_scaling() {
            extras.push("s");
        }
        let mut label = format!("{}/{}", self.detector, self.csi);
        if !extras.is_empty() {
            label.push('/');
            label.push_str(&extras.join("+"));
        }
        label
    }
}
