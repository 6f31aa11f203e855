//! LDPC code construction, box-plus SPA decoding, quasi-uniform message
//! quantization and decoder-input LLR scaling.

pub mod code;
pub mod decoder;
pub mod quantizer;
pub mod scaling;

pub use code::LdpcCode;
pub use decoder::{box_plus, cn_update, spa_decode, vn_update, DecodeOutput, SpaDecoder};
pub use quantizer::{quasi_uniform_quantize, QuantizerParams, QuasiUniformQuantizer};
pub use scaling::{offline_scaling_train, online_scaling, OfflineFit, ScalingState};

/// Inner SPA iterations per outer detection/decoding iteration.
pub const DEFAULT_INNER_ITERATIONS: usize = 10;
