//! Iterative detection and decoding (IDD) for uplink multiuser MIMO with
//! 1-bit ADCs.
//!
//! The crate covers the full receiver chain and a Monte-Carlo harness:
//!
//! * [`quantization`]: the 1-bit quantizer and Bussgang statistics
//! * [`modem`]: Rayleigh channel, QPSK mapping and soft symbols
//! * [`detector`]: the LRA-MMSE detector with soft interference cancellation
//! * [`ldpc`]: PEG code construction, SPA decoding, message quantization and LLR scaling
//! * [`estimator`]: BLMMSE channel estimation from quantized pilots
//! * [`idd`]: the outer detection/decoding loop
//! * [`sim`]: configuration, BER/FER sweeps and result files

pub mod detector;
pub mod error;
pub mod estimator;
pub mod idd;
pub mod ldpc;
pub mod linalg;
pub mod modem;
pub mod quantization;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{CMatrix, C64};
