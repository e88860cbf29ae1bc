//! Time-hopping impulse-radio UWB physical-layer simulation.
//!
//! The crate covers transmit pulse design against a spectral mask, time-hopping
//! code construction, convolutional coding, multipath channel generation,
//! the symbol-rate Rake receiver with MMSE combining and equalization,
//! training-based channel estimation, timing acquisition, and a Monte-Carlo
//! link harness.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod channel;
pub mod error;
pub mod estimation;
pub mod fec;
pub mod harness;
pub mod linalg;
pub mod pulse;
pub mod receiver;
pub mod th_code;
pub mod units;
pub mod waveform;

pub use error::{Error, Result, Stage, Warning};
pub use waveform::{DeltaSamples, SampledWaveform};
