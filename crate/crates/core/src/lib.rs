//! Photon-level software twin of an LED balanced-detection quantum random
//! number generator.
//!
//! The crate is organised along the signal path:
//!
//! * [`sim`]: Poisson photon source with common-mode classical modulation,
//!   beam split and detection, balanced differencing, analog front end and
//!   ADC acquisition.
//! * [`entropy`]: histograms, noise statistics, QCNR, min-entropy,
//!   extraction ratio and the variance-vs-current linearity fit.
//! * [`toeplitz`]: seeded Toeplitz hashing over GF(2), a naive reference
//!   path, a word-sliced fast path and the leftover-hash parameter check.
//! * [`stats`]: bitwise autocorrelation, a small p-value battery and
//!   Kolmogorov–Smirnov aggregation of p-values.
//!
//! [`config`] holds the flat `key = value` configuration format and the
//! shipped default calibration; [`io`] holds the on-disk formats.

// `!(x > 0.0)` is used on purpose in validation so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod config;
pub mod entropy;
mod error;
pub mod io;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod toeplitz;

pub use bits::BitStream;
pub use config::{AcquisitionConfig, Config, ExtractorConfig, PhysicsConfig};
pub use error::{Error, Result};
pub use sim::RawCodeBlock;
