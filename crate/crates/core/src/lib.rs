//! Learn the traffic pattern and channel behaviour of a recorded I/Q
//! capture with a generative adversarial network, then synthesize
//! arbitrarily long pseudo-radio-signals with matching statistics.
//!
//! The pipeline is: [`signal`] (load, frame, normalize) → [`gan`]
//! (pretrain and train one model per I/Q component) → [`synthesis`]
//! (generate packets, denormalize, raised-cosine overlap-save
//! reconstruction) → [`validation`] (spectral and distributional
//! comparison). [`protogen`] produces synthetic captures for testing.

pub mod dsp;
pub mod error;
pub mod gan;
pub mod matrix;
pub mod nn;
pub mod protogen;
pub mod rng;
pub mod signal;
pub mod synthesis;
pub mod validation;

pub use error::{Error, Result};
pub use matrix::Matrix;
