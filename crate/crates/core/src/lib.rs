//! Variational autoencoder clustering of audio spectrograms.

pub mod archive;
pub mod baselines;
pub mod audio;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod networks;
pub mod objectives;
pub mod training;
pub mod windowing;

pub use error::{Error, Result};
