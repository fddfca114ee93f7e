//! Acoustic feature extraction for pathological voice detection.
//!
//! The crate covers the full chain from WAV ingestion through modulation-spectrum,
//! auditory-model, bicepstral, kernel-entropy and EMD features, their high-level
//! statistics, Mann-Whitney filtering and a repeated-split classification protocol.

pub mod aggregate;
pub mod audio;
pub mod bispec;
pub mod classify;
pub mod colliculus;
pub mod emd;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod modspec;
pub mod pipeline;
pub mod select;
pub mod spectral;

pub use error::{Result, VoxError};
