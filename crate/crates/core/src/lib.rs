//! Audio watermarking by group-amplitude quantization of DWT coefficients.
//!
//! A bit is carried by the weighted sum of `N` consecutive lowest-band
//! magnitudes, forced onto the `Q/4` or `3Q/4` offset of a lattice of step
//! `Q`. The weights are chosen per group so that the magnitudes often need no
//! change at all; otherwise the magnitudes are projected onto the target
//! hyperplane with minimum distortion.
//!
//! Modules:
//! - [`wavelet`]: periodic orthonormal DWT.
//! - [`quantizer`]: per-group targets, projection, optimal weights, decoding.
//! - [`codec`]: segmentation, sync and PN layout, embed and extract.
//! - [`attacks`]: resampling, low-pass, amplitude and time-scale channels.
//! - [`metrics`]: SNR and BER.
//! - [`audio_io`]: clips, WAV files and synthetic signals.
//! - [`harness`]: the evaluation matrix and Q sweeps.

pub mod attacks;
pub mod audio_io;
pub mod codec;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod quantizer;
pub mod wavelet;

pub use audio_io::AudioClip;
pub use codec::{embed, extract, EmbedKey, EmbedReport, Extraction, Payload, ScalingMode, SideInfo};
pub use error::{Error, Result};
pub use quantizer::{GroupMode, GroupParams, ScalingVector};
pub use wavelet::{WaveletFamily, WaveletFilter};
