//! CSI-based RF fingerprinting pipeline.
//!
//! WiFi channel state information is cheap to collect but coarse: one
//! measurement is 52 complex channel estimates, while the preamble it came
//! from had 320 IQ samples, and the estimation process itself blurs the
//! transmitter's hardware signature. This crate closes that gap end to end:
//!
//! - [`signal`]: complex-signal foundations — DFT, the symbol window, the
//!   short/long training symbols, weighted preamble synthesis, resampling.
//! - [`impairment`]: synthetic transmitters (CFO, IQ imbalance, PA
//!   nonlinearity, DC offset) and noisy multipath channels, replacing lab
//!   hardware as a verifiable data source.
//! - [`estimate`]: least-squares and MMSE channel estimation plus burst
//!   extraction from raw captures.
//! - [`transform`]: cyclic shift division (channel interference mitigation)
//!   and time-domain sample generation — CSI into preamble-shaped signals.
//! - [`learn`]: a small reverse-mode differentiable network stack and the
//!   dual-task training procedure (shared extractor, CSI classifier, IQ
//!   discriminator).
//! - [`datasets`]: labeled sample sets, deterministic splits, the on-disk
//!   format, synthetic dataset generation, and raw-capture ingestion.
//! - [`pipeline`]: end-to-end experiment arms and the four-way ablation.

pub mod datasets;
pub mod error;
pub mod estimate;
pub mod impairment;
pub mod learn;
pub mod pipeline;
pub mod signal;
pub mod transform;

pub use error::{Error, Result};
