//! Cramér–Rao lower bounds for ISAC radar waveforms.
//!
//! This crate computes delay, Doppler, and angle-of-arrival CRLBs for the
//! four waveform families commonly considered in joint sensing and
//! communication systems (FMCW, PMCW, OFDM, OTFS), along two independent
//! routes:
//!
//! - closed-form evaluators ([`closed_form`]) parameterized by RMS
//!   bandwidth/time and the effective SNR, including the pulse-shape
//!   factors of PMCW and the discrete-grid OFDM variant;
//! - a numerical Fisher-information engine ([`fisher`]) that synthesizes the
//!   waveform at sample level ([`waveform`]), computes every FIM entry by
//!   numerical integration ([`spectral`]), reduces to the effective FIM by
//!   a Schur complement over the nuisance phase, and inverts.
//!
//! Virtual-array MIMO multiplexing (interleaved/block TDM, block/comb FDM,
//! Hadamard CDM) is covered by [`virtual_array`], which builds per-transmitter
//! signals, sums their FIMs, and evaluates the closed-form CRLB ratios
//! against the non-multiplexed baseline.
//!
//! All internal math is in linear units (Hz, s, rad, linear power ratios);
//! decibels appear only at the CLI boundary.

pub mod closed_form;
pub mod config;
pub mod fisher;
pub mod io;
pub mod spectral;
pub mod units;
pub mod virtual_array;
pub mod waveform;

mod error;

pub use error::{Error, Result};
pub use fisher::{ArrayConfig, CrlbResult, FisherMatrix, SceneParams};
pub use units::{CarrierConfig, EsnrLinear};
pub use waveform::{PulseShape, SampledSignal, WaveformSpec};
