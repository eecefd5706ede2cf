//! Simulation and inverse design of time-frequency-mode entangled photon pair sources.
//!
//! The forward chain is pump shaper -> coupled-ring field enhancement -> joint spectral
//! amplitude -> Schmidt analysis. [`inversion`] runs it backwards from a target state.

// `!(x > 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod inversion;
pub mod jsa_engine;
pub mod phase_matching;
pub mod pipeline;
pub mod pulse_shaper;
pub mod resonator;
pub mod spectral_core;

pub use error::{Result, TfmError};
pub use num_complex::Complex64;
