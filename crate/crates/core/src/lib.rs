//! Simulator and analysis toolkit for light scattering from a
//! phonon-coupled two-level solid-state emitter in a low-Q optical cavity:
//! polaron-frame master equation, first-order correlation functions,
//! cavity-filtered emission spectra, coherent/incoherent/sideband fraction
//! analysis, the atomic reference model, and data-fitting utilities.

pub mod atomic;
pub mod config;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod filter;
pub mod fitting;
pub mod io;
pub mod noise;
pub mod phonon;
pub mod pipeline;
pub mod special;
pub mod spectra;
pub mod units;

pub use error::{ModelError, Result};
