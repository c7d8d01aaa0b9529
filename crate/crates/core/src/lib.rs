//! Doppler-broadened biphoton spectra from frequency-multiplexed thermal
//! atomic ensembles, and the spectral entanglement (Schmidt decomposition,
//! entropy of entanglement, Schmidt number) of the resulting pair state.

pub mod cli_io;
pub mod error;
pub mod params;
pub mod multiplex;
pub mod schmidt;
pub mod shaping;
pub mod spectral;

pub use error::{Error, Issue, Result};
pub use num_complex::Complex64;
