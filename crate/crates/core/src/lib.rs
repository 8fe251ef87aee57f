//! Guided local Hamiltonian instances built from small circuits.

pub mod circuits;
pub mod cli;
pub mod clockham;
pub mod error;
pub mod excited;
pub mod gadgets;
pub mod guidestates;
pub mod hamcore;
pub mod io;
pub mod linalg;
pub mod sparse;
pub mod spectra;

pub use error::{GlhError, Result};
