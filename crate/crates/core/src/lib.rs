//! Monte Carlo sampling of Euclidean path integrals over smooth paths built
//! from periodic Gaussian bumps, with oscillator observables and 4D U(1) /
//! SU(2) gauge-field measurements.

pub mod action;
pub mod basis;
pub mod error;
pub mod gauge;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod sampler;

pub use error::{Error, Result};
