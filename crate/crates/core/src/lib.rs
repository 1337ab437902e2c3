//! Gaussian-state simulation of quantum-enhanced interferometers built from
//! parametric amplifiers, beamsplitters, phase shifters and loss.
//!
//! The engine ([`gaussian`]) propagates quadrature means and covariances
//! through affine Gaussian channels ([`elements`], [`noise`]). On top of it
//! sit the squeezed-light MZI and the SU(2)-in-SU(1,1) nested interferometer
//! ([`interferometer`]), the figure-level sweeps ([`analysis`]), the
//! noisy-amplifier fit ([`fit`]) and a JSON circuit format ([`circuit`]).

pub mod analysis;
pub mod circuit;
pub mod elements;
pub mod error;
pub mod fit;
pub mod gaussian;
pub mod interferometer;
pub mod noise;

pub use error::{Error, Result};
