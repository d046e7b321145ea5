//! Simulation of an impedance-matched Λ system built from a driven
//! qubit-resonator circuit.
//!
//! Angular frequencies and rates are in rad/ns, times in ns. Use the helpers
//! in [`units`] to convert from linear frequencies.

pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod protocols;
pub mod pulses;
pub mod quantum;
pub mod reflection;
pub(crate) mod superop;
pub mod system;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
