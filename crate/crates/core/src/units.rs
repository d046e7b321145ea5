//! Linear frequency to angular frequency conversions.

use std::f64::consts::TAU;

/// GHz to rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// MHz to rad/ns.
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e-3
}

/// kHz to rad/ns.
pub fn khz(f: f64) -> f64 {
    TAU * f * 1e-6
}

pub fn to_ghz(omega: f64) -> f64 {
    omega / TAU
}

pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

pub fn to_khz(omega: f64) -> f64 {
    omega / TAU * 1e6
}
