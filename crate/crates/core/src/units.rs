//! Physical constants and the Hz ↔ rad/s boundary.
//!
//! Everything inside the crate is an angular frequency in rad/s with ħ = 1.
//! Conversion to and from Hz happens only where numbers enter or leave.

use std::f64::consts::TAU;

/// Planck constant, J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / TAU;
/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Cyclic frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency in rad/s to cyclic frequency in Hz.
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / TAU
}

#[inline]
pub fn mhz(f: f64) -> f64 {
    hz(f * 1e6)
}

#[inline]
pub fn khz(f: f64) -> f64 {
    hz(f * 1e3)
}

#[inline]
pub fn ghz(f: f64) -> f64 {
    hz(f * 1e9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = 5.474e9;
        assert!((to_hz(hz(f)) - f).abs() <= f * 1e-15);
        assert_eq!(mhz(1.0), hz(1e6));
        assert_eq!(ghz(1.0), hz(1e9));
    }

    #[test]
    fn hbar_matches_codata() {
        assert!((HBAR - 1.054_571_817e-34).abs() < 1e-42);
    }
}
