//! Steady-state simulation of a driven, dissipative transmon coupled to a
//! resonator in the strong dispersive regime.
//!
//! The crate is layered bottom-up:
//!
//! * [`operators`]: truncated resonator ⊗ qubit operator algebra.
//! * [`model`]: device parameters and Hamiltonians.
//! * [`lindblad`]: Liouvillian assembly and steady-state solver.
//! * [`analytic`]: closed-form four-level model, splitting law, calibration.
//! * [`sweep`]: parallel frequency sweeps producing spectra and maps.
//! * [`specfit`]: Lorentzian fitting and photon-number statistics.

pub mod analytic;
pub mod lindblad;
pub mod model;
pub mod operators;
pub mod specfit;
pub mod sweep;
pub mod units;
