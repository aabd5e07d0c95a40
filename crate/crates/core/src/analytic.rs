//! Closed-form models: the four-level truncation around the thermal
//! one-photon transition, the Autler-Townes splitting law, photon statistics
//! and coupler power calibration.

use thiserror::Error;

use crate::model::SystemParams;
use crate::operators::{hermitian_eigen, CMatrix, C64};
use crate::units::{BOLTZMANN, HBAR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("photon-number weights must be non-negative and finite with a positive sum")]
    UndefinedWeights,
    #[error("quality factors must be positive, got Q_L = {q_l}, Q_C = {q_c}, Q_I = {q_i}")]
    NonPositiveQ { q_l: f64, q_c: f64, q_i: f64 },
    #[error("1/Q_L = {inv_l:e} differs from 1/Q_I + 1/Q_C = {inv_sum:e} by more than 1%")]
    InconsistentQ { inv_l: f64, inv_sum: f64 },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Detunings and drive amplitudes of the four-level model, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourLevelParams {
    pub delta_s: f64,
    pub delta_d: f64,
    pub chi: f64,
    pub rabi_s: f64,
    pub rabi_d: f64,
}

impl FourLevelParams {
    /// Both tones on resonance: `Δ̃_s = −2χ`, `Δ̃_d = −χ`.
    pub fn double_resonance(chi: f64, rabi_s: f64, rabi_d: f64) -> Self {
        Self {
            delta_s: -2.0 * chi,
            delta_d: -chi,
            chi,
            rabi_s,
            rabi_d,
        }
    }
}

/// Basis index of each state in [`h_four_level`].
pub mod basis {
    pub const G0: usize = 0;
    pub const E0: usize = 1;
    pub const G1: usize = 2;
    pub const E1: usize = 3;
}

/// Rotating-frame Hamiltonian restricted to `|g0⟩, |e0⟩, |g1⟩, |e1⟩`:
///
/// ```text
/// ⎡ −Δs/2    0        0              0           ⎤
/// ⎢  0       Δs/2     0              Ωd/2        ⎥
/// ⎢  0       0        Δd − Δs/2 − χ  Ωs/2        ⎥
/// ⎣  0       Ωd/2     Ωs/2           Δd + Δs/2 + χ ⎦
/// ```
pub fn h_four_level(p: &FourLevelParams) -> CMatrix {
    use basis::*;
    let r = |x: f64| C64::new(x, 0.0);
    let mut h = CMatrix::zeros(4, 4);
    h[(G0, G0)] = r(-p.delta_s / 2.0);
    h[(E0, E0)] = r(p.delta_s / 2.0);
    h[(G1, G1)] = r(p.delta_d - p.delta_s / 2.0 - p.chi);
    h[(E1, E1)] = r(p.delta_d + p.delta_s / 2.0 + p.chi);
    h[(E0, E1)] = r(p.rabi_d / 2.0);
    h[(E1, E0)] = r(p.rabi_d / 2.0);
    h[(G1, E1)] = r(p.rabi_s / 2.0);
    h[(E1, G1)] = r(p.rabi_s / 2.0);
    h
}

/// Eigen-decomposition of [`h_four_level`], eigenvalues ascending and
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct FourLevelEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl FourLevelEigen {
    pub fn new(p: &FourLevelParams) -> Self {
        let (values, vectors) = hermitian_eigen(&h_four_level(p));
        Self { values, vectors }
    }

    /// Weight of basis state `b` in eigenvector `k`.
    pub fn weight(&self, k: usize, b: usize) -> f64 {
        self.vectors[(b, k)].norm_sqr()
    }

    /// Indices of the two eigenvectors with the largest `|e1⟩` content, in
    /// ascending energy order. These are the branches the probe sees split.
    pub fn dressed_pair(&self) -> (usize, usize) {
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| {
            self.weight(b, basis::E1)
                .total_cmp(&self.weight(a, basis::E1))
                .then(a.cmp(&b))
        });
        let (a, b) = (idx[0], idx[1]);
        (a.min(b), a.max(b))
    }

    pub fn pair_gap(&self) -> f64 {
        let (a, b) = self.dressed_pair();
        self.values[b] - self.values[a]
    }
}

/// `δ = (Ω_d² + Ω_s²)^½`.
pub fn at_splitting(rabi_s: f64, rabi_d: f64) -> f64 {
    rabi_d.hypot(rabi_s)
}

/// Mean photon number `Σ n w_n / Σ w_n`.
pub fn nbar_from_weights(w: &[f64]) -> Result<f64, AnalyticError> {
    if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(AnalyticError::UndefinedWeights);
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(AnalyticError::UndefinedWeights);
    }
    Ok(w.iter().enumerate().map(|(n, x)| n as f64 * x).sum::<f64>() / total)
}

/// Effective temperature from a thermal ratio `p_{n+1}/p_n = exp(−ħω/k_B T)`.
/// `None` when the ratio is outside `(0, 1)`.
pub fn boltzmann_temperature(ratio: f64, omega: f64) -> Option<f64> {
    if ratio > 0.0 && ratio < 1.0 {
        Some(HBAR * omega / (BOLTZMANN * (1.0 / ratio).ln()))
    } else {
        None
    }
}

/// Sign of `χ` in the resonance condition `Δ̃_d ± χ = 0` of [`nbar_vs_power`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Resonator dressed by `|e⟩`, resonant at `ω_d = ω̃_r + χ`.
    Plus,
    /// Resonator dressed by `|g⟩`, resonant at `ω_d = ω̃_r − χ`.
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Resonator line parameters used to turn coupler power into photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub q_l: f64,
    pub q_c: f64,
    pub q_i: f64,
    pub kappa_minus: f64,
    pub omega_r_tilde: f64,
    /// Input-line attenuation between source and device, dB.
    pub attenuation_db: f64,
}

impl CalibrationParams {
    /// `Q_C` from `1/Q_L = 1/Q_I + 1/Q_C`.
    pub fn coupling_q(q_l: f64, q_i: f64) -> f64 {
        1.0 / (1.0 / q_l - 1.0 / q_i)
    }

    pub fn from_params(params: &SystemParams, q_l: f64, q_i: f64, attenuation_db: f64) -> Self {
        Self {
            q_l,
            q_c: Self::coupling_q(q_l, q_i),
            q_i,
            kappa_minus: params.rates.kappa_minus,
            omega_r_tilde: params.dressed().omega_r_tilde,
            attenuation_db,
        }
    }

    /// `Q_L = 18 000`, `Q_I = 190 000`, 65 dB of line attenuation.
    pub fn paper_device() -> Self {
        Self::from_params(&SystemParams::paper_device(), 18_000.0, 190_000.0, 65.0)
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        if !(self.q_l > 0.0 && self.q_c > 0.0 && self.q_i > 0.0) {
            return Err(AnalyticError::NonPositiveQ {
                q_l: self.q_l,
                q_c: self.q_c,
                q_i: self.q_i,
            });
        }
        for (name, value) in [
            ("kappa_minus", self.kappa_minus),
            ("omega_r_tilde", self.omega_r_tilde),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AnalyticError::NonPositive { name, value });
            }
        }
        let inv_l = 1.0 / self.q_l;
        let inv_sum = 1.0 / self.q_i + 1.0 / self.q_c;
        if (inv_l - inv_sum).abs() > 0.01 * inv_l {
            return Err(AnalyticError::InconsistentQ { inv_l, inv_sum });
        }
        Ok(())
    }

    /// Photon flux `κ_− P / ħω̃_r` scaled by `Q_C / 2Q_L`.
    fn drive_rate(&self, p_rf: f64) -> f64 {
        self.q_c / (2.0 * self.q_l) * self.kappa_minus * p_rf / (HBAR * self.omega_r_tilde)
    }

    /// Power reaching the device for a given source power, W.
    pub fn device_power(&self, source_power: f64) -> f64 {
        source_power * 10f64.powf(-self.attenuation_db / 10.0)
    }
}

/// Coherent occupation of a resonator branch driven at `P_rf` (W, at the device):
/// `n̄± = (Q_C/2Q_L)(κ_− P/ħω̃_r) / ((κ_−/2)² + (Δ̃_d ± χ)²)`.
pub fn nbar_vs_power(
    p_rf: f64,
    branch: Branch,
    cal: &CalibrationParams,
    delta_d: f64,
    chi: f64,
) -> f64 {
    let half = cal.kappa_minus / 2.0;
    let det = delta_d + branch.sign() * chi;
    cal.drive_rate(p_rf) / (half * half + det * det)
}

/// Coupler Rabi frequency `Ω_d = (Q_C κ_− P / 2Q_L ħω̃_r)^½`.
pub fn rabi_from_power(p_rf: f64, cal: &CalibrationParams) -> f64 {
    cal.drive_rate(p_rf).sqrt()
}

/// Inverse of [`rabi_from_power`].
pub fn power_from_rabi(rabi_d: f64, cal: &CalibrationParams) -> f64 {
    rabi_d * rabi_d / cal.drive_rate(1.0)
}

/// RMS line voltage for power `p_rf` on a 50 Ω line.
pub fn v_rf(p_rf: f64) -> f64 {
    (50.0 * p_rf).sqrt()
}

/// Residual `Δ̃_s + n(Δ̃_d + χ)` of the `|g, 0⟩ → |e, n⟩` multiphoton
/// sideband (one probe photon, `n` coupler photons).
pub fn sideband_detuning(n: u32, delta_s: f64, delta_d: f64, chi: f64) -> f64 {
    delta_s + n as f64 * (delta_d + chi)
}

/// True when the `n`-th sideband resonance holds to within `tol` (rad/s).
/// In the `(ω_s, ω_d)` plane the band has slope `−1/n`.
pub fn sideband_condition(n: u32, delta_s: f64, delta_d: f64, chi: f64, tol: f64) -> bool {
    assert!(n >= 1, "sideband order starts at 1");
    sideband_detuning(n, delta_s, delta_d, chi).abs() <= tol
}

/// Probe frequency on the `n`-th sideband line for coupler frequency `omega_d`.
pub fn sideband_probe_frequency(n: u32, omega_d: f64, params: &SystemParams) -> f64 {
    let dr = params.dressed();
    let delta_d = dr.omega_r_tilde - omega_d;
    dr.omega_ge_tilde + n as f64 * (delta_d + params.chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz, to_hz};
    use proptest::prelude::*;

    #[test]
    fn undriven_four_level_is_diagonal() {
        let p = FourLevelParams {
            delta_s: 1.0,
            delta_d: 2.0,
            chi: -3.0,
            rabi_s: 0.0,
            rabi_d: 0.0,
        };
        let e = FourLevelEigen::new(&p);
        let mut want = vec![-0.5, 0.5, 2.0 - 0.5 + 3.0, 2.0 + 0.5 - 3.0];
        want.sort_by(f64::total_cmp);
        for (a, b) in e.values.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn double_resonance_without_probe_splits_by_rabi_d() {
        let p = FourLevelParams::double_resonance(mhz(-4.65), 0.0, mhz(1.3));
        let h = h_four_level(&p);
        assert_eq!(h[(basis::E0, basis::E0)], h[(basis::E1, basis::E1)]);
        let e = FourLevelEigen::new(&p);
        assert!((e.pair_gap() - mhz(1.3)).abs() < 1e-12 * mhz(1.3));
    }

    #[test]
    fn four_level_trace() {
        let p = FourLevelParams {
            delta_s: 0.7,
            delta_d: -1.9,
            chi: 2.3,
            rabi_s: 0.4,
            rabi_d: 1.1,
        };
        let h = h_four_level(&p);
        assert_eq!(h, h.adjoint());
        assert!((h.trace().re - 2.0 * p.delta_d).abs() < 1e-15);
    }

    #[test]
    fn splitting_examples() {
        let d = to_hz(at_splitting(mhz(0.3), mhz(1.3))) / 1e6;
        assert!((d - 1.334_166).abs() < 1e-6);
        let d = to_hz(at_splitting(mhz(0.3), mhz(0.6))) / 1e6;
        assert!((d - 0.670_820).abs() < 1e-6);
        assert_eq!(at_splitting(2.5, 0.0), 2.5);
    }

    #[test]
    fn nbar_examples() {
        assert!((nbar_from_weights(&[0.9, 0.1]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(nbar_from_weights(&[1.0]).unwrap(), 0.0);
        assert_eq!(
            nbar_from_weights(&[0.0, 0.0]),
            Err(AnalyticError::UndefinedWeights)
        );
        assert_eq!(nbar_from_weights(&[]), Err(AnalyticError::UndefinedWeights));
        assert_eq!(
            nbar_from_weights(&[1.0, -0.1]),
            Err(AnalyticError::UndefinedWeights)
        );
        // Poisson(1.5) truncated at n = 8
        let mut w = vec![(-1.5f64).exp()];
        for n in 1..=8 {
            let prev = w[n - 1];
            w.push(prev * 1.5 / n as f64);
        }
        assert!((nbar_from_weights(&w).unwrap() - 1.5).abs() < 1e-3);
    }

    #[test]
    fn thermal_temperature() {
        let t = boltzmann_temperature(0.1 / 0.9, crate::units::ghz(5.474)).unwrap();
        assert!((t - 0.119_58).abs() < 1e-4, "{t}");
        assert_eq!(boltzmann_temperature(0.0, 1.0), None);
        assert_eq!(boltzmann_temperature(1.0, 1.0), None);
    }

    #[test]
    fn calibration_profile() {
        let c = CalibrationParams::paper_device();
        c.validate().unwrap();
        assert!((c.q_c - 19_883.7).abs() < 0.1);
        let mut bad = c;
        bad.q_c = 30_000.0;
        assert!(matches!(
            bad.validate(),
            Err(AnalyticError::InconsistentQ { .. })
        ));
        bad.q_l = -1.0;
        assert!(matches!(
            bad.validate(),
            Err(AnalyticError::NonPositiveQ { .. })
        ));
        assert!((c.device_power(1.0) - 10f64.powf(-6.5)).abs() < 1e-18);
    }

    #[test]
    fn lorentzian_half_width() {
        let c = CalibrationParams::paper_device();
        let chi = mhz(-4.65);
        let p = 1e-18;
        let on = nbar_vs_power(p, Branch::Plus, &c, -chi, chi);
        let off = nbar_vs_power(p, Branch::Plus, &c, -chi + c.kappa_minus / 2.0, chi);
        assert!((on / off - 2.0).abs() < 1e-12);
        let minus = nbar_vs_power(p, Branch::Minus, &c, chi, chi);
        assert!((minus - on).abs() < 1e-12 * on);
        assert_eq!(nbar_vs_power(0.0, Branch::Minus, &c, 0.0, chi), 0.0);
    }

    #[test]
    fn coherent_occupation_at_low_power() {
        // independent evaluation of the resonant Lorentzian at 1.25 aW
        let c = CalibrationParams::paper_device();
        let hbar = 1.054_571_817e-34;
        let omega_r = 2.0 * std::f64::consts::PI * 5.464e9;
        let kappa = omega_r / 18_000.0;
        let q_c = 1.0 / (1.0 / 18_000.0 - 1.0 / 190_000.0);
        let omega_rt = omega_r + 2.0 * std::f64::consts::PI * 5.35e6;
        let want = q_c / 36_000.0 * kappa * 1.25e-18 / (hbar * omega_rt) * 4.0 / (kappa * kappa);
        let got = nbar_vs_power(1.25e-18, Branch::Minus, &c, mhz(-4.65), mhz(-4.65));
        assert!((got - want).abs() < 1e-9 * want);
        assert!((got - 0.3995).abs() < 1e-3, "{got}");
    }

    #[test]
    fn rabi_square_root_law() {
        let c = CalibrationParams::paper_device();
        assert_eq!(rabi_from_power(0.0, &c), 0.0);
        let a = rabi_from_power(1e-17, &c);
        let b = rabi_from_power(4e-17, &c);
        assert!((b / a - 2.0).abs() < 1e-14);
        assert!((power_from_rabi(a, &c) - 1e-17).abs() < 1e-30);
        assert!((v_rf(4.0) - 50f64.sqrt() * 2.0).abs() < 1e-14);
    }

    #[test]
    fn sideband_examples() {
        let chi = mhz(-4.65);
        let dd = mhz(0.8);
        assert!(sideband_condition(1, -dd - chi, dd, chi, 1e-6));
        assert!(!sideband_condition(1, dd + chi, dd, chi, 1e-6));
        for n in 1..6 {
            assert!(sideband_condition(n, 0.0, 0.0, 0.0, 0.0));
        }
        let p = SystemParams::paper_device();
        let dr = p.dressed();
        // slope −1/n in the (ω_s, ω_d) plane
        for n in 1..=2u32 {
            let w1 = sideband_probe_frequency(n, dr.omega_r_tilde, &p);
            let w2 = sideband_probe_frequency(n, dr.omega_r_tilde + mhz(1.0), &p);
            let slope = mhz(1.0) / (w2 - w1);
            assert!((slope + 1.0 / n as f64).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn pair_gap_is_at_splitting(
            rs in 0.1..2.0f64, rd in 0.1..2.0f64, chi in 1.0..10.0f64, neg in any::<bool>(),
        ) {
            let chi = if neg { -mhz(chi) } else { mhz(chi) };
            let p = FourLevelParams::double_resonance(chi, mhz(rs), mhz(rd));
            let want = at_splitting(mhz(rs), mhz(rd));
            let got = FourLevelEigen::new(&p).pair_gap();
            prop_assert!((got - want).abs() <= 1e-12 * want, "{} vs {}", got, want);
        }

        #[test]
        fn nbar_scale_invariant(w in prop::collection::vec(0.0..1.0f64, 1..12), s in 1e-6..1e6f64) {
            prop_assume!(w.iter().sum::<f64>() > 1e-9);
            let a = nbar_from_weights(&w).unwrap();
            let scaled: Vec<f64> = w.iter().map(|x| x * s).collect();
            let b = nbar_from_weights(&scaled).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn resonant_occupation_is_four_rabi_squared_over_kappa_squared(p in 0.0..1e-15f64) {
            let c = CalibrationParams::paper_device();
            let chi = mhz(-4.65);
            let n = nbar_vs_power(p, Branch::Plus, &c, -chi, chi);
            let r = rabi_from_power(p, &c);
            let want = 4.0 * r * r / (c.kappa_minus * c.kappa_minus);
            prop_assert!((n - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }
}
