//! Device parameters and Hamiltonians.
//!
//! Three Hamiltonians live here:
//!
//! * [`h_jc_exact`]: the lab-frame Jaynes-Cummings ladder with a three-level
//!   transmon (g, e, f). Used only as an oracle for the dispersive model.
//! * [`dispersive_energy`]: the diagonal second-order dispersive model with
//!   fourth-order Kerr corrections.
//! * [`h_total_rotating`]: the driven Hamiltonian in the frame rotating at
//!   both drive frequencies, which is what the master equation integrates.
//!
//! All quantities are angular frequencies in rad/s (ħ = 1). `χ` is signed;
//! for the reference device it is negative.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::operators::{
    hermitian_eigen, CMatrix, Operator, OperatorError, Space, SpaceConfig, C64,
};
use crate::units::{ghz, khz, mhz};

/// `|λ|` at or above this attaches a [`DispersiveWarning`].
pub const LAMBDA_LIMIT: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{transition} transition is resonant with the resonator (zero detuning)")]
    ZeroDetuning { transition: &'static str },
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("rate {name} must be non-negative, got {value}")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("excitation rate {up} = {up_value} exceeds decay rate {down} = {down_value}")]
    RateOrdering {
        up: &'static str,
        up_value: f64,
        down: &'static str,
        down_value: f64,
    },
    #[error("drive amplitude {name} must be non-negative, got {value}")]
    NegativeRabi { name: &'static str, value: f64 },
    #[error("this Hamiltonian needs a {expected}-level qubit, got {got}")]
    QubitLevels { expected: usize, got: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Where a parameter value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Published device value.
    Quoted,
    /// Computed from other parameters.
    Derived,
    /// Supplied by the caller.
    Input,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Quoted => "quoted",
            Source::Derived => "derived",
            Source::Input => "input",
        })
    }
}

/// Incoherent rates of the master equation, all in 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    /// Pure dephasing rate; enters the master equation as `(γ_φ/2) D[σz]`.
    pub gamma_phi: f64,
}

impl Rates {
    pub fn zero() -> Self {
        Self {
            kappa_minus: 0.0,
            kappa_plus: 0.0,
            gamma_minus: 0.0,
            gamma_plus: 0.0,
            gamma_phi: 0.0,
        }
    }

    /// Reference device: `κ_− = ω_r/Q_L`, `T₁ = 1/(Γ_− + Γ_+) = 1.6 μs`,
    /// `γ_φ = 2×10⁵ s⁻¹`, with both thermal ratios set to 1/10.
    pub fn paper_device() -> Self {
        let kappa_minus = ghz(5.464) / 18_000.0;
        let gamma_total = 1.0 / 1.6e-6;
        let gamma_minus = gamma_total / 1.1;
        Self {
            kappa_minus,
            kappa_plus: kappa_minus / 10.0,
            gamma_minus,
            gamma_plus: gamma_total - gamma_minus,
            gamma_phi: 2e5,
        }
    }

    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("kappa_minus", self.kappa_minus),
            ("kappa_plus", self.kappa_plus),
            ("gamma_minus", self.gamma_minus),
            ("gamma_plus", self.gamma_plus),
            ("gamma_phi", self.gamma_phi),
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in self.named() {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
            if value < 0.0 {
                return Err(ModelError::NegativeRate { name, value });
            }
        }
        if self.kappa_plus > self.kappa_minus {
            return Err(ModelError::RateOrdering {
                up: "kappa_plus",
                up_value: self.kappa_plus,
                down: "kappa_minus",
                down_value: self.kappa_minus,
            });
        }
        if self.gamma_plus > self.gamma_minus {
            return Err(ModelError::RateOrdering {
                up: "gamma_plus",
                up_value: self.gamma_plus,
                down: "gamma_minus",
                down_value: self.gamma_minus,
            });
        }
        Ok(())
    }

    /// True when every rate is zero, which leaves the steady state undetermined.
    pub fn is_dissipationless(&self) -> bool {
        self.named().iter().all(|&(_, v)| v == 0.0)
    }
}

/// Bare device description from which everything dispersive is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceInputs {
    pub omega_r: f64,
    pub omega_ge: f64,
    /// Defaults to `omega_ge − charging_energy` when absent.
    pub omega_ef: Option<f64>,
    pub charging_energy: f64,
    pub g_ge: f64,
    pub g_ef: f64,
    pub rates: Rates,
}

impl DeviceInputs {
    /// Bare values of the reference device. The bare qubit frequency is
    /// recovered from the dressed 4.982 GHz line and the quoted `χ_ge`.
    pub fn paper_device() -> Self {
        Self {
            omega_r: ghz(5.464),
            omega_ge: ghz(4.982) - mhz(-10.0),
            omega_ef: None,
            charging_energy: mhz(250.0),
            g_ge: mhz(70.0),
            g_ef: mhz(89.0),
            rates: Rates::paper_device(),
        }
    }

    pub fn omega_ef(&self) -> f64 {
        self.omega_ef
            .unwrap_or(self.omega_ge - self.charging_energy)
    }
}

/// A `|λ| ≥ 0.3` transition, where second-order perturbation theory is suspect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveWarning {
    pub transition: &'static str,
    pub lambda: f64,
}

impl fmt::Display for DispersiveWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|lambda_{}| = {:.3} is not small (limit {LAMBDA_LIMIT}); dispersive model may be inaccurate",
            self.transition,
            self.lambda.abs()
        )
    }
}

/// Full parameter set of the transmon-resonator device.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega_r: f64,
    pub omega_ge: f64,
    pub omega_ef: f64,
    pub g_ge: f64,
    pub g_ef: f64,
    pub chi_ge: f64,
    pub chi_ef: f64,
    pub chi: f64,
    pub lambda_ge: f64,
    pub lambda_ef: f64,
    pub zeta: f64,
    pub zeta_prime: f64,
    pub rates: Rates,
    pub provenance: BTreeMap<&'static str, Source>,
}

/// Result of [`derive_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub params: SystemParams,
    pub warnings: Vec<DispersiveWarning>,
}

/// Dispersive couplings, Kerr terms and small parameters from bare inputs.
///
/// `χ_jk = g_jk²/Δ_jk`, `χ = χ_ge − χ_ef/2`,
/// `ζ = χ_ef λ_ef² − 2χ_ge λ_ge² + (7/4)χ_ef λ_ge² − (5/4)χ_ge λ_ef²` and
/// `ζ′ = (χ_ge − χ_ef)(λ_ge² + λ_ef²)`, with `Δ_jk = ω_jk − ω_r` signed.
pub fn derive_params(inputs: &DeviceInputs) -> Result<Derived, ModelError> {
    let omega_ef = inputs.omega_ef();
    for (name, value) in [
        ("omega_r", inputs.omega_r),
        ("omega_ge", inputs.omega_ge),
        ("omega_ef", omega_ef),
        ("g_ge", inputs.g_ge),
        ("g_ef", inputs.g_ef),
    ] {
        if !value.is_finite() {
            return Err(ModelError::NonFinite { name, value });
        }
    }
    inputs.rates.validate()?;

    let delta_ge = inputs.omega_ge - inputs.omega_r;
    let delta_ef = omega_ef - inputs.omega_r;
    if delta_ge == 0.0 {
        return Err(ModelError::ZeroDetuning { transition: "ge" });
    }
    if delta_ef == 0.0 {
        return Err(ModelError::ZeroDetuning { transition: "ef" });
    }

    let lambda_ge = inputs.g_ge / delta_ge;
    let lambda_ef = inputs.g_ef / delta_ef;
    let chi_ge = inputs.g_ge * inputs.g_ge / delta_ge;
    let chi_ef = inputs.g_ef * inputs.g_ef / delta_ef;
    let (l2ge, l2ef) = (lambda_ge * lambda_ge, lambda_ef * lambda_ef);
    let zeta = chi_ef * l2ef - 2.0 * chi_ge * l2ge + 1.75 * chi_ef * l2ge - 1.25 * chi_ge * l2ef;
    let zeta_prime = (chi_ge - chi_ef) * (l2ge + l2ef);

    let mut provenance = BTreeMap::new();
    for key in ["omega_r", "omega_ge", "g_ge", "g_ef", "rates"] {
        provenance.insert(key, Source::Input);
    }
    let ef_source = if inputs.omega_ef.is_some() {
        Source::Input
    } else {
        Source::Derived
    };
    provenance.insert("omega_ef", ef_source);
    for key in [
        "chi_ge",
        "chi_ef",
        "chi",
        "lambda_ge",
        "lambda_ef",
        "zeta",
        "zeta_prime",
    ] {
        provenance.insert(key, Source::Derived);
    }

    let params = SystemParams {
        omega_r: inputs.omega_r,
        omega_ge: inputs.omega_ge,
        omega_ef,
        g_ge: inputs.g_ge,
        g_ef: inputs.g_ef,
        chi_ge,
        chi_ef,
        chi: chi_ge - chi_ef / 2.0,
        lambda_ge,
        lambda_ef,
        zeta,
        zeta_prime,
        rates: inputs.rates,
        provenance,
    };
    let warnings = params.dispersive_warnings();
    Ok(Derived { params, warnings })
}

impl SystemParams {
    /// The reference device with the published dispersive shifts and Kerr
    /// coefficients (`χ/2π = −4.65 MHz`, `χ_ge/2π = −10 MHz`,
    /// `χ_ef/2π = −10.7 MHz`, `ζ/2π = 23 kHz`, `ζ′/2π = 85 kHz`) in place of
    /// the values [`derive_params`] would compute from the couplings.
    pub fn paper_device() -> Self {
        let mut p = derive_params(&DeviceInputs::paper_device())
            .expect("reference inputs are valid")
            .params;
        p.chi_ge = mhz(-10.0);
        p.chi_ef = mhz(-10.7);
        p.chi = mhz(-4.65);
        p.zeta = khz(23.0);
        p.zeta_prime = khz(85.0);
        for key in [
            "omega_r",
            "g_ge",
            "g_ef",
            "chi_ge",
            "chi_ef",
            "chi",
            "zeta",
            "zeta_prime",
        ] {
            p.provenance.insert(key, Source::Quoted);
        }
        p.provenance.insert("omega_ge", Source::Derived);
        p.provenance.insert("rates", Source::Derived);
        p
    }

    pub fn dispersive_warnings(&self) -> Vec<DispersiveWarning> {
        [("ge", self.lambda_ge), ("ef", self.lambda_ef)]
            .into_iter()
            .filter(|(_, l)| l.abs() >= LAMBDA_LIMIT)
            .map(|(transition, lambda)| DispersiveWarning { transition, lambda })
            .collect()
    }

    pub fn dressed(&self) -> DressedFrequencies {
        DressedFrequencies::of(self)
    }
}

/// Dressed resonator and qubit frequencies, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrequencies {
    /// `ω_r − χ_ef/2`
    pub omega_r_tilde: f64,
    /// `ω_ge + χ_ge`
    pub omega_ge_tilde: f64,
}

impl DressedFrequencies {
    pub fn of(p: &SystemParams) -> Self {
        Self {
            omega_r_tilde: p.omega_r - p.chi_ef / 2.0,
            omega_ge_tilde: p.omega_ge + p.chi_ge,
        }
    }
}

/// Probe (`s`) and coupler (`d`) tones for one simulation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub omega_s: f64,
    pub omega_d: f64,
    pub rabi_s: f64,
    pub rabi_d: f64,
}

/// Drive detunings from the dressed frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detunings {
    /// `ω̃_ge − ω_s`
    pub delta_s: f64,
    /// `ω̃_r − ω_d`
    pub delta_d: f64,
}

impl DriveSpec {
    pub fn from_detunings(
        dressed: &DressedFrequencies,
        delta_s: f64,
        delta_d: f64,
        rabi_s: f64,
        rabi_d: f64,
    ) -> Self {
        Self {
            omega_s: dressed.omega_ge_tilde - delta_s,
            omega_d: dressed.omega_r_tilde - delta_d,
            rabi_s,
            rabi_d,
        }
    }

    pub fn detunings(&self, dressed: &DressedFrequencies) -> Detunings {
        Detunings {
            delta_s: dressed.omega_ge_tilde - self.omega_s,
            delta_d: dressed.omega_r_tilde - self.omega_d,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, value) in [
            ("omega_s", self.omega_s),
            ("omega_d", self.omega_d),
            ("rabi_s", self.rabi_s),
            ("rabi_d", self.rabi_d),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { name, value });
            }
        }
        if self.rabi_s < 0.0 {
            return Err(ModelError::NegativeRabi {
                name: "rabi_s",
                value: self.rabi_s,
            });
        }
        if self.rabi_d < 0.0 {
            return Err(ModelError::NegativeRabi {
                name: "rabi_d",
                value: self.rabi_d,
            });
        }
        Ok(())
    }
}

/// Lab-frame multi-level Jaynes-Cummings Hamiltonian,
/// `ω_r a†a + Σ_j ω_j |j⟩⟨j| + Σ_j g_{j,j+1}(a†|j⟩⟨j+1| + a|j+1⟩⟨j|)`
/// with transmon levels `g, e, f` at `0, ω_ge, ω_ge + ω_ef`.
pub fn h_jc_exact(params: &SystemParams, space: SpaceConfig) -> Result<Operator, ModelError> {
    if space.n_qubit != 3 {
        return Err(ModelError::QubitLevels {
            expected: 3,
            got: space.n_qubit,
        });
    }
    let levels = [0.0, params.omega_ge, params.omega_ge + params.omega_ef];
    let couplings = [params.g_ge, params.g_ef];
    let d = space.dim();
    let mut mat = CMatrix::zeros(d, d);
    for n in 0..space.n_fock {
        for (j, &e) in levels.iter().enumerate() {
            let i = space.index(n, j);
            mat[(i, i)] = C64::new(params.omega_r * n as f64 + e, 0.0);
        }
    }
    // a†|j⟩⟨j+1| takes |n, j+1⟩ to √(n+1)|n+1, j⟩
    for n in 0..space.n_fock - 1 {
        let amp = ((n + 1) as f64).sqrt();
        for (j, &g) in couplings.iter().enumerate() {
            let upper = space.index(n, j + 1);
            let lower = space.index(n + 1, j);
            let v = C64::new(g * amp, 0.0);
            mat[(lower, upper)] = v;
            mat[(upper, lower)] = v;
        }
    }
    Ok(Operator::from_matrix(Space::Joint(space), mat)?)
}

/// Rotating-frame driven Hamiltonian,
///
/// ```text
/// H = Δ̃_d a†a + (Δ̃_s/2)σz + χ a†a σz + ζ (a†a)² σz + ζ′ (a†a)²
///     + (Ω_d/2)(a + a†) + (Ω_s/2)(σ+ + σ−)
/// ```
pub fn h_total_rotating(
    params: &SystemParams,
    drive: &DriveSpec,
    space: SpaceConfig,
) -> Result<Operator, ModelError> {
    if space.n_qubit != 2 {
        return Err(ModelError::QubitLevels {
            expected: 2,
            got: space.n_qubit,
        });
    }
    drive.validate()?;
    let det = drive.detunings(&params.dressed());
    let d = space.dim();
    let mut mat = CMatrix::zeros(d, d);
    for n in 0..space.n_fock {
        let nf = n as f64;
        for q in 0..2 {
            let s = if q == 0 { -1.0 } else { 1.0 };
            let i = space.index(n, q);
            let e = det.delta_d * nf
                + s * (det.delta_s / 2.0 + params.chi * nf + params.zeta * nf * nf)
                + params.zeta_prime * nf * nf;
            mat[(i, i)] = C64::new(e, 0.0);
        }
        let (g, e) = (space.index(n, 0), space.index(n, 1));
        let probe = C64::new(drive.rabi_s / 2.0, 0.0);
        mat[(g, e)] = probe;
        mat[(e, g)] = probe;
        if n + 1 < space.n_fock {
            let coupler = C64::new(drive.rabi_d / 2.0 * ((n + 1) as f64).sqrt(), 0.0);
            for q in 0..2 {
                let (lo, hi) = (space.index(n, q), space.index(n + 1, q));
                mat[(lo, hi)] = coupler;
                mat[(hi, lo)] = coupler;
            }
        }
    }
    Ok(Operator::from_matrix(Space::Joint(space), mat)?)
}

/// Lab-frame energy of `|n, g⟩` (`excited = false`) or `|n, e⟩` in the
/// dispersive model with Kerr terms:
/// `ω̃_r n ± (ω̃_ge/2 + χn + ζn²) + ζ′n²`.
pub fn dispersive_energy(params: &SystemParams, n: usize, excited: bool) -> f64 {
    let dr = params.dressed();
    let nf = n as f64;
    let s = if excited { 1.0 } else { -1.0 };
    dr.omega_r_tilde * nf
        + s * (dr.omega_ge_tilde / 2.0 + params.chi * nf + params.zeta * nf * nf)
        + params.zeta_prime * nf * nf
}

/// Eigenvalues of a joint-space Hamiltonian, each tagged with the bare
/// `(fock, qubit)` state it overlaps most.
#[derive(Debug, Clone)]
pub struct LabelledSpectrum {
    space: SpaceConfig,
    energies: Vec<f64>,
    labels: Vec<(usize, usize)>,
}

impl LabelledSpectrum {
    /// Labels are assigned greedily by decreasing overlap, so every bare
    /// state labels exactly one eigenvector.
    pub fn new(h: &Operator, space: SpaceConfig) -> Result<Self, ModelError> {
        let d = space.dim();
        if h.dim() != d {
            return Err(OperatorError::DimensionMismatch {
                space: Space::Joint(space),
                expected: d,
                got: h.dim(),
            }
            .into());
        }
        let (values, vectors) = hermitian_eigen(h.matrix());
        let mut overlaps: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
        for k in 0..d {
            for b in 0..d {
                overlaps.push((vectors[(b, k)].norm_sqr(), k, b));
            }
        }
        overlaps.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut label_of = vec![usize::MAX; d];
        let mut taken = vec![false; d];
        for (_, k, b) in overlaps {
            if label_of[k] == usize::MAX && !taken[b] {
                label_of[k] = b;
                taken[b] = true;
            }
        }
        Ok(Self {
            space,
            energies: values,
            labels: label_of.into_iter().map(|b| space.split(b)).collect(),
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    /// Energy of the eigenstate labelled `(fock, qubit)`.
    pub fn energy(&self, fock: usize, qubit: usize) -> Option<f64> {
        if fock >= self.space.n_fock || qubit >= self.space.n_qubit {
            return None;
        }
        self.labels
            .iter()
            .position(|&l| l == (fock, qubit))
            .map(|k| self.energies[k])
    }
}

/// Photon-number dependence of the qubit frequency in the exact ladder.
#[derive(Debug, Clone)]
pub struct StarkShift {
    /// `E(n, e) − E(n, g)` for `n = 0..qubit_frequencies.len()`.
    pub qubit_frequencies: Vec<f64>,
    /// Least-squares slope of the qubit frequency in `n`; the dispersive
    /// model predicts `2χ`.
    pub per_photon: f64,
}

/// Diagonalizes [`h_jc_exact`] with a three-level transmon and reads off the
/// qubit frequency for each photon number up to `n_fock − 2`. The top Fock
/// level is left out because `|n_fock − 1, e⟩` has lost its partner state.
pub fn stark_shift(params: &SystemParams, n_fock: usize) -> Result<StarkShift, ModelError> {
    let space = SpaceConfig::new(n_fock, 3)?;
    if n_fock < 3 {
        return Err(OperatorError::FockTooSmall(n_fock).into());
    }
    let spectrum = LabelledSpectrum::new(&h_jc_exact(params, space)?, space)?;
    let qubit_frequencies: Vec<f64> = (0..n_fock - 1)
        .map(|n| {
            let e = spectrum.energy(n, 1).expect("labelled");
            let g = spectrum.energy(n, 0).expect("labelled");
            e - g
        })
        .collect();
    let m = qubit_frequencies.len() as f64;
    let x_mean = (m - 1.0) / 2.0;
    let y_mean = qubit_frequencies.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (n, y) in qubit_frequencies.iter().enumerate() {
        let dx = n as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    Ok(StarkShift {
        qubit_frequencies,
        per_photon: sxy / sxx,
    })
}
