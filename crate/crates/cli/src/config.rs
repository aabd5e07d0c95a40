//! Run configuration: a TOML file in Hz, resolved against a built-in profile
//! into rad/s model types.

use std::path::{Path, PathBuf};

use dressed_jc::analytic::{rabi_from_power, CalibrationParams};
use dressed_jc::model::{
    derive_params, DeviceInputs, DispersiveWarning, Rates, Source, SystemParams,
};
use dressed_jc::operators::SpaceConfig;
use dressed_jc::units::hz;
use serde::Deserialize;

use crate::CliError;

/// Built-in parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Profile {
    /// The reference transmon-resonator device.
    #[default]
    PaperDevice,
}

/// Loaded quality factors of the reference device.
pub const PAPER_Q_LOADED: f64 = 18_000.0;
pub const PAPER_Q_INTERNAL: f64 = 190_000.0;
/// Input-line attenuation of the reference setup, dB.
pub const PAPER_ATTENUATION_DB: f64 = 65.0;

/// Raw file contents. Every key is optional; absent keys take profile values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub dissipation: DissipationSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Recompute χ, λ and ζ from the bare frequencies and couplings instead
    /// of using the profile's published values.
    pub derive_dispersive: Option<bool>,
    pub omega_r_hz: Option<f64>,
    pub omega_ge_hz: Option<f64>,
    pub omega_ef_hz: Option<f64>,
    pub charging_energy_hz: Option<f64>,
    pub g_ge_hz: Option<f64>,
    pub g_ef_hz: Option<f64>,
    pub chi_ge_hz: Option<f64>,
    pub chi_ef_hz: Option<f64>,
    pub chi_hz: Option<f64>,
    pub zeta_hz: Option<f64>,
    pub zeta_prime_hz: Option<f64>,
    pub lambda_ge: Option<f64>,
    pub lambda_ef: Option<f64>,
    pub n_fock: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipationSection {
    pub kappa_minus: Option<f64>,
    pub kappa_plus: Option<f64>,
    pub gamma_minus: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub gamma_phi: Option<f64>,
    pub q_loaded: Option<f64>,
    pub q_internal: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub omega_s_hz: Option<f64>,
    pub omega_d_hz: Option<f64>,
    pub rabi_s_hz: Option<f64>,
    pub rabi_d_hz: Option<f64>,
    /// Coupler power at the device, W. Alternative to `rabi_d_hz`.
    pub coupler_power_w: Option<f64>,
    pub attenuation_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub probe_start_hz: Option<f64>,
    pub probe_stop_hz: Option<f64>,
    pub probe_points: Option<usize>,
    pub coupler_start_hz: Option<f64>,
    pub coupler_stop_hz: Option<f64>,
    pub coupler_points: Option<usize>,
    pub n_peaks: Option<usize>,
    /// Coupler amplitudes of a splitting curve, Hz.
    pub rabi_d_hz: Option<Vec<f64>>,
    /// Coupler powers of a splitting curve, W. Alternative to `rabi_d_hz`.
    pub coupler_power_w: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Drive values set in the file, rad/s. Unset entries fall back to
/// command-specific defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DriveOverrides {
    pub omega_s: Option<f64>,
    pub omega_d: Option<f64>,
    pub rabi_s: Option<f64>,
    pub rabi_d: Option<f64>,
}

/// Sweep windows set in the file, Hz.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOverrides {
    pub probe: Option<(f64, f64)>,
    pub probe_points: Option<usize>,
    pub coupler: Option<(f64, f64)>,
    pub coupler_points: Option<usize>,
    pub n_peaks: Option<usize>,
    /// Coupler amplitudes, rad/s.
    pub amplitudes: Option<Vec<f64>>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub profile: Profile,
    pub params: SystemParams,
    pub space: SpaceConfig,
    pub calibration: CalibrationParams,
    pub drive: DriveOverrides,
    pub sweep: SweepOverrides,
    pub out_dir: Option<PathBuf>,
    pub warnings: Vec<DispersiveWarning>,
}

impl RunConfig {
    /// Profile values with no file.
    pub fn from_profile(profile: Profile) -> Self {
        Self::resolve(ConfigFile::default(), profile).expect("built-in profile is valid")
    }

    pub fn load(path: &Path, profile: Profile) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, profile).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, profile: Profile) -> Result<Self, CliError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::resolve(file, profile)
    }

    pub fn resolve(file: ConfigFile, profile: Profile) -> Result<Self, CliError> {
        let ConfigFile {
            system,
            dissipation,
            drive,
            sweep,
            output,
        } = file;
        let Profile::PaperDevice = profile;

        let base = SystemParams::paper_device();
        let mut rates = base.rates;
        set(&mut rates.kappa_minus, dissipation.kappa_minus);
        set(&mut rates.kappa_plus, dissipation.kappa_plus);
        set(&mut rates.gamma_minus, dissipation.gamma_minus);
        set(&mut rates.gamma_plus, dissipation.gamma_plus);
        set(&mut rates.gamma_phi, dissipation.gamma_phi);
        check_rates(&rates)?;

        let mut params = if system.derive_dispersive.unwrap_or(false) {
            let mut inputs = DeviceInputs::paper_device();
            set_hz(&mut inputs.omega_r, system.omega_r_hz);
            set_hz(&mut inputs.omega_ge, system.omega_ge_hz);
            set_hz(&mut inputs.charging_energy, system.charging_energy_hz);
            set_hz(&mut inputs.g_ge, system.g_ge_hz);
            set_hz(&mut inputs.g_ef, system.g_ef_hz);
            inputs.omega_ef = system.omega_ef_hz.map(hz);
            inputs.rates = rates;
            derive_params(&inputs)
                .map_err(|e| CliError::Config(format!("[system] {e}")))?
                .params
        } else {
            let mut p = base;
            p.rates = rates;
            for (field, value, key) in [
                (&mut p.omega_r, system.omega_r_hz, "omega_r"),
                (&mut p.omega_ge, system.omega_ge_hz, "omega_ge"),
                (&mut p.omega_ef, system.omega_ef_hz, "omega_ef"),
                (&mut p.g_ge, system.g_ge_hz, "g_ge"),
                (&mut p.g_ef, system.g_ef_hz, "g_ef"),
            ] {
                if let Some(v) = value {
                    *field = hz(v);
                    p.provenance.insert(key, Source::Input);
                }
            }
            if let (Some(ec), None) = (system.charging_energy_hz, system.omega_ef_hz) {
                p.omega_ef = p.omega_ge - hz(ec);
                p.provenance.insert("omega_ef", Source::Input);
            }
            p
        };
        for (field, value, key) in [
            (&mut params.chi_ge, system.chi_ge_hz, "chi_ge"),
            (&mut params.chi_ef, system.chi_ef_hz, "chi_ef"),
            (&mut params.chi, system.chi_hz, "chi"),
            (&mut params.zeta, system.zeta_hz, "zeta"),
            (&mut params.zeta_prime, system.zeta_prime_hz, "zeta_prime"),
        ] {
            if let Some(v) = value {
                *field = hz(v);
                params.provenance.insert(key, Source::Input);
            }
        }
        for (field, value, key) in [
            (&mut params.lambda_ge, system.lambda_ge, "lambda_ge"),
            (&mut params.lambda_ef, system.lambda_ef, "lambda_ef"),
        ] {
            if let Some(v) = value {
                *field = v;
                params.provenance.insert(key, Source::Input);
            }
        }
        check_finite(
            "system",
            &[
                ("omega_r_hz", params.omega_r),
                ("omega_ge_hz", params.omega_ge),
                ("omega_ef_hz", params.omega_ef),
                ("g_ge_hz", params.g_ge),
                ("g_ef_hz", params.g_ef),
                ("chi_hz", params.chi),
                ("zeta_hz", params.zeta),
                ("zeta_prime_hz", params.zeta_prime),
                ("lambda_ge", params.lambda_ge),
                ("lambda_ef", params.lambda_ef),
            ],
        )?;
        if params.chi == 0.0 {
            return Err(CliError::Config("[system] chi_hz must be nonzero".into()));
        }

        let n_fock = system.n_fock.unwrap_or(SpaceConfig::standard().n_fock);
        let space = SpaceConfig::new(n_fock, 2)
            .map_err(|e| CliError::Config(format!("[system] n_fock: {e}")))?;

        let calibration = CalibrationParams::from_params(
            &params,
            dissipation.q_loaded.unwrap_or(PAPER_Q_LOADED),
            dissipation.q_internal.unwrap_or(PAPER_Q_INTERNAL),
            drive.attenuation_db.unwrap_or(PAPER_ATTENUATION_DB),
        );
        // Without resonator loss there is no power calibration, but the
        // configuration is still valid for a (degenerate) solve.
        if params.rates.kappa_minus > 0.0
            || drive.coupler_power_w.is_some()
            || sweep.coupler_power_w.is_some()
        {
            calibration
                .validate()
                .map_err(|e| CliError::Config(format!("[dissipation] {e}")))?;
        }

        check_finite(
            "drive",
            &[
                ("omega_s_hz", drive.omega_s_hz.unwrap_or(0.0)),
                ("omega_d_hz", drive.omega_d_hz.unwrap_or(0.0)),
            ],
        )?;
        check_non_negative(
            "drive",
            &[
                ("rabi_s_hz", drive.rabi_s_hz),
                ("rabi_d_hz", drive.rabi_d_hz),
                ("coupler_power_w", drive.coupler_power_w),
            ],
        )?;
        let rabi_d = match (drive.rabi_d_hz, drive.coupler_power_w) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "[drive] set either rabi_d_hz or coupler_power_w, not both".into(),
                ))
            }
            (Some(r), None) => Some(hz(r)),
            (None, Some(p)) => Some(rabi_from_power(p, &calibration)),
            (None, None) => None,
        };
        let drive = DriveOverrides {
            omega_s: drive.omega_s_hz.map(hz),
            omega_d: drive.omega_d_hz.map(hz),
            rabi_s: drive.rabi_s_hz.map(hz),
            rabi_d,
        };

        let probe = window("probe", sweep.probe_start_hz, sweep.probe_stop_hz)?;
        let coupler = window("coupler", sweep.coupler_start_hz, sweep.coupler_stop_hz)?;
        for (key, count) in [
            ("probe_points", sweep.probe_points),
            ("coupler_points", sweep.coupler_points),
        ] {
            if matches!(count, Some(c) if c < 2) {
                return Err(CliError::Config(format!(
                    "[sweep] {key} must be at least 2"
                )));
            }
        }
        if sweep.n_peaks == Some(0) {
            return Err(CliError::Config(
                "[sweep] n_peaks must be at least 1".into(),
            ));
        }
        let amplitudes = match (sweep.rabi_d_hz, sweep.coupler_power_w) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "[sweep] set either rabi_d_hz or coupler_power_w, not both".into(),
                ))
            }
            (Some(r), None) => Some(checked_list("rabi_d_hz", r)?.into_iter().map(hz).collect()),
            (None, Some(p)) => Some(
                checked_list("coupler_power_w", p)?
                    .into_iter()
                    .map(|p| rabi_from_power(p, &calibration))
                    .collect(),
            ),
            (None, None) => None,
        };
        let sweep = SweepOverrides {
            probe,
            probe_points: sweep.probe_points,
            coupler,
            coupler_points: sweep.coupler_points,
            n_peaks: sweep.n_peaks,
            amplitudes,
        };

        let warnings = params.dispersive_warnings();
        Ok(Self {
            profile,
            params,
            space,
            calibration,
            drive,
            sweep,
            out_dir: output.dir,
            warnings,
        })
    }
}

fn set(field: &mut f64, value: Option<f64>) {
    if let Some(v) = value {
        *field = v;
    }
}

fn set_hz(field: &mut f64, value: Option<f64>) {
    if let Some(v) = value {
        *field = hz(v);
    }
}

fn check_rates(rates: &Rates) -> Result<(), CliError> {
    for (name, value) in [
        ("kappa_minus", rates.kappa_minus),
        ("kappa_plus", rates.kappa_plus),
        ("gamma_minus", rates.gamma_minus),
        ("gamma_plus", rates.gamma_plus),
        ("gamma_phi", rates.gamma_phi),
    ] {
        if !value.is_finite() {
            return Err(CliError::Config(format!(
                "[dissipation] {name} must be finite, got {value}"
            )));
        }
    }
    rates
        .validate()
        .map_err(|e| CliError::Config(format!("[dissipation] {e}")))
}

fn check_finite(section: &str, values: &[(&str, f64)]) -> Result<(), CliError> {
    match values.iter().find(|(_, v)| !v.is_finite()) {
        Some((key, v)) => Err(CliError::Config(format!(
            "[{section}] {key} must be finite, got {v}"
        ))),
        None => Ok(()),
    }
}

fn check_non_negative(section: &str, values: &[(&str, Option<f64>)]) -> Result<(), CliError> {
    for (key, value) in values {
        if let Some(v) = value {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(CliError::Config(format!(
                    "[{section}] {key} must be finite and non-negative, got {v}"
                )));
            }
        }
    }
    Ok(())
}

fn window(
    name: &str,
    start: Option<f64>,
    stop: Option<f64>,
) -> Result<Option<(f64, f64)>, CliError> {
    match (start, stop) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() && a < b => Ok(Some((a, b))),
        (Some(a), Some(b)) => Err(CliError::Config(format!(
            "[sweep] {name}_start_hz must be below {name}_stop_hz, got {a} .. {b}"
        ))),
        _ => Err(CliError::Config(format!(
            "[sweep] {name}_start_hz and {name}_stop_hz must be given together"
        ))),
    }
}

fn checked_list(key: &str, values: Vec<f64>) -> Result<Vec<f64>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config(format!("[sweep] {key} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(CliError::Config(format!(
            "[sweep] {key} entries must be finite and non-negative, got {v}"
        )));
    }
    Ok(values)
}
