//! CSV and metadata writers. Floats are written with 17 significant digits so
//! that they round-trip; failed points are written as `NaN`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dressed_jc::model::{DriveSpec, SystemParams};
use dressed_jc::operators::SpaceConfig;
use dressed_jc::specfit::{PeakFit, PhotonStats};
use dressed_jc::sweep::{Axis, Map2D, SpectrumTrace};
use dressed_jc::units::to_hz;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const PEAKS_CSV: &str = "peaks.csv";
pub const MAP_CSV: &str = "map.csv";
pub const MAP_META: &str = "map.meta";
pub const SPLITTING_CSV: &str = "splitting.csv";
pub const VALIDATION_JSON: &str = "validation.json";

/// `{:.16e}`, or `NaN`.
pub fn float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// One row of a splitting curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingRow {
    pub rabi_d_hz: f64,
    pub v_rf_volts: f64,
    pub gap_hz_simulated: f64,
    pub gap_hz_analytic: f64,
    pub resolved: bool,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_spectrum(dir: &Path, trace: &SpectrumTrace) -> Result<PathBuf, CliError> {
    let path = dir.join(SPECTRUM_CSV);
    let rows = trace
        .x
        .iter()
        .zip(&trace.signal)
        .zip(&trace.residual)
        .map(|((x, s), r)| vec![float(*x), float(*s), float(*r)]);
    write_rows(&path, &["omega_s_hz", "signal", "residual"], rows)?;
    Ok(path)
}

/// One row per fitted peak; fit-wide and photon statistics columns repeat on
/// every row.
pub fn write_peaks(
    dir: &Path,
    fit: &PeakFit,
    stats: Option<&PhotonStats>,
) -> Result<PathBuf, CliError> {
    let path = dir.join(PEAKS_CSV);
    let header = [
        "peak",
        "center_hz",
        "fwhm_hz",
        "area",
        "photon_number",
        "weight",
        "baseline",
        "rms",
        "nbar",
        "n_th",
        "t_eff_k",
        "t_eff_kind",
        "classification",
    ];
    let rows = fit.peaks.iter().enumerate().map(|(i, p)| {
        let (n, weight, nbar, n_th, t, kind, class) = match stats {
            Some(s) => {
                let n = s.assignment[i];
                (
                    n.to_string(),
                    float(s.weights[n]),
                    float(s.nbar),
                    float(s.n_th),
                    float(s.t_eff.kelvin().unwrap_or(f64::NAN)),
                    s.t_eff.to_string(),
                    s.classification.to_string(),
                )
            }
            None => (
                String::new(),
                float(f64::NAN),
                float(f64::NAN),
                float(f64::NAN),
                float(f64::NAN),
                "undefined".to_string(),
                "unassigned".to_string(),
            ),
        };
        vec![
            i.to_string(),
            float(p.center),
            float(p.fwhm),
            float(p.area),
            n,
            weight,
            float(fit.baseline),
            float(fit.rms),
            nbar,
            n_th,
            t,
            kind,
            class,
        ]
    });
    write_rows(&path, &header, rows)?;
    Ok(path)
}

/// Row-major: the probe (x) index runs fastest.
pub fn write_map(dir: &Path, map: &Map2D) -> Result<PathBuf, CliError> {
    let path = dir.join(MAP_CSV);
    let rows = map.y.iter().enumerate().flat_map(|(iy, y)| {
        map.x
            .iter()
            .enumerate()
            .map(move |(ix, x)| vec![float(*x), float(*y), float(map.at(ix, iy))])
    });
    write_rows(&path, &["omega_s_hz", "omega_d_hz", "signal"], rows)?;
    Ok(path)
}

pub fn write_splitting(dir: &Path, rows: &[SplittingRow]) -> Result<PathBuf, CliError> {
    let path = dir.join(SPLITTING_CSV);
    let header = [
        "omega_d_rabi_hz",
        "v_rf_volts",
        "gap_hz_simulated",
        "gap_hz_analytic",
        "resolved",
    ];
    let rows = rows.iter().map(|r| {
        vec![
            float(r.rabi_d_hz),
            float(r.v_rf_volts),
            float(r.gap_hz_simulated),
            float(r.gap_hz_analytic),
            r.resolved.to_string(),
        ]
    });
    write_rows(&path, &header, rows)?;
    Ok(path)
}

/// Canonical text of everything that determines a steady state, used for the
/// parameter hash.
pub fn canonical_params(params: &SystemParams, space: SpaceConfig, drive: &DriveSpec) -> String {
    let mut s = String::new();
    let fields = [
        ("omega_r", params.omega_r),
        ("omega_ge", params.omega_ge),
        ("omega_ef", params.omega_ef),
        ("g_ge", params.g_ge),
        ("g_ef", params.g_ef),
        ("chi_ge", params.chi_ge),
        ("chi_ef", params.chi_ef),
        ("chi", params.chi),
        ("lambda_ge", params.lambda_ge),
        ("lambda_ef", params.lambda_ef),
        ("zeta", params.zeta),
        ("zeta_prime", params.zeta_prime),
        ("kappa_minus", params.rates.kappa_minus),
        ("kappa_plus", params.rates.kappa_plus),
        ("gamma_minus", params.rates.gamma_minus),
        ("gamma_plus", params.rates.gamma_plus),
        ("gamma_phi", params.rates.gamma_phi),
        ("omega_s", drive.omega_s),
        ("omega_d", drive.omega_d),
        ("rabi_s", drive.rabi_s),
        ("rabi_d", drive.rabi_d),
    ];
    for (k, v) in fields {
        writeln!(s, "{k}={}", float(v)).expect("write to String");
    }
    writeln!(s, "n_fock={}\nn_qubit={}", space.n_fock, space.n_qubit).expect("write to String");
    s
}

pub fn params_hash(params: &SystemParams, space: SpaceConfig, drive: &DriveSpec) -> String {
    let digest = Sha256::digest(canonical_params(params, space, drive).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// `key = value` lines (valid TOML) describing a map's grid and inputs.
pub fn write_map_meta(
    dir: &Path,
    map: &Map2D,
    params: &SystemParams,
    space: SpaceConfig,
    drive: &DriveSpec,
) -> Result<PathBuf, CliError> {
    let path = dir.join(MAP_META);
    let mut s = String::new();
    let axis = |s: &mut String, prefix: &str, a: &Axis| {
        writeln!(s, "{prefix}_axis = \"{}\"", a.name).expect("write to String");
        writeln!(s, "{prefix}_start_hz = {}", float(a.start)).expect("write to String");
        writeln!(s, "{prefix}_stop_hz = {}", float(a.stop)).expect("write to String");
        writeln!(s, "{prefix}_count = {}", a.count).expect("write to String");
    };
    writeln!(s, "version = \"{}\"", env!("CARGO_PKG_VERSION")).expect("write to String");
    writeln!(s, "order = \"row-major, x fastest\"").expect("write to String");
    axis(&mut s, "x", &map.x_axis);
    axis(&mut s, "y", &map.y_axis);
    writeln!(s, "rabi_s_hz = {}", float(to_hz(drive.rabi_s))).expect("write to String");
    writeln!(s, "rabi_d_hz = {}", float(to_hz(drive.rabi_d))).expect("write to String");
    writeln!(s, "n_fock = {}", space.n_fock).expect("write to String");
    writeln!(
        s,
        "params_sha256 = \"{}\"",
        params_hash(params, space, drive)
    )
    .expect("write to String");
    writeln!(s, "failed_points = {}", map.failures.len()).expect("write to String");
    std::fs::write(&path, s).map_err(|e| io_error(&path, e))?;
    Ok(path)
}
