//! The four subcommands. Each resolves its defaults, runs, writes its files
//! into the output directory and returns a short summary.

use std::path::{Path, PathBuf};

use dressed_jc::analytic::{
    at_splitting, power_from_rabi, rabi_from_power, v_rf, CalibrationParams, FourLevelEigen,
    FourLevelParams,
};
use dressed_jc::lindblad::{build_liouvillian, solve_point, SteadyState};
use dressed_jc::model::{stark_shift, DriveSpec, SystemParams};
use dressed_jc::operators::SpaceConfig;
use dressed_jc::specfit::{photon_stats, PhotonStats};
use dressed_jc::sweep::{
    extract_gap, run_sweep, Axis, CutSpec, GapError, Map2D, SpectrumTrace, SweepPlan, SweepResult,
    SweepVar,
};
use dressed_jc::units::{mhz, to_hz};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{self, SplittingRow};
use crate::CliError;

/// Probe amplitude of a thermal spectrum, weak enough not to saturate the
/// qubit line.
pub const SPECTRUM_RABI_S_HZ: f64 = 50e3;
/// Probe amplitude of two-tone maps and splitting curves.
pub const MAP_RABI_S_HZ: f64 = 0.3e6;
/// Coupler power at the device for a default map, W.
pub const MAP_COUPLER_POWER_W: f64 = 38e-18;
pub const SPECTRUM_POINTS: usize = 401;
pub const SPECTRUM_HALF_WIDTH_HZ: f64 = 15e6;
pub const MAP_POINTS: usize = 161;
pub const SPLITTING_PROBE_POINTS: usize = 161;
pub const SPLITTING_PROBE_HALF_WIDTH_HZ: f64 = 3e6;
pub const SPLITTING_COUPLER_POINTS: usize = 5;
pub const SPLITTING_COUPLER_HALF_WIDTH_HZ: f64 = 0.25e6;

/// Files written and lines for the terminal.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn probe_axis(cfg: &RunConfig, center: f64, half_width: f64, count: usize) -> Axis {
    let (start, stop) = cfg
        .sweep
        .probe
        .unwrap_or((center - half_width, center + half_width));
    Axis::new(
        SweepVar::OmegaS,
        start,
        stop,
        cfg.sweep.probe_points.unwrap_or(count),
    )
}

fn coupler_axis(cfg: &RunConfig, center: f64, half_width: f64, count: usize) -> Axis {
    let (start, stop) = cfg
        .sweep
        .coupler
        .unwrap_or((center - half_width, center + half_width));
    Axis::new(
        SweepVar::OmegaD,
        start,
        stop,
        cfg.sweep.coupler_points.unwrap_or(count),
    )
}

fn calibration(cfg: &RunConfig) -> Result<&CalibrationParams, CliError> {
    cfg.calibration
        .validate()
        .map_err(|e| CliError::Config(format!("power calibration: {e}")))?;
    Ok(&cfg.calibration)
}

fn trace_of(plan: &SweepPlan, workers: usize) -> Result<SpectrumTrace, CliError> {
    match run_sweep(plan, workers).map_err(numerical)? {
        SweepResult::Trace(t) => Ok(t),
        SweepResult::Map(_) => unreachable!("plan has one axis"),
    }
}

fn map_of(plan: &SweepPlan, workers: usize) -> Result<Map2D, CliError> {
    match run_sweep(plan, workers).map_err(numerical)? {
        SweepResult::Map(m) => Ok(m),
        SweepResult::Trace(_) => unreachable!("plan has two axes"),
    }
}

/// Probe sweep across the photon-number peaks, with a Lorentzian fit and
/// photon statistics.
pub fn spectrum(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Summary, CliError> {
    let p = &cfg.params;
    let dr = p.dressed();
    let drive = DriveSpec {
        omega_s: 0.0,
        omega_d: cfg.drive.omega_d.unwrap_or(dr.omega_r_tilde - p.chi),
        rabi_s: cfg.drive.rabi_s.unwrap_or(mhz(SPECTRUM_RABI_S_HZ / 1e6)),
        rabi_d: cfg.drive.rabi_d.unwrap_or(0.0),
    };
    let plan = SweepPlan {
        axis1: probe_axis(
            cfg,
            to_hz(dr.omega_ge_tilde),
            SPECTRUM_HALF_WIDTH_HZ,
            SPECTRUM_POINTS,
        ),
        axis2: None,
        fixed: drive,
        params: p.clone(),
        space: cfg.space,
    };
    let trace = trace_of(&plan, workers)?;
    let mut summary = Summary::default();
    summary.files.push(output::write_spectrum(out, &trace)?);
    if !trace.failures.is_empty() {
        summary.lines.push(format!(
            "{} points failed and are written as NaN",
            trace.failures.len()
        ));
    }

    let n_peaks = cfg.sweep.n_peaks.unwrap_or(2);
    let fit = trace
        .fit(n_peaks, None)
        .map_err(|e| numerical(format!("peak fit: {e}")))?;
    let stats = photon_stats(&fit, p.chi, dr.omega_ge_tilde, dr.omega_r_tilde - p.chi);
    summary
        .files
        .push(output::write_peaks(out, &fit, stats.as_ref().ok())?);
    let stats = stats.map_err(|e| numerical(format!("photon statistics: {e}")))?;

    summary.lines.push(format!(
        "{:>6} {:>16} {:>12} {:>12} {:>4}",
        "peak", "center (GHz)", "fwhm (MHz)", "weight", "n"
    ));
    for (i, pk) in fit.peaks.iter().enumerate() {
        let n = stats.assignment[i];
        summary.lines.push(format!(
            "{i:>6} {:>16.6} {:>12.4} {:>12.4} {n:>4}",
            pk.center / 1e9,
            pk.fwhm / 1e6,
            stats.weights[n]
        ));
    }
    summary.lines.extend(stats_lines(&stats));
    for w in &fit.warnings {
        summary.lines.push(format!("warning: {w}"));
    }
    Ok(summary)
}

fn stats_lines(stats: &PhotonStats) -> Vec<String> {
    let t = match stats.t_eff.kelvin() {
        Some(k) => format!("{:.1} mK ({})", k * 1e3, stats.t_eff),
        None => "undefined".to_string(),
    };
    vec![
        format!("nbar = {:.4}, n_th = w1/w0 = {:.4}", stats.nbar, stats.n_th),
        format!("T_eff = {t}, distribution {}", stats.classification),
    ]
}

/// Two-tone map over probe and coupler frequencies.
pub fn map2d(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Summary, CliError> {
    let p = &cfg.params;
    let dr = p.dressed();
    let (g0, r0) = (to_hz(dr.omega_ge_tilde), to_hz(dr.omega_r_tilde));
    let probe = match cfg.sweep.probe {
        Some(_) => probe_axis(cfg, g0, 0.0, MAP_POINTS),
        None => Axis::new(
            SweepVar::OmegaS,
            g0 - 16e6,
            g0 + 4e6,
            cfg.sweep.probe_points.unwrap_or(MAP_POINTS),
        ),
    };
    let drive = DriveSpec {
        omega_s: 0.0,
        omega_d: 0.0,
        rabi_s: cfg.drive.rabi_s.unwrap_or(mhz(MAP_RABI_S_HZ / 1e6)),
        rabi_d: match cfg.drive.rabi_d {
            Some(r) => r,
            None => rabi_from_power(MAP_COUPLER_POWER_W, calibration(cfg)?),
        },
    };
    let plan = SweepPlan {
        axis1: probe,
        axis2: Some(coupler_axis(cfg, r0, 10e6, MAP_POINTS)),
        fixed: drive,
        params: p.clone(),
        space: cfg.space,
    };
    let map = map_of(&plan, workers)?;
    let mut summary = Summary::default();
    summary.files.push(output::write_map(out, &map)?);
    summary
        .files
        .push(output::write_map_meta(out, &map, p, cfg.space, &drive)?);
    summary.lines.push(format!(
        "{} x {} grid, Ω_s/2π = {:.3} MHz, Ω_d/2π = {:.3} MHz, {} failed points",
        map.x.len(),
        map.y.len(),
        to_hz(drive.rabi_s) / 1e6,
        to_hz(drive.rabi_d) / 1e6,
        map.failures.len()
    ));
    Ok(summary)
}

/// Splitting of the thermal one-photon line against coupler amplitude.
pub fn splitting_curve(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Summary, CliError> {
    let p = &cfg.params;
    let dr = p.dressed();
    let omega_d = cfg.drive.omega_d.unwrap_or(dr.omega_r_tilde + p.chi);
    let rabi_s = cfg.drive.rabi_s.unwrap_or(mhz(MAP_RABI_S_HZ / 1e6));
    let cal = calibration(cfg)?;
    let amplitudes = cfg
        .sweep
        .amplitudes
        .clone()
        .unwrap_or_else(|| (0..12).map(|k| mhz(0.4 + 0.1 * k as f64)).collect());
    let probe = probe_axis(
        cfg,
        to_hz(dr.omega_ge_tilde + 2.0 * p.chi),
        SPLITTING_PROBE_HALF_WIDTH_HZ,
        SPLITTING_PROBE_POINTS,
    );
    let coupler = coupler_axis(
        cfg,
        to_hz(omega_d),
        SPLITTING_COUPLER_HALF_WIDTH_HZ,
        SPLITTING_COUPLER_POINTS,
    );
    let cut = CutSpec {
        y: to_hz(omega_d),
        window: None,
    };

    let mut rows = Vec::with_capacity(amplitudes.len());
    let mut summary = Summary::default();
    summary.lines.push(format!(
        "{:>12} {:>12} {:>14} {:>14}",
        "Ω_d (MHz)", "V_rf (V)", "gap sim (MHz)", "gap model (MHz)"
    ));
    for &rabi_d in &amplitudes {
        let plan = SweepPlan {
            axis1: probe,
            axis2: Some(coupler),
            fixed: DriveSpec {
                omega_s: 0.0,
                omega_d: 0.0,
                rabi_s,
                rabi_d,
            },
            params: p.clone(),
            space: cfg.space,
        };
        let map = map_of(&plan, workers)?;
        let (gap, resolved) = match extract_gap(&map, &cut) {
            Ok(g) => (g.gap, true),
            Err(GapError::Unresolved { .. }) => (f64::NAN, false),
            Err(e) => {
                return Err(numerical(format!(
                    "gap at Ω_d/2π = {} Hz: {e}",
                    to_hz(rabi_d)
                )))
            }
        };
        let row = SplittingRow {
            rabi_d_hz: to_hz(rabi_d),
            v_rf_volts: v_rf(power_from_rabi(rabi_d, cal)),
            gap_hz_simulated: gap,
            gap_hz_analytic: to_hz(at_splitting(rabi_s, rabi_d)),
            resolved,
        };
        summary.lines.push(format!(
            "{:>12.3} {:>12.3e} {:>14} {:>14.4}",
            row.rabi_d_hz / 1e6,
            row.v_rf_volts,
            if resolved {
                format!("{:.4}", gap / 1e6)
            } else {
                "unresolved".to_string()
            },
            row.gap_hz_analytic / 1e6
        ));
        rows.push(row);
    }
    summary.files.push(output::write_splitting(out, &rows)?);
    Ok(summary)
}

/// One invariant check of a validation report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl Check {
    fn bound(name: &'static str, value: f64, limit: f64, detail: String) -> Self {
        Self {
            name,
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
            detail,
        }
    }

    fn failed(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: false,
            value: None,
            limit: None,
            detail,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub n_fock: usize,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

/// Drive used by the structural checks: the configured drive, or a weak
/// probe on the qubit line with the coupler off.
fn validation_drive(cfg: &RunConfig) -> DriveSpec {
    let dr = cfg.params.dressed();
    DriveSpec {
        omega_s: cfg.drive.omega_s.unwrap_or(dr.omega_ge_tilde),
        omega_d: cfg
            .drive
            .omega_d
            .unwrap_or(dr.omega_r_tilde - cfg.params.chi),
        rabi_s: cfg.drive.rabi_s.unwrap_or(mhz(MAP_RABI_S_HZ / 1e6)),
        rabi_d: cfg.drive.rabi_d.unwrap_or(0.0),
    }
}

pub fn validate(cfg: &RunConfig, out: &Path) -> Result<(Report, PathBuf), CliError> {
    let p = &cfg.params;
    let drive = validation_drive(cfg);
    let checks = vec![
        detailed_balance(p, cfg.space),
        exact_vs_dispersive(p),
        trace_preservation(p, &drive, cfg.space),
        steady_state_check(p, &drive, cfg.space),
        truncation(p, &drive, cfg.space),
        four_level(p),
    ];
    let report = Report {
        passed: checks.iter().all(|c| c.passed),
        n_fock: cfg.space.n_fock,
        warnings: cfg.warnings.iter().map(|w| w.to_string()).collect(),
        checks,
    };
    let path = out.join(output::VALIDATION_JSON);
    let text =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
    std::fs::write(&path, text + "\n")
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    Ok((report, path))
}

fn detailed_balance(p: &SystemParams, space: SpaceConfig) -> Check {
    const NAME: &str = "detailed_balance";
    let dr = p.dressed();
    let idle = DriveSpec {
        omega_s: dr.omega_ge_tilde,
        omega_d: dr.omega_r_tilde,
        rabi_s: 0.0,
        rabi_d: 0.0,
    };
    let ss = match solve_point(p, &idle, space) {
        Ok(ss) => ss,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let r = &p.rates;
    let mut worst: f64 = 0.0;
    if r.kappa_minus > 0.0 {
        let dist = ss.photon_distribution();
        let ratio = r.kappa_plus / r.kappa_minus;
        for n in 0..(space.n_fock - 1).min(7) {
            if dist[n] > 0.0 {
                worst = worst.max((dist[n + 1] / dist[n] - ratio).abs());
            }
        }
    }
    if r.gamma_minus > 0.0 {
        let (pg, pe) = ss.qubit_populations();
        worst = worst.max((pe / pg - r.gamma_plus / r.gamma_minus).abs());
    }
    Check::bound(
        NAME,
        worst,
        1e-8,
        "undriven p_{n+1}/p_n and p_e/p_g against the rate ratios".into(),
    )
}

fn exact_vs_dispersive(p: &SystemParams) -> Check {
    const NAME: &str = "exact_vs_dispersive";
    match stark_shift(p, 11) {
        Ok(s) => {
            let rel = (s.per_photon / (2.0 * p.chi) - 1.0).abs();
            Check::bound(
                NAME,
                rel,
                0.10,
                format!(
                    "per-photon Stark shift {:.4} MHz against 2χ = {:.4} MHz",
                    to_hz(s.per_photon) / 1e6,
                    to_hz(2.0 * p.chi) / 1e6
                ),
            )
        }
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

fn trace_preservation(p: &SystemParams, drive: &DriveSpec, space: SpaceConfig) -> Check {
    const NAME: &str = "trace_preservation";
    match build_liouvillian(p, drive, space) {
        Ok(l) => Check::bound(
            NAME,
            l.trace_defect() / l.norm_inf(),
            1e-12,
            "largest column sum of the trace functional, relative to the generator norm".into(),
        ),
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

fn steady_state_check(p: &SystemParams, drive: &DriveSpec, space: SpaceConfig) -> Check {
    const NAME: &str = "steady_state";
    match solve_point(p, drive, space) {
        Ok(ss) => Check::bound(
            NAME,
            ss.residual_norm,
            dressed_jc::lindblad::RESIDUAL_TOL,
            format!(
                "{} solve; hermiticity {:.1e}, smallest eigenvalue {:.1e}",
                ss.solver, ss.hermiticity_error, ss.min_eigenvalue
            ),
        ),
        Err(e) => Check::failed(NAME, e.to_string()),
    }
}

fn truncation(p: &SystemParams, drive: &DriveSpec, space: SpaceConfig) -> Check {
    const NAME: &str = "truncation";
    let larger = match SpaceConfig::new(space.n_fock + 4, space.n_qubit) {
        Ok(s) => s,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let solve = |s| solve_point(p, drive, s).map(|ss: SteadyState| ss.qubit_state());
    match (solve(space), solve(larger)) {
        (Ok(a), Ok(b)) => Check::bound(
            NAME,
            (a - b).camax(),
            1e-8,
            format!(
                "qubit state change from n_fock {} to {}",
                space.n_fock, larger.n_fock
            ),
        ),
        (Err(e), _) | (_, Err(e)) => Check::failed(NAME, e.to_string()),
    }
}

fn four_level(p: &SystemParams) -> Check {
    let (rs, rd) = (mhz(0.3), mhz(1.0));
    let gap = FourLevelEigen::new(&FourLevelParams::double_resonance(p.chi, rs, rd)).pair_gap();
    let want = at_splitting(rs, rd);
    Check::bound(
        "four_level_oracle",
        (gap / want - 1.0).abs(),
        1e-12,
        "dressed-pair gap at double resonance against the closed form".into(),
    )
}
