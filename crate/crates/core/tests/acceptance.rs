//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use dressed_jc::analytic::{
    at_splitting, power_from_rabi, rabi_from_power, sideband_detuning, sideband_probe_frequency,
    v_rf, CalibrationParams, FourLevelEigen, FourLevelParams,
};
use dressed_jc::lindblad::{build_liouvillian, solve_point, HERMITICITY_TOL, POSITIVITY_TOL};
use dressed_jc::model::{derive_params, stark_shift, DeviceInputs, DriveSpec, Rates, SystemParams};
use dressed_jc::operators::SpaceConfig;
use dressed_jc::specfit::{fit_lorentzians, photon_stats, Peak, PeakFit};
use dressed_jc::sweep::{
    extract_gap, gap_from_trace, run_sweep, Axis, CutSpec, Map2D, SpectrumTrace, SweepPlan,
    SweepResult, SweepVar,
};
use dressed_jc::units::{hz, mhz, to_hz};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;

/// Probe strength for the thermal spectrum: weak enough that the qubit
/// transition is not saturated.
const THERMAL_PROBE: f64 = 0.05;
/// Probe strength of the two-tone maps, MHz.
const MAP_PROBE: f64 = 0.3;
/// Coupler power of the sideband map, W at the device.
const SIDEBAND_POWER: f64 = 38e-18;
/// Coupler strength used to populate the second sideband, MHz.
const SECOND_SIDEBAND_RABI: f64 = 1.0;

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("thermal spectrum", thermal_spectrum),
        ("autler-townes splitting law", at_law),
        ("autler-townes linearity", at_linearity),
        ("four-level oracle", four_level_oracle),
        ("detailed balance", detailed_balance),
        ("exact vs dispersive", exact_vs_dispersive),
        ("liouvillian structure", liouvillian_structure),
        ("sideband geometry", sideband_geometry),
        ("fit round trip", fit_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn device() -> SystemParams {
    SystemParams::paper_device()
}

fn trace(plan: &SweepPlan) -> Result<SpectrumTrace, String> {
    match run_sweep(plan, 0).map_err(|e| e.to_string())? {
        SweepResult::Trace(t) => Ok(t),
        SweepResult::Map(_) => Err("expected a trace".into()),
    }
}

fn map(plan: &SweepPlan) -> Result<Map2D, String> {
    match run_sweep(plan, 0).map_err(|e| e.to_string())? {
        SweepResult::Map(m) => Ok(m),
        SweepResult::Trace(_) => Err("expected a map".into()),
    }
}

fn probe_only(p: &SystemParams, rabi_s: f64) -> DriveSpec {
    DriveSpec {
        omega_s: 0.0,
        omega_d: p.dressed().omega_r_tilde,
        rabi_s,
        rabi_d: 0.0,
    }
}

fn thermal_spectrum() -> Outcome {
    let p = device();
    let dr = p.dressed();
    let plan = SweepPlan {
        axis1: Axis::centered(SweepVar::OmegaS, to_hz(dr.omega_ge_tilde), 15e6, 401),
        axis2: None,
        fixed: probe_only(&p, mhz(THERMAL_PROBE)),
        params: p.clone(),
        space: SpaceConfig::standard(),
    };
    let t = trace(&plan)?;
    let fit = t.fit(2, None).map_err(|e| e.to_string())?;
    let sep = (fit.peaks[1].center - fit.peaks[0].center).abs();
    let stats = photon_stats(&fit, p.chi, dr.omega_ge_tilde, dr.omega_r_tilde - p.chi)
        .map_err(|e| e.to_string())?;
    let t_mk = stats.t_eff.kelvin().map_or(f64::NAN, |k| k * 1e3);
    let detail = format!(
        "separation {:.3} MHz (9.3 ± 0.2), w1/w0 {:.4} (0.111 ± 0.01), T_eff {:.1} mK (120 ± 10)",
        sep / 1e6,
        stats.n_th,
        t_mk
    );
    let ok = (sep - 9.3e6).abs() <= 0.2e6
        && (stats.n_th - 0.111).abs() <= 0.01
        && (t_mk - 120.0).abs() <= 10.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Map around the thermal n = 1 line with the coupler on the qubit-excited
/// resonator frequency.
fn at_map(p: &SystemParams, rabi_d: f64) -> SweepPlan {
    let dr = p.dressed();
    SweepPlan {
        axis1: Axis::centered(
            SweepVar::OmegaS,
            to_hz(dr.omega_ge_tilde + 2.0 * p.chi),
            3e6,
            161,
        ),
        axis2: Some(Axis::centered(
            SweepVar::OmegaD,
            to_hz(dr.omega_r_tilde + p.chi),
            2e6,
            21,
        )),
        fixed: DriveSpec {
            omega_s: 0.0,
            omega_d: 0.0,
            rabi_s: mhz(MAP_PROBE),
            rabi_d,
        },
        params: p.clone(),
        space: SpaceConfig::standard(),
    }
}

fn at_law() -> Outcome {
    let p = device();
    let mut ok = true;
    let mut parts = Vec::new();
    for rd in [0.6, 1.0, 1.3] {
        let m = map(&at_map(&p, mhz(rd)))?;
        let want = to_hz(at_splitting(mhz(MAP_PROBE), mhz(rd)));
        match extract_gap(&m, &CutSpec::resonant(&p)) {
            Ok(g) => {
                let rel = g.gap / want - 1.0;
                ok &= rel.abs() <= 0.10;
                parts.push(format!(
                    "Ω_d {rd} MHz: gap {:.3} vs {:.3} MHz ({:+.1}%)",
                    g.gap / 1e6,
                    want / 1e6,
                    rel * 100.0
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("Ω_d {rd} MHz: {e}"));
            }
        }
    }
    let detail = format!("{} (tolerance 10%)", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn at_linearity() -> Outcome {
    let p = device();
    let dr = p.dressed();
    let cal = CalibrationParams::paper_device();
    let mut pts = Vec::new();
    for k in 0..12 {
        let rd = mhz(0.4 + 0.1 * k as f64);
        let plan = SweepPlan {
            axis1: Axis::centered(
                SweepVar::OmegaS,
                to_hz(dr.omega_ge_tilde + 2.0 * p.chi),
                3e6,
                161,
            ),
            axis2: None,
            fixed: DriveSpec {
                omega_s: 0.0,
                omega_d: dr.omega_r_tilde + p.chi,
                rabi_s: mhz(MAP_PROBE),
                rabi_d: rd,
            },
            params: p.clone(),
            space: SpaceConfig::standard(),
        };
        let t = trace(&plan)?;
        if let Ok(g) = gap_from_trace(&t.x, &t.signal) {
            pts.push((v_rf(power_from_rabi(rd, &cal)), g.gap));
        }
    }
    if pts.len() < 3 {
        return Err(format!("only {} resolved points", pts.len()));
    }
    let r2 = r_squared(&pts);
    let detail = format!("R² {r2:.5} over {} resolved points (> 0.99)", pts.len());
    if r2 > 0.99 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn r_squared(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn runner(seed: u8) -> TestRunner {
    TestRunner::new_with_rng(
        Config::default(),
        TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]),
    )
}

fn draw<S: Strategy>(runner: &mut TestRunner, s: &S) -> S::Value {
    s.new_tree(runner).expect("strategy").current()
}

fn four_level_oracle() -> Outcome {
    let mut r = runner(1);
    let strategy = (0.1..2.0f64, 0.1..2.0f64, 1.0..10.0f64, proptest::bool::ANY);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (rs, rd, chi, negative) = draw(&mut r, &strategy);
        let chi = if negative { -mhz(chi) } else { mhz(chi) };
        let params = FourLevelParams::double_resonance(chi, mhz(rs), mhz(rd));
        let gap = FourLevelEigen::new(&params).pair_gap();
        let want = at_splitting(mhz(rs), mhz(rd));
        worst = worst.max((gap / want - 1.0).abs());
    }
    let detail = format!("worst relative error {worst:.2e} over 1000 draws (≤ 1e-12)");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn detailed_balance() -> Outcome {
    let mut r = runner(2);
    let strategy = (0.01..0.5f64, 0.01..0.5f64, 0.2..5.0f64, 0.2..5.0f64);
    let mut worst: f64 = 0.0;
    for _ in 0..32 {
        let (kr, gr, ks, gs) = draw(&mut r, &strategy);
        let mut p = device();
        p.rates = Rates {
            kappa_minus: p.rates.kappa_minus * ks,
            kappa_plus: p.rates.kappa_minus * ks * kr,
            gamma_minus: p.rates.gamma_minus * gs,
            gamma_plus: p.rates.gamma_minus * gs * gr,
            gamma_phi: p.rates.gamma_phi,
        };
        let drive = DriveSpec {
            omega_s: p.dressed().omega_ge_tilde,
            omega_d: p.dressed().omega_r_tilde,
            rabi_s: 0.0,
            rabi_d: 0.0,
        };
        let ss = solve_point(&p, &drive, SpaceConfig::standard()).map_err(|e| e.to_string())?;
        let dist = ss.photon_distribution();
        for n in 0..=6 {
            worst = worst.max((dist[n + 1] / dist[n] - kr).abs());
        }
        let (pg, pe) = ss.qubit_populations();
        worst = worst.max((pe / pg - gr).abs());
    }
    let detail = format!("worst ratio error {worst:.2e} over 32 rate draws (≤ 1e-8)");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exact_vs_dispersive() -> Outcome {
    let p = derive_params(&DeviceInputs::paper_device())
        .map_err(|e| e.to_string())?
        .params;
    let s = stark_shift(&p, 11).map_err(|e| e.to_string())?;
    let rel = (s.per_photon / (2.0 * p.chi) - 1.0).abs();
    let detail = format!(
        "per-photon shift {:.3} MHz vs 2χ {:.3} MHz ({:.1}%, ≤ 10%)",
        to_hz(s.per_photon) / 1e6,
        to_hz(2.0 * p.chi) / 1e6,
        rel * 100.0
    );
    if rel <= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Drive points used by the criteria above, for the structural checks.
fn scenarios() -> Vec<(String, DriveSpec)> {
    let p = device();
    let dr = p.dressed();
    let mut out = Vec::new();
    for off in [0.0, 1.0, 2.0] {
        let mut d = probe_only(&p, mhz(THERMAL_PROBE));
        d.omega_s = dr.omega_ge_tilde + off * p.chi;
        out.push((format!("thermal probe at ω̃_ge + {off}χ"), d));
    }
    for rd in [0.6, 1.0, 1.3] {
        for off in [-1.0, 0.0, 1.0] {
            out.push((
                format!("splitting Ω_d {rd} MHz, probe {off:+} MHz"),
                DriveSpec {
                    omega_s: dr.omega_ge_tilde + 2.0 * p.chi + mhz(off),
                    omega_d: dr.omega_r_tilde + p.chi,
                    rabi_s: mhz(MAP_PROBE),
                    rabi_d: mhz(rd),
                },
            ));
        }
    }
    let cal = CalibrationParams::paper_device();
    for (n, rd) in [
        (1, rabi_from_power(SIDEBAND_POWER, &cal)),
        (2, mhz(SECOND_SIDEBAND_RABI)),
    ] {
        for dd in [-2.0, 2.0] {
            let omega_d = dr.omega_r_tilde + mhz(dd);
            out.push((
                format!("sideband {n}, coupler {dd:+} MHz"),
                DriveSpec {
                    omega_s: sideband_probe_frequency(n, omega_d, &p),
                    omega_d,
                    rabi_s: mhz(MAP_PROBE),
                    rabi_d: rd,
                },
            ));
        }
    }
    out
}

fn liouvillian_structure() -> Outcome {
    let p = device();
    let (small, large) = (
        SpaceConfig::standard(),
        SpaceConfig::new(14, 2).expect("space"),
    );
    let (mut defect, mut defect_abs): (f64, f64) = (0.0, 0.0);
    let mut herm: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let (mut drift, mut worst) = (0.0, String::new());
    let all = scenarios();
    for (name, d) in &all {
        for space in [small, large] {
            let l = build_liouvillian(&p, d, space).map_err(|e| e.to_string())?;
            defect_abs = defect_abs.max(l.trace_defect());
            defect = defect.max(l.trace_defect() / l.norm_inf());
        }
        let a = solve_point(&p, d, small).map_err(|e| e.to_string())?;
        let b = solve_point(&p, d, large).map_err(|e| e.to_string())?;
        for s in [&a, &b] {
            herm = herm.max(s.hermiticity_error);
            min_eig = min_eig.min(s.min_eigenvalue);
        }
        let change = (a.qubit_state() - b.qubit_state()).camax();
        if change > drift {
            drift = change;
            worst = name.clone();
        }
    }
    let detail = format!(
        "{} scenarios: trace defect {defect:.1e} of ‖L‖∞ ({defect_abs:.1e} s⁻¹) (< 1e-12), \
         hermiticity {herm:.1e} (≤ {HERMITICITY_TOL:.0e}), min eigenvalue {min_eig:.1e} (≥ {POSITIVITY_TOL:.0e}), \
         n_fock 10→14 drift {drift:.1e} at {worst} (< 1e-8)",
        all.len()
    );
    let ok = defect < 1e-12 && herm <= HERMITICITY_TOL && min_eig >= POSITIVITY_TOL && drift < 1e-8;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sideband_plan(p: &SystemParams, rabi_d: f64) -> SweepPlan {
    let dr = p.dressed();
    let (g0, r0) = (to_hz(dr.omega_ge_tilde), to_hz(dr.omega_r_tilde));
    SweepPlan {
        axis1: Axis::new(SweepVar::OmegaS, g0 - 16e6, g0 + 4e6, 81),
        axis2: Some(Axis::new(SweepVar::OmegaD, r0 - 10e6, r0 + 10e6, 81)),
        fixed: DriveSpec {
            omega_s: 0.0,
            omega_d: 0.0,
            rabi_s: mhz(MAP_PROBE),
            rabi_d,
        },
        params: p.clone(),
        space: SpaceConfig::standard(),
    }
}

fn sideband_geometry() -> Outcome {
    let p = device();
    let dr = p.dressed();
    let g0 = to_hz(dr.omega_ge_tilde);
    let two_chi = 2.0 * to_hz(p.chi);
    let half = 1.5e6;
    let bands = [
        (g0 - half, g0 + half),
        (g0 + two_chi - half, g0 + two_chi + half),
    ];
    let near_band = |x: f64, margin: f64| [g0, g0 + two_chi].iter().any(|b| (x - b).abs() < margin);

    // slope −1: ridge position against the first sideband line
    let cal = CalibrationParams::paper_device();
    let m = map(&sideband_plan(&p, rabi_from_power(SIDEBAND_POWER, &cal)))?;
    let cell = m.x[1] - m.x[0];
    let (lo, hi) = (m.x[0], m.x[m.x.len() - 1]);
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    for (x, y) in m.ridge_outside(&bands) {
        let predicted = to_hz(sideband_probe_frequency(1, hz(y), &p));
        if predicted < lo || predicted > hi || near_band(predicted, 2.0e6) {
            continue;
        }
        rows += 1;
        let d = DriveSpec {
            omega_s: hz(x),
            omega_d: hz(y),
            rabi_s: 0.0,
            rabi_d: 0.0,
        }
        .detunings(&dr);
        let miss = to_hz(sideband_detuning(1, d.delta_s, d.delta_d, p.chi)).abs() / cell;
        worst = worst.max(miss);
    }
    let first_ok = rows >= 10 && worst <= 1.0;

    // slope −1/2: local maxima next to the second sideband line
    let m = map(&sideband_plan(&p, mhz(SECOND_SIDEBAND_RABI)))?;
    let medians: Vec<f64> = (0..m.x.len())
        .map(|ix| {
            let mut c = m.column(ix);
            c.sort_by(f64::total_cmp);
            c[c.len() / 2]
        })
        .collect();
    let mut eligible = 0;
    let mut found = Vec::new();
    for (iy, &y) in m.y.iter().enumerate() {
        let predicted = to_hz(sideband_probe_frequency(2, hz(y), &p));
        let first = to_hz(sideband_probe_frequency(1, hz(y), &p));
        if predicted < lo + 1e6
            || predicted > hi - 1e6
            || near_band(predicted, 2e6)
            || (predicted - first).abs() < 2e6
        {
            continue;
        }
        eligible += 1;
        let r: Vec<f64> = m.row(iy).iter().zip(&medians).map(|(v, c)| v - c).collect();
        let peak = (1..r.len() - 1)
            .filter(|&ix| {
                (m.x[ix] - predicted).abs() <= 1e6 && r[ix] > r[ix - 1] && r[ix] >= r[ix + 1]
            })
            .max_by(|&a, &b| r[a].total_cmp(&r[b]));
        if let Some(ix) = peak {
            found.push((m.x[ix], y));
        }
    }
    let slope = fitted_slope(&found);
    let second_ok =
        eligible > 0 && found.len() as f64 >= 0.8 * eligible as f64 && (slope + 0.5).abs() <= 0.05;

    let detail = format!(
        "slope −1 ridge within {worst:.2} cells over {rows} rows (≤ 1); \
         slope −1/2 ridge found in {}/{eligible} rows with slope {slope:.3} (−0.5 ± 0.05)",
        found.len()
    );
    if first_ok && second_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Least-squares `dy/dx` through `(x, y)` points.
fn fitted_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn fit_round_trip() -> Outcome {
    let mut r = runner(3);
    let strategy = (
        (-6.0..-1.0f64, 1.0..6.0f64),
        (0.3..1.5f64, 0.3..1.5f64),
        (0.2..3.0f64, 0.2..3.0f64),
        -1.0..1.0f64,
    );
    let x: Vec<f64> = (0..481).map(|i| -12.0 + 0.05 * i as f64).collect();
    let (mut area_err, mut center_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let ((c1, c2), (w1, w2), (a1, a2), b) = draw(&mut r, &strategy);
        let truth = PeakFit {
            peaks: vec![
                Peak {
                    center: c1,
                    fwhm: w1,
                    area: a1,
                },
                Peak {
                    center: c2,
                    fwhm: w2,
                    area: a2,
                },
            ],
            baseline: b,
            rms: 0.0,
            iterations: 0,
            warnings: vec![],
        };
        let fit = fit_lorentzians(&x, &truth.synthesize(&x), 2, None).map_err(|e| e.to_string())?;
        for (got, want) in fit.peaks.iter().zip(&truth.peaks) {
            area_err = area_err.max((got.area / want.area - 1.0).abs());
            center_err = center_err.max((got.center - want.center).abs() / want.fwhm);
        }
    }
    let detail = format!(
        "100 cases: worst area error {:.2e} (≤ 2%), worst center error {:.2e} linewidths (≤ 1%)",
        area_err, center_err
    );
    if area_err <= 0.02 && center_err <= 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
