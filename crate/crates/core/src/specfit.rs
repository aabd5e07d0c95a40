//! Multi-Lorentzian fits of spectra and the photon statistics read off them.
//!
//! The model is a constant baseline plus a sum of area-normalized Lorentzians,
//!
//! ```text
//! y(x) = b + Σ_k A_k (w_k/2π) / ((x − c_k)² + (w_k/2)²)
//! ```
//!
//! with `w_k` the full width at half maximum. Fits run Levenberg-Marquardt
//! with the analytic Jacobian, in coordinates centred on the data and scaled
//! to unit span.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::units::{to_hz, BOLTZMANN, PLANCK};

pub const MAX_ITERATIONS: usize = 500;
const RESTARTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("at least one peak must be requested")]
    NoPeaks,
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points to fit {peaks} peaks, got {got}")]
    TooFewPoints {
        peaks: usize,
        needed: usize,
        got: usize,
    },
    #[error("x must be strictly increasing and finite")]
    BadAxis,
    #[error("y contains non-finite values")]
    NonFinite,
    #[error("{wanted} seed centers required, got {got}")]
    SeedCount { wanted: usize, got: usize },
    #[error("trace has only {found} local maxima, {wanted} requested")]
    TooFewExtrema { wanted: usize, found: usize },
    #[error(
        "no convergence after {iterations} iterations from {starts} starts (best rms {rms:e})"
    )]
    NoConvergence {
        iterations: usize,
        starts: usize,
        rms: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub center: f64,
    /// Full width at half maximum.
    pub fwhm: f64,
    pub area: f64,
}

impl Peak {
    pub fn height(&self) -> f64 {
        2.0 * self.area / (PI * self.fwhm)
    }

    pub fn eval(&self, x: f64) -> f64 {
        lorentzian(x, self.center, self.fwhm, self.area)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// Peaks `i` and `j` are closer than a quarter linewidth.
    Overlapping { i: usize, j: usize },
    /// Fewer than five samples across the fitted linewidth of peak `i`.
    UnderSampled { i: usize },
}

impl fmt::Display for FitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitWarning::Overlapping { i, j } => {
                write!(f, "peaks {i} and {j} overlap within a quarter linewidth")
            }
            FitWarning::UnderSampled { i } => {
                write!(f, "peak {i} has under 5 samples per linewidth")
            }
        }
    }
}

/// Result of [`fit_lorentzians`]. Peaks are sorted by center.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakFit {
    pub peaks: Vec<Peak>,
    pub baseline: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub iterations: usize,
    pub warnings: Vec<FitWarning>,
}

impl PeakFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.baseline + self.peaks.iter().map(|p| p.eval(x)).sum::<f64>()
    }

    /// Samples the fitted model on `x`.
    pub fn synthesize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.eval(v)).collect()
    }
}

/// Area-normalized Lorentzian with FWHM `w`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64, area: f64) -> f64 {
    let h = fwhm / 2.0;
    let u = x - center;
    area * (h / PI) / (u * u + h * h)
}

fn validate(x: &[f64], y: &[f64], n_peaks: usize) -> Result<(), FitError> {
    if n_peaks == 0 {
        return Err(FitError::NoPeaks);
    }
    if x.len() != y.len() {
        return Err(FitError::LengthMismatch(x.len(), y.len()));
    }
    let needed = 3 * n_peaks + 2;
    if x.len() < needed {
        return Err(FitError::TooFewPoints {
            peaks: n_peaks,
            needed,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FitError::BadAxis);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 {
        (s[m - 1] + s[m]) / 2.0
    } else {
        s[m]
    }
}

/// Indices of strict local maxima of `y`, strongest first. Plateaus count
/// once, at their left edge; endpoints are excluded.
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    out
}

/// Full width at half height above `base` around index `i`, by linear
/// interpolation; falls back to the span of the grid when a side never
/// drops below half height.
fn half_width_estimate(x: &[f64], y: &[f64], i: usize, base: f64) -> f64 {
    let half = base + (y[i] - base) / 2.0;
    let cross = |range: &mut dyn Iterator<Item = usize>, step_back: bool| -> Option<f64> {
        for j in range {
            if y[j] <= half {
                let k = if step_back { j + 1 } else { j - 1 };
                let t = (half - y[j]) / (y[k] - y[j]);
                return Some(x[j] + t * (x[k] - x[j]));
            }
        }
        None
    };
    let left = cross(&mut (0..i).rev(), true);
    let right = cross(&mut (i + 1..y.len()), false);
    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    match (left, right) {
        (Some(l), Some(r)) => (r - l).max(dx),
        (Some(l), None) => (2.0 * (x[i] - l)).max(dx),
        (None, Some(r)) => (2.0 * (r - x[i])).max(dx),
        (None, None) => (x[x.len() - 1] - x[0]) / 4.0,
    }
}

struct Problem<'a> {
    u: Vec<f64>,
    v: &'a [f64],
    n_peaks: usize,
}

impl Problem<'_> {
    // θ = [b, A_0, c_0, w_0, A_1, ...]
    fn model(&self, theta: &[f64], u: f64) -> f64 {
        let mut s = theta[0];
        for k in 0..self.n_peaks {
            let (a, c, w) = (theta[1 + 3 * k], theta[2 + 3 * k], theta[3 + 3 * k]);
            s += lorentzian(u, c, w, a);
        }
        s
    }

    fn cost(&self, theta: &[f64]) -> f64 {
        self.u
            .iter()
            .zip(self.v)
            .map(|(&u, &v)| {
                let r = self.model(theta, u) - v;
                r * r
            })
            .sum()
    }

    /// Areas are non-negative. Data occupy `u ∈ [−1, 1]`; centers may sit
    /// slightly outside and widths may not exceed twice the span.
    fn admissible(&self, theta: &[f64]) -> bool {
        theta.iter().all(|t| t.is_finite())
            && (0..self.n_peaks).all(|k| {
                let (a, c, w) = (theta[1 + 3 * k], theta[2 + 3 * k], theta[3 + 3 * k]);
                a >= 0.0 && w > 0.0 && w <= 4.0 && c.abs() <= 1.5
            })
    }

    fn jacobian(&self, theta: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let m = self.u.len();
        let p = theta.len();
        let mut jac = DMatrix::zeros(m, p);
        let mut r = DVector::zeros(m);
        for (i, &u) in self.u.iter().enumerate() {
            jac[(i, 0)] = 1.0;
            let mut s = theta[0];
            for k in 0..self.n_peaks {
                let (a, c, w) = (theta[1 + 3 * k], theta[2 + 3 * k], theta[3 + 3 * k]);
                let h = w / 2.0;
                let x = u - c;
                let den = x * x + h * h;
                s += a * (h / PI) / den;
                jac[(i, 1 + 3 * k)] = h / (PI * den);
                jac[(i, 2 + 3 * k)] = a * h / PI * 2.0 * x / (den * den);
                jac[(i, 3 + 3 * k)] = a / (2.0 * PI) * (den - 2.0 * h * h) / (den * den);
            }
            r[i] = s - self.v[i];
        }
        (jac, r)
    }

    /// Levenberg-Marquardt with Marquardt's diagonal scaling. Returns the
    /// final parameters, iteration count and whether a stopping test passed.
    fn solve(&self, mut theta: Vec<f64>) -> (Vec<f64>, usize, bool) {
        let p = theta.len();
        let mut lambda = 1e-3;
        let mut cost = self.cost(&theta);
        for iter in 1..=MAX_ITERATIONS {
            let (jac, r) = self.jacobian(&theta);
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &r;
            if g.amax() <= 1e-15 * (1.0 + cost.sqrt()) || cost == 0.0 {
                return (theta, iter, true);
            }
            loop {
                let mut a = jtj.clone();
                for d in 0..p {
                    a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
                }
                let step = match a.clone().cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => match a.lu().solve(&(-&g)) {
                        Some(s) => s,
                        None => {
                            lambda *= 10.0;
                            if lambda > 1e16 {
                                return (theta, iter, false);
                            }
                            continue;
                        }
                    },
                };
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                let trial_cost = if self.admissible(&trial) {
                    self.cost(&trial)
                } else {
                    f64::INFINITY
                };
                if trial_cost <= cost {
                    let step_norm = step.norm();
                    let theta_norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
                    let small_step = step_norm <= 1e-13 * (theta_norm + 1e-13);
                    let small_gain = cost - trial_cost <= 1e-16 * cost;
                    theta = trial;
                    cost = trial_cost;
                    lambda = (lambda / 3.0).max(1e-15);
                    if small_step || small_gain {
                        return (theta, iter, true);
                    }
                    break;
                }
                lambda *= 4.0;
                if lambda > 1e16 {
                    // no descent direction left at this precision
                    return (theta, iter, true);
                }
            }
        }
        (theta, MAX_ITERATIONS, false)
    }
}

/// Least-squares fit of a baseline plus `n_peaks` Lorentzians.
///
/// Seeds default to the `n_peaks` strongest local maxima above the median.
/// A start that fails to converge within [`MAX_ITERATIONS`] is retried from
/// up to three perturbed seeds.
pub fn fit_lorentzians(
    x: &[f64],
    y: &[f64],
    n_peaks: usize,
    seeds: Option<&[f64]>,
) -> Result<PeakFit, FitError> {
    validate(x, y, n_peaks)?;
    let x0 = (x[0] + x[x.len() - 1]) / 2.0;
    let xs = (x[x.len() - 1] - x[0]) / 2.0;
    let base = median(y);
    let y_span = y
        .iter()
        .map(|v| (v - base).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let u: Vec<f64> = x.iter().map(|v| (v - x0) / xs).collect();
    let v: Vec<f64> = y.iter().map(|w| (w - base) / y_span).collect();

    let seed_idx: Vec<usize> = match seeds {
        Some(s) => {
            if s.len() != n_peaks {
                return Err(FitError::SeedCount {
                    wanted: n_peaks,
                    got: s.len(),
                });
            }
            s.iter()
                .map(|&c| {
                    x.iter()
                        .enumerate()
                        .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
                        .map(|(i, _)| i)
                        .unwrap()
                })
                .collect()
        }
        None => {
            let maxima = local_maxima(y);
            if maxima.len() < n_peaks {
                return Err(FitError::TooFewExtrema {
                    wanted: n_peaks,
                    found: maxima.len(),
                });
            }
            maxima[..n_peaks].to_vec()
        }
    };

    let mut start = vec![0.0];
    for (k, &i) in seed_idx.iter().enumerate() {
        let w = half_width_estimate(x, y, i, base) / xs;
        let c = match seeds {
            Some(s) => (s[k] - x0) / xs,
            None => u[i],
        };
        let height = v[i].max(1e-3);
        start.extend([height * PI * w / 2.0, c, w]);
    }

    let problem = Problem { u, v: &v, n_peaks };
    let mut best: Option<(Vec<f64>, usize, f64)> = None;
    let mut total_iter = 0;
    let mut best_unconverged = f64::INFINITY;
    for attempt in 0..=RESTARTS {
        let mut s = start.clone();
        if attempt > 0 {
            // alternate shifts of ±w/4, growing with the attempt number
            for k in 0..n_peaks {
                let sign = if (k + attempt) % 2 == 0 { 1.0 } else { -1.0 };
                let w = s[3 + 3 * k];
                s[2 + 3 * k] += sign * w * 0.25 * attempt as f64;
                s[3 + 3 * k] = w * (1.0 + 0.3 * attempt as f64);
            }
        }
        let (theta, iters, converged) = problem.solve(s);
        total_iter += iters;
        let c = problem.cost(&theta);
        if converged {
            best = Some((theta, total_iter, c));
            break;
        }
        best_unconverged = best_unconverged.min(c);
    }
    let Some((theta, iterations, cost)) = best else {
        return Err(FitError::NoConvergence {
            iterations: total_iter,
            starts: RESTARTS + 1,
            rms: (best_unconverged / x.len() as f64).sqrt() * y_span,
        });
    };

    let mut peaks: Vec<Peak> = (0..n_peaks)
        .map(|k| Peak {
            area: theta[1 + 3 * k] * y_span * xs,
            center: theta[2 + 3 * k] * xs + x0,
            fwhm: theta[3 + 3 * k] * xs,
        })
        .collect();
    peaks.sort_by(|a, b| a.center.total_cmp(&b.center));

    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let mut warnings = Vec::new();
    for (i, p) in peaks.iter().enumerate() {
        if p.fwhm < 5.0 * dx {
            warnings.push(FitWarning::UnderSampled { i });
        }
    }
    for i in 0..peaks.len() {
        for j in i + 1..peaks.len() {
            let w = (peaks[i].fwhm + peaks[j].fwhm) / 2.0;
            if (peaks[j].center - peaks[i].center).abs() < w / 4.0 {
                warnings.push(FitWarning::Overlapping { i, j });
            }
        }
    }
    Ok(PeakFit {
        peaks,
        baseline: theta[0] * y_span + base,
        rms: (cost / x.len() as f64).sqrt() * y_span,
        iterations,
        warnings,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("peak at {center_hz} Hz is {offset_hz} Hz from the nearest photon-number line (limit {limit_hz} Hz)")]
    Unassignable {
        center_hz: f64,
        offset_hz: f64,
        limit_hz: f64,
    },
    #[error("peak at {center_hz} Hz maps to negative photon number {n}")]
    NegativePhotonNumber { center_hz: f64, n: i64 },
    #[error("dispersive shift must be non-zero")]
    ZeroChi,
    #[error("fit has no peaks with positive area")]
    NoWeight,
}

/// Effective temperature read off `w_1/w_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Estimate(f64),
    /// No one-photon weight resolved; the temperature is at most what the
    /// fit could detect, reported as the bound 0 K.
    LowerBound(f64),
    /// `w_0 = 0` or `w_1 ≥ w_0`.
    Undefined,
}

impl Temperature {
    pub fn kelvin(&self) -> Option<f64> {
        match *self {
            Temperature::Estimate(t) | Temperature::LowerBound(t) => Some(t),
            Temperature::Undefined => None,
        }
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temperature::Estimate(_) => f.write_str("estimate"),
            Temperature::LowerBound(_) => f.write_str("lower-bound"),
            Temperature::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Thermal,
    Coherent,
    Mixed,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Thermal => "thermal",
            Classification::Coherent => "coherent",
            Classification::Mixed => "mixed",
        })
    }
}

/// Largest `|w_n − model_n|` accepted when classifying a distribution.
pub const CLASSIFY_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStats {
    /// Normalized weights `w_n` for `n = 0..weights.len()`.
    pub weights: Vec<f64>,
    pub nbar: f64,
    /// `w_1/w_0`.
    pub n_th: f64,
    pub t_eff: Temperature,
    pub classification: Classification,
    /// Photon number assigned to each fitted peak, in fit order.
    pub assignment: Vec<usize>,
}

/// Photon-number weights from peak areas.
///
/// Each peak is assigned `n = round((c − ω̃_ge)/2χ)` and must lie within
/// `|χ|/2` of `ω̃_ge + 2χn`. Areas of peaks sharing an `n` are summed.
/// `omega_photon` is the frequency of the resonator photons entering the
/// Boltzmann factor. All frequencies are rad/s; peak centers are Hz.
pub fn photon_stats(
    fit: &PeakFit,
    chi: f64,
    omega_ge_tilde: f64,
    omega_photon: f64,
) -> Result<PhotonStats, StatsError> {
    if chi == 0.0 {
        return Err(StatsError::ZeroChi);
    }
    let two_chi = 2.0 * to_hz(chi);
    let f0 = to_hz(omega_ge_tilde);
    let limit = to_hz(chi).abs() / 2.0;
    let mut assignment = Vec::with_capacity(fit.peaks.len());
    for p in &fit.peaks {
        let n = ((p.center - f0) / two_chi).round();
        let offset = (p.center - (f0 + two_chi * n)).abs();
        if offset >= limit {
            return Err(StatsError::Unassignable {
                center_hz: p.center,
                offset_hz: offset,
                limit_hz: limit,
            });
        }
        if n < 0.0 {
            return Err(StatsError::NegativePhotonNumber {
                center_hz: p.center,
                n: n as i64,
            });
        }
        assignment.push(n as usize);
    }
    let n_max = assignment.iter().copied().max().unwrap_or(0);
    let mut weights = vec![0.0; n_max + 1];
    for (p, &n) in fit.peaks.iter().zip(&assignment) {
        weights[n] += p.area.max(0.0);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(StatsError::NoWeight);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(stats_from_weights(weights, assignment, omega_photon))
}

/// Statistics of normalized photon-number weights.
pub fn stats_from_weights(
    weights: Vec<f64>,
    assignment: Vec<usize>,
    omega_photon: f64,
) -> PhotonStats {
    let nbar: f64 = weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    let w0 = weights[0];
    let w1 = weights.get(1).copied().unwrap_or(0.0);
    let n_th = if w0 > 0.0 { w1 / w0 } else { f64::INFINITY };
    let t_eff = temperature(w0, w1, omega_photon);
    let populated = weights.iter().filter(|&&w| w > 0.0).count();
    let classification = if populated <= 2 && w0 >= w1 {
        Classification::Thermal
    } else {
        classify(&weights, nbar, n_th)
    };
    PhotonStats {
        weights,
        nbar,
        n_th,
        t_eff,
        classification,
        assignment,
    }
}

fn temperature(w0: f64, w1: f64, omega: f64) -> Temperature {
    if w0 > 0.0 && w1 == 0.0 {
        Temperature::LowerBound(0.0)
    } else if w0 > 0.0 && w1 < w0 {
        Temperature::Estimate(PLANCK * to_hz(omega) / (BOLTZMANN * (w0 / w1).ln()))
    } else {
        Temperature::Undefined
    }
}

fn classify(w: &[f64], nbar: f64, ratio: f64) -> Classification {
    let m = w.len();
    let normalize = |v: Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let dist = |model: &[f64]| {
        w.iter()
            .zip(model)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let geometric = if ratio.is_finite() && ratio < 1.0 {
        dist(&normalize((0..m).map(|n| ratio.powi(n as i32)).collect()))
    } else {
        f64::INFINITY
    };
    let mut poisson = vec![(-nbar).exp()];
    for n in 1..m {
        let prev = poisson[n - 1];
        poisson.push(prev * nbar / n as f64);
    }
    let poisson = dist(&normalize(poisson));
    match (geometric <= CLASSIFY_TOL, poisson <= CLASSIFY_TOL) {
        (true, true) if geometric <= poisson => Classification::Thermal,
        (true, false) => Classification::Thermal,
        (_, true) => Classification::Coherent,
        _ => Classification::Mixed,
    }
}
