//! Drive-frequency sweeps of the steady-state readout signal `Tr[ρσz]`.
//!
//! Every grid point is an independent steady-state solve. Results land in
//! pre-allocated slots indexed by grid position, so the output does not
//! depend on how points are scheduled across workers.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::lindblad::solve_point;
use crate::model::{DriveSpec, ModelError, SystemParams};
use crate::operators::SpaceConfig;
use crate::specfit::{fit_lorentzians, local_maxima, FitError, PeakFit};
use crate::units::{hz, to_hz};

/// Largest tolerated fraction of failed grid points.
pub const MAX_FAILED_FRACTION: f64 = 0.01;
/// Local maxima below this fraction of the strongest one are ignored by
/// [`gap_from_trace`].
pub const MIN_PROMINENCE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("axis {name} needs at least 2 points, got {count}")]
    TooFewPoints { name: SweepVar, count: usize },
    #[error("axis {name} must have start < stop, got {start} .. {stop}")]
    BadRange {
        name: SweepVar,
        start: f64,
        stop: f64,
    },
    #[error("both axes sweep {0}")]
    DuplicateAxis(SweepVar),
    #[error("{failed} of {total} points failed (first: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Swept drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVar {
    /// Probe frequency `ω_s`.
    OmegaS,
    /// Coupler frequency `ω_d`.
    OmegaD,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::OmegaS => "omega_s",
            SweepVar::OmegaD => "omega_d",
        })
    }
}

/// Evenly spaced axis in Hz, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: SweepVar, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            start,
            stop,
            count,
        }
    }

    /// `count` points spanning `center ± half_width`.
    pub fn centered(name: SweepVar, center: f64, half_width: f64, count: usize) -> Self {
        Self::new(name, center - half_width, center + half_width, count)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.count < 2 {
            return Err(SweepError::TooFewPoints {
                name: self.name,
                count: self.count,
            });
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(SweepError::BadRange {
                name: self.name,
                start: self.start,
                stop: self.stop,
            });
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.stop
        } else {
            self.start + self.step() * i as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Fast axis; the x axis of a map.
    pub axis1: Axis,
    /// Slow axis; the y axis (rows) of a map.
    pub axis2: Option<Axis>,
    /// Drive values for whatever is not swept, rad/s.
    pub fixed: DriveSpec,
    pub params: SystemParams,
    pub space: SpaceConfig,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), SweepError> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.name == self.axis1.name {
                return Err(SweepError::DuplicateAxis(a2.name));
            }
        }
        self.fixed.validate()?;
        self.params.rates.validate()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axis1.count * self.axis2.map_or(1, |a| a.count)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drive for flat point index `k = i2 · count1 + i1`.
    pub fn drive_at(&self, k: usize) -> DriveSpec {
        let n1 = self.axis1.count;
        let mut d = self.fixed;
        let mut set = |axis: &Axis, i: usize| {
            let w = hz(axis.value(i));
            match axis.name {
                SweepVar::OmegaS => d.omega_s = w,
                SweepVar::OmegaD => d.omega_d = w,
            }
        };
        set(&self.axis1, k % n1);
        if let Some(a2) = &self.axis2 {
            set(a2, k / n1);
        }
        d
    }
}

/// A grid point whose steady-state solve failed.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTrace {
    pub axis: Axis,
    /// Grid, Hz.
    pub x: Vec<f64>,
    /// `Tr[ρσz]`, `NaN` at failed points.
    pub signal: Vec<f64>,
    pub residual: Vec<f64>,
    pub failures: Vec<PointFailure>,
}

impl SpectrumTrace {
    pub fn fit(&self, n_peaks: usize, seeds: Option<&[f64]>) -> Result<PeakFit, FitError> {
        let (x, y) = finite_points(&self.x, &self.signal);
        fit_lorentzians(&x, &y, n_peaks, seeds)
    }
}

fn finite_points(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(y)
        .filter(|(_, v)| v.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip()
}

/// Row-major map: `signal[iy · x.len() + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Map2D {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub signal: Vec<f64>,
    pub residual: Vec<f64>,
    pub failures: Vec<PointFailure>,
}

impl Map2D {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.signal[iy * self.x.len() + ix]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        let n = self.x.len();
        &self.signal[iy * n..(iy + 1) * n]
    }

    pub fn column(&self, ix: usize) -> Vec<f64> {
        (0..self.y.len()).map(|iy| self.at(ix, iy)).collect()
    }

    /// Row index whose y value is closest to `y_hz`.
    pub fn nearest_row(&self, y_hz: f64) -> usize {
        nearest(&self.y, y_hz)
    }

    pub fn row_trace(&self, iy: usize) -> SpectrumTrace {
        let n = self.x.len();
        SpectrumTrace {
            axis: self.x_axis,
            x: self.x.clone(),
            signal: self.row(iy).to_vec(),
            residual: self.residual[iy * n..(iy + 1) * n].to_vec(),
            failures: Vec::new(),
        }
    }

    /// For each row, the x position of the strongest response after each
    /// column's median over rows has been removed. Subtracting the column
    /// median suppresses features that do not move with y (vertical bands),
    /// leaving sloped ones.
    pub fn ridge(&self) -> Vec<(f64, f64)> {
        self.ridge_outside(&[])
    }

    /// [`ridge`](Self::ridge) restricted to columns outside every `(lo, hi)`
    /// interval of `exclude` (Hz). Rows with no admissible column are skipped.
    pub fn ridge_outside(&self, exclude: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let nx = self.x.len();
        let medians: Vec<f64> = (0..nx)
            .map(|ix| {
                let mut c: Vec<f64> = self
                    .column(ix)
                    .into_iter()
                    .filter(|v| v.is_finite())
                    .collect();
                if c.is_empty() {
                    return f64::NAN;
                }
                c.sort_by(f64::total_cmp);
                c[c.len() / 2]
            })
            .collect();
        (0..self.y.len())
            .filter_map(|iy| {
                self.row(iy)
                    .iter()
                    .zip(&medians)
                    .enumerate()
                    .filter(|(ix, (v, m))| {
                        let x = self.x[*ix];
                        v.is_finite()
                            && m.is_finite()
                            && !exclude.iter().any(|&(lo, hi)| x >= lo && x <= hi)
                    })
                    .max_by(|a, b| (a.1 .0 - a.1 .1).total_cmp(&(b.1 .0 - b.1 .1)))
                    .map(|(ix, _)| (self.x[ix], self.y[iy]))
            })
            .collect()
    }
}

fn nearest(v: &[f64], target: f64) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i)
        .expect("non-empty axis")
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepResult {
    Trace(SpectrumTrace),
    Map(Map2D),
}

impl SweepResult {
    pub fn failures(&self) -> &[PointFailure] {
        match self {
            SweepResult::Trace(t) => &t.failures,
            SweepResult::Map(m) => &m.failures,
        }
    }
}

/// Solves every grid point of `plan` on `workers` threads (0 picks the
/// machine's parallelism).
pub fn run_sweep(plan: &SweepPlan, workers: usize) -> Result<SweepResult, SweepError> {
    plan.validate()?;
    let n = plan.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let mut slots: Vec<Result<(f64, f64), String>> = Vec::with_capacity(n);
    pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|k| {
                solve_point(&plan.params, &plan.drive_at(k), plan.space)
                    .map(|ss| (ss.sigma_z(), ss.residual_norm))
                    .map_err(|e| e.to_string())
            })
            .collect_into_vec(&mut slots);
    });

    let mut signal = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut failures = Vec::new();
    for (index, slot) in slots.into_iter().enumerate() {
        match slot {
            Ok((s, r)) => {
                signal.push(s);
                residual.push(r);
            }
            Err(message) => {
                signal.push(f64::NAN);
                residual.push(f64::NAN);
                failures.push(PointFailure { index, message });
            }
        }
    }
    if failures.len() as f64 > MAX_FAILED_FRACTION * n as f64 {
        return Err(SweepError::TooManyFailures {
            failed: failures.len(),
            total: n,
            first: failures[0].message.clone(),
        });
    }
    Ok(match plan.axis2 {
        None => SweepResult::Trace(SpectrumTrace {
            axis: plan.axis1,
            x: plan.axis1.values(),
            signal,
            residual,
            failures,
        }),
        Some(a2) => SweepResult::Map(Map2D {
            x_axis: plan.axis1,
            y_axis: a2,
            x: plan.axis1.values(),
            y: a2.values(),
            signal,
            residual,
            failures,
        }),
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapError {
    #[error(
        "splitting not resolved: {found} local maxima above {MIN_PROMINENCE} of the strongest"
    )]
    Unresolved { found: usize },
    #[error("cut has no finite points")]
    Empty,
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Two fitted branches of a split line.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    /// `|c₂ − c₁|`, Hz.
    pub gap: f64,
    pub fit: PeakFit,
    /// Grid positions of the two maxima used as seeds, Hz.
    pub seeds: (f64, f64),
}

/// Where to cut a [`Map2D`] for [`extract_gap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutSpec {
    /// Row (y value, Hz) to take; the nearest grid row is used.
    pub y: f64,
    /// Optional x window, Hz.
    pub window: Option<(f64, f64)>,
}

impl CutSpec {
    /// The row at the `|e⟩`-dressed resonator frequency `ω̃_r + χ`.
    pub fn resonant(params: &SystemParams) -> Self {
        Self {
            y: to_hz(params.dressed().omega_r_tilde + params.chi),
            window: None,
        }
    }
}

/// Separation of the two strongest peaks of a trace after a two-Lorentzian fit.
pub fn gap_from_trace(x: &[f64], y: &[f64]) -> Result<Gap, GapError> {
    let (x, y) = finite_points(x, y);
    if x.is_empty() {
        return Err(GapError::Empty);
    }
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let base = sorted[sorted.len() / 2];
    let maxima = local_maxima(&y);
    let strongest = maxima.first().map_or(0.0, |&i| y[i] - base);
    let prominent: Vec<usize> = maxima
        .into_iter()
        .filter(|&i| y[i] - base >= MIN_PROMINENCE * strongest && strongest > 0.0)
        .collect();
    if prominent.len() < 2 {
        return Err(GapError::Unresolved {
            found: prominent.len(),
        });
    }
    let (a, b) = (
        prominent[0].min(prominent[1]),
        prominent[0].max(prominent[1]),
    );
    let sep = x[b] - x[a];
    let lo = x[a] - 3.0 * sep;
    let hi = x[b] + 3.0 * sep;
    let (mut wx, mut wy): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(&y)
        .filter(|(v, _)| **v >= lo && **v <= hi)
        .map(|(p, q)| (*p, *q))
        .unzip();
    if wx.len() < 12 {
        wx = x.clone();
        wy = y.clone();
    }
    let fit = fit_lorentzians(&wx, &wy, 2, Some(&[x[a], x[b]]))?;
    let gap = (fit.peaks[1].center - fit.peaks[0].center).abs();
    Ok(Gap {
        gap,
        fit,
        seeds: (x[a], x[b]),
    })
}

/// Splitting of the feature crossed by row `cut.y` of `map`.
pub fn extract_gap(map: &Map2D, cut: &CutSpec) -> Result<Gap, GapError> {
    let row = map.row_trace(map.nearest_row(cut.y));
    let (x, y): (Vec<f64>, Vec<f64>) = row
        .x
        .iter()
        .zip(&row.signal)
        .filter(|(v, _)| cut.window.map_or(true, |(lo, hi)| **v >= lo && **v <= hi))
        .map(|(a, b)| (*a, *b))
        .unzip();
    gap_from_trace(&x, &y)
}
