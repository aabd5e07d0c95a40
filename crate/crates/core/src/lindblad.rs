//! Liouvillian superoperator and its steady state.
//!
//! Density matrices are column-stacked: `vec(ρ)[j·d + i] = ρ[i, j]`. With that
//! convention `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`, so
//!
//! ```text
//! −i[H, ρ]  →  −i (I ⊗ H − Hᵀ ⊗ I)
//! D[A]ρ     →  conj(A) ⊗ A − ½ I ⊗ A†A − ½ (A†A)ᵀ ⊗ I
//! ```
//!
//! The master equation couples `ρ[i, j]` only to entries a few rows or columns
//! away, so the Liouvillian is a band matrix with half-bandwidth
//! `h·(d + 1)` where `h` is the largest index offset of any operator involved
//! (2 for the resonator ⊗ qubit ordering). It is assembled directly in band
//! storage and solved by banded Gaussian elimination.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::model::{h_total_rotating, DriveSpec, ModelError, SystemParams};
use crate::operators::{
    hermitian_eigen, CMatrix, JointOperators, Operator, OperatorError, Space, SpaceConfig, C64, I,
    ONE, ZERO,
};

/// Relative residual `‖Lρ‖∞ / (‖L‖∞ ‖ρ‖∞)` above which a solve is rejected.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Largest accepted `max |ρ − ρ†|`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Most negative accepted eigenvalue of `ρ`.
pub const POSITIVITY_TOL: f64 = -1e-8;
/// Pivots smaller than this fraction of the largest entry count as zero.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("steady state is not unique: {0}")]
    Degenerate(String),
    #[error("steady-state residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },
    #[error("steady state is not Hermitian (max |rho - rho^dag| = {0:e})")]
    NotHermitian(f64),
    #[error("steady state has eigenvalue {0:e} below the positivity tolerance")]
    NotPositive(f64),
    #[error(
        "superoperator needs a square operator on the {expected}-dimensional space, got {got}"
    )]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Dense superoperator of `D[A]` acting on column-stacked `ρ`.
pub fn dissipator(a: &Operator) -> CMatrix {
    let d = a.dim();
    let m = a.matrix();
    let ada = m.adjoint() * m;
    let id = CMatrix::identity(d, d);
    let half = C64::new(0.5, 0.0);
    m.map(|z| z.conj()).kronecker(m)
        - id.kronecker(&ada) * half
        - ada.transpose().kronecker(&id) * half
}

/// Dense superoperator of `−i[H, ·]`.
pub fn commutator_superop(h: &Operator) -> CMatrix {
    let d = h.dim();
    let id = CMatrix::identity(d, d);
    (id.kronecker(h.matrix()) - h.matrix().transpose().kronecker(&id)) * (-I)
}

/// Square band matrix in LAPACK `gbtrf` layout: column-major, with `kl`
/// extra rows on top reserved for pivoting fill-in.
#[derive(Debug, Clone, PartialEq)]
struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<C64>,
}

impl Band {
    fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            data: vec![ZERO; ld * n],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> C64 {
        if i + self.ku < j || i > j + self.kl {
            ZERO
        } else {
            self.data[self.at(i, j)]
        }
    }

    #[inline]
    fn add(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(
            i + self.ku >= j && i <= j + self.kl,
            "({i}, {j}) outside band"
        );
        let k = self.at(i, j);
        self.data[k] += v;
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n];
        for j in 0..self.n {
            if x[j] == ZERO {
                continue;
            }
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            let base = j * self.ld + self.kl + self.ku;
            for i in lo..=hi {
                y[i] += self.data[base + i - j] * x[j];
            }
        }
        y
    }

    fn to_dense(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Gaussian elimination with partial pivoting applied to `b` in place,
    /// followed by back substitution. Consumes the factorization.
    fn solve(mut self, mut b: Vec<C64>, pivot_floor: f64) -> Result<Vec<C64>, usize> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ld = self.ld;
        let diag = kv;
        for k in 0..n {
            let imax = (k + kl).min(n - 1);
            let col = k * ld;
            let mut p = k;
            let mut best = self.data[col + diag].norm_sqr();
            for i in k + 1..=imax {
                let v = self.data[col + diag + i - k].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.sqrt() <= pivot_floor {
                return Err(k);
            }
            let jmax = (k + kv).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, c) = (self.at(k, j), self.at(p, j));
                    self.data.swap(a, c);
                }
                b.swap(k, p);
            }
            let pivot = self.data[col + diag];
            let inv = ONE / pivot;
            for i in k + 1..=imax {
                let l = self.data[col + diag + i - k] * inv;
                self.data[col + diag + i - k] = l;
                if l != ZERO {
                    let bk = b[k];
                    b[i] -= l * bk;
                }
            }
            for j in k + 1..=jmax {
                let base = j * ld + diag - j;
                let akj = self.data[base + k];
                if akj == ZERO {
                    continue;
                }
                for i in k + 1..=imax {
                    let l = self.data[col + diag + i - k];
                    if l != ZERO {
                        self.data[base + i] -= l * akj;
                    }
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            // U carries kl + ku superdiagonals after pivoting, beyond what `get` sees
            for j in k + 1..=(k + kv).min(n - 1) {
                s -= self.data[self.at(k, j)] * b[j];
            }
            b[k] = s / self.data[self.at(k, k)];
        }
        Ok(b)
    }
}

/// Generator of the master equation
/// `ρ̇ = −i[H, ρ] + κ_− D[a]ρ + κ_+ D[a†]ρ + Γ_− D[σ−]ρ + Γ_+ D[σ+]ρ + (γ_φ/2) D[σz]ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    space: SpaceConfig,
    band: Band,
    dissipative: bool,
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

fn offset(nz: &[(usize, usize, C64)]) -> usize {
    nz.iter().map(|&(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
}

impl Liouvillian {
    /// Assembles `−i[H, ·] + Σ_k γ_k D[A_k]` for an arbitrary Hamiltonian and
    /// list of `(rate, jump operator)` pairs on the joint space.
    pub fn from_parts(
        space: SpaceConfig,
        h: &Operator,
        jumps: &[(f64, &Operator)],
    ) -> Result<Self, LindbladError> {
        let d = space.dim();
        let check = |op: &Operator| {
            if op.dim() != d {
                Err(LindbladError::Dimension {
                    expected: d,
                    got: op.dim(),
                })
            } else {
                Ok(())
            }
        };
        check(h)?;
        // K = H − (i/2) Σ γ A†A, so the no-jump part is −iKρ + iρK†
        let mut k = h.matrix().clone();
        let mut jump_nz = Vec::new();
        for &(rate, a) in jumps {
            check(a)?;
            if rate == 0.0 {
                continue;
            }
            let m = a.matrix();
            k -= (m.adjoint() * m) * C64::new(0.0, 0.5 * rate);
            jump_nz.push((rate, nonzeros(m)));
        }
        let k_nz = nonzeros(&k);
        let h_off = jump_nz
            .iter()
            .map(|(_, nz)| offset(nz))
            .fold(offset(&k_nz), usize::max);
        let bw = h_off * (d + 1);
        let mut band = Band::zeros(d * d, bw, bw);
        for j in 0..d {
            for &(i, kk, v) in &k_nz {
                band.add(i + j * d, kk + j * d, -I * v);
            }
        }
        for i in 0..d {
            for &(j, kk, v) in &k_nz {
                band.add(i + j * d, i + kk * d, I * v.conj());
            }
        }
        for (rate, nz) in &jump_nz {
            let g = C64::new(*rate, 0.0);
            for &(i, kk, a1) in nz {
                for &(j, l, a2) in nz {
                    band.add(i + j * d, kk + l * d, g * a1 * a2.conj());
                }
            }
        }
        Ok(Self {
            space,
            band,
            dissipative: !jump_nz.is_empty(),
        })
    }

    pub fn space(&self) -> SpaceConfig {
        self.space
    }

    /// `d²` for Hilbert dimension `d`.
    pub fn dim(&self) -> usize {
        self.band.n
    }

    pub fn bandwidth(&self) -> usize {
        self.band.kl
    }

    pub fn to_dense(&self) -> CMatrix {
        self.band.to_dense()
    }

    /// `L · vec(ρ)`.
    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim(), "vector length");
        self.band.mul_vec(x)
    }

    /// `L(ρ)` as a `d × d` matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.space.dim();
        assert_eq!(rho.shape(), (d, d), "density matrix shape");
        let y = self.apply_vec(rho.as_slice());
        CMatrix::from_column_slice(d, d, &y)
    }

    /// `max_j |Σ_i L[(i,i), j]|`, which vanishes for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.space.dim();
        let n = self.dim();
        (0..n)
            .map(|col| {
                (0..d)
                    .map(|i| self.band.get(i * d + i, col))
                    .fold(ZERO, |a, b| a + b)
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(self.band.kl);
                let hi = (i + self.band.ku).min(n - 1);
                (lo..=hi).map(|j| self.band.get(i, j).norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Liouvillian of the driven transmon-resonator system.
pub fn build_liouvillian(
    params: &SystemParams,
    drive: &DriveSpec,
    space: SpaceConfig,
) -> Result<Liouvillian, LindbladError> {
    params.rates.validate()?;
    let h = h_total_rotating(params, drive, space)?;
    let ops = JointOperators::new(space)?;
    let r = &params.rates;
    Liouvillian::from_parts(
        space,
        &h,
        &[
            (r.kappa_minus, &ops.a),
            (r.kappa_plus, &ops.a_dag),
            (r.gamma_minus, &ops.sigma_minus),
            (r.gamma_plus, &ops.sigma_plus),
            (r.gamma_phi / 2.0, &ops.sigma_z),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Banded elimination with the `ρ[0,0]` equation replaced by a
    /// normalization row, then rescaled to unit trace.
    BandedLu,
    /// Dense LU with the `ρ[0,0]` equation replaced by the trace functional.
    DenseLu,
}

impl std::fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverMethod::BandedLu => "banded-lu",
            SolverMethod::DenseLu => "dense-lu",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: CMatrix,
    pub space: SpaceConfig,
    /// Relative residual `‖Lρ‖∞ / (‖L‖∞ ‖ρ‖∞)`.
    pub residual_norm: f64,
    pub solver: SolverMethod,
    /// `max |ρ − ρ†|` before symmetrization.
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

/// Solves `Lρ = 0, Tr ρ = 1` with the banded solver, falling back to the dense
/// solver when the `ρ[0,0]` normalization is singular.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState, LindbladError> {
    match steady_state_with(l, SolverMethod::BandedLu) {
        Err(LindbladError::Degenerate(_)) if l.dissipative => {
            steady_state_with(l, SolverMethod::DenseLu)
        }
        other => other,
    }
}

pub fn steady_state_with(
    l: &Liouvillian,
    method: SolverMethod,
) -> Result<SteadyState, LindbladError> {
    if !l.dissipative {
        return Err(LindbladError::Degenerate(
            "every dissipation rate is zero, so any mixture of Hamiltonian eigenstates is stationary"
                .into(),
        ));
    }
    let d = l.space.dim();
    let n = l.dim();
    let scale = l.band.max_abs();
    let x = match method {
        SolverMethod::BandedLu => {
            let mut band = l.band.clone();
            for j in 0..=band.ku.min(n - 1) {
                let k = band.at(0, j);
                band.data[k] = ZERO;
            }
            let k = band.at(0, 0);
            band.data[k] = C64::new(scale, 0.0);
            let mut b = vec![ZERO; n];
            b[0] = C64::new(scale, 0.0);
            band.solve(b, PIVOT_TOL * scale).map_err(|col| {
                LindbladError::Degenerate(format!(
                    "zero pivot in column {col} of the banded system"
                ))
            })?
        }
        SolverMethod::DenseLu => {
            let mut m = l.to_dense();
            for j in 0..n {
                m[(0, j)] = ZERO;
            }
            for i in 0..d {
                m[(0, i * d + i)] = C64::new(scale, 0.0);
            }
            let mut b = nalgebra::DVector::from_element(n, ZERO);
            b[0] = C64::new(scale, 0.0);
            let lu = m.lu();
            let u_min = lu
                .u()
                .diagonal()
                .iter()
                .map(|z| z.norm())
                .fold(f64::INFINITY, f64::min);
            if u_min <= PIVOT_TOL * scale {
                return Err(LindbladError::Degenerate(
                    "trace-augmented Liouvillian is singular".into(),
                ));
            }
            lu.solve(&b)
                .ok_or_else(|| LindbladError::Degenerate("LU solve failed".into()))?
                .as_slice()
                .to_vec()
        }
    };
    let mut rho = CMatrix::from_column_slice(d, d, &x);
    let tr = rho.trace();
    if tr.norm() == 0.0 || !tr.re.is_finite() {
        return Err(LindbladError::Degenerate("solution has zero trace".into()));
    }
    rho /= tr;

    let lr = l.apply_vec(rho.as_slice());
    let r_inf = lr.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rho_inf = rho.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual_norm = r_inf / (l.norm_inf() * rho_inf);
    if !(residual_norm <= RESIDUAL_TOL) {
        return Err(LindbladError::Residual {
            residual: residual_norm,
            tol: RESIDUAL_TOL,
        });
    }
    let hermiticity_error = (&rho - rho.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if hermiticity_error > HERMITICITY_TOL {
        return Err(LindbladError::NotHermitian(hermiticity_error));
    }
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let (evals, _) = hermitian_eigen(&rho);
    let min_eigenvalue = evals[0];
    if min_eigenvalue < POSITIVITY_TOL {
        return Err(LindbladError::NotPositive(min_eigenvalue));
    }
    Ok(SteadyState {
        rho,
        space: l.space,
        residual_norm,
        solver: method,
        hermiticity_error,
        min_eigenvalue,
    })
}

/// Builds the Liouvillian for one drive point and solves it.
pub fn solve_point(
    params: &SystemParams,
    drive: &DriveSpec,
    space: SpaceConfig,
) -> Result<SteadyState, LindbladError> {
    steady_state(&build_liouvillian(params, drive, space)?)
}

impl SteadyState {
    /// `Tr[ρ A]`.
    pub fn expect(&self, a: &Operator) -> C64 {
        (&self.rho * a.matrix()).trace()
    }

    /// `Tr[ρ σz]`, the readout signal.
    pub fn sigma_z(&self) -> f64 {
        let (e, g) = self.qubit_populations_pair();
        e - g
    }

    fn qubit_populations_pair(&self) -> (f64, f64) {
        let mut pg = 0.0;
        let mut pe = 0.0;
        for n in 0..self.space.n_fock {
            pg += self.rho[(self.space.index(n, 0), self.space.index(n, 0))].re;
            pe += self.rho[(self.space.index(n, 1), self.space.index(n, 1))].re;
        }
        (pe, pg)
    }

    /// Reduced qubit populations `(p_g, p_e)`.
    pub fn qubit_populations(&self) -> (f64, f64) {
        let (pe, pg) = self.qubit_populations_pair();
        (pg, pe)
    }

    /// Resonator photon-number distribution `p_n`.
    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..self.space.n_fock)
            .map(|n| {
                (0..self.space.n_qubit)
                    .map(|q| self.rho[(self.space.index(n, q), self.space.index(n, q))].re)
                    .sum()
            })
            .collect()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.photon_distribution()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Reduced resonator state, tracing out the qubit.
    pub fn resonator_state(&self) -> CMatrix {
        let s = self.space;
        CMatrix::from_fn(s.n_fock, s.n_fock, |m, n| {
            (0..s.n_qubit)
                .map(|q| self.rho[(s.index(m, q), s.index(n, q))])
                .fold(ZERO, |a, b| a + b)
        })
    }

    /// Reduced qubit state, tracing out the resonator.
    pub fn qubit_state(&self) -> CMatrix {
        let s = self.space;
        CMatrix::from_fn(s.n_qubit, s.n_qubit, |p, q| {
            (0..s.n_fock)
                .map(|n| self.rho[(s.index(n, p), s.index(n, q))])
                .fold(ZERO, |a, b| a + b)
        })
    }

    pub fn as_operator(&self) -> Operator {
        Operator::from_matrix(Space::Joint(self.space), self.rho.clone()).expect("square")
    }
}

/// Vectorized `ρ` as a column vector (for tests against dense superoperators).
pub fn vectorize(rho: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    DMatrix::from_column_slice(d, d, v)
}
