//! Operator algebra on the truncated resonator ⊗ qubit Hilbert space.
//!
//! Every joint operator uses one basis convention:
//!
//! ```text
//! index = fock_index * n_qubit + qubit_index      (qubit index 0 = |g⟩)
//! ```
//!
//! which is exactly the ordering produced by a Kronecker product with the
//! resonator factor on the left. [`tensor`] always follows that order, and
//! the lifted operators in [`JointOperators`] are built through it.
//!
//! The qubit `σz` is `diag(−1, +1)` in `(|g⟩, |e⟩)` order, so a pure ground
//! state has `Tr[ρσz] = −1`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("resonator truncation needs at least 2 Fock levels, got {0}")]
    FockTooSmall(usize),
    #[error("qubit needs at least 2 levels, got {0}")]
    QubitTooSmall(usize),
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has dimension {got} but the space {space} has dimension {expected}")]
    DimensionMismatch {
        space: Space,
        expected: usize,
        got: usize,
    },
    #[error("cannot combine an operator on {left} with one on {right}")]
    SpaceMismatch { left: Space, right: Space },
}

/// Truncation of the joint resonator ⊗ qubit space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceConfig {
    pub n_fock: usize,
    pub n_qubit: usize,
}

impl SpaceConfig {
    pub fn new(n_fock: usize, n_qubit: usize) -> Result<Self, OperatorError> {
        if n_fock < 2 {
            return Err(OperatorError::FockTooSmall(n_fock));
        }
        if n_qubit < 2 {
            return Err(OperatorError::QubitTooSmall(n_qubit));
        }
        Ok(Self { n_fock, n_qubit })
    }

    /// Two qubit levels and `n_fock` resonator levels.
    pub fn qubit(n_fock: usize) -> Result<Self, OperatorError> {
        Self::new(n_fock, 2)
    }

    /// Ten resonator levels and a two-level qubit, the truncation used for
    /// every steady-state simulation unless stated otherwise.
    pub fn standard() -> Self {
        Self {
            n_fock: 10,
            n_qubit: 2,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_fock * self.n_qubit
    }

    /// Joint basis index of `|qubit, fock⟩`.
    pub fn index(&self, fock: usize, qubit: usize) -> usize {
        debug_assert!(fock < self.n_fock && qubit < self.n_qubit);
        fock * self.n_qubit + qubit
    }

    /// Inverse of [`SpaceConfig::index`]: `(fock, qubit)`.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.n_qubit, index % self.n_qubit)
    }
}

impl fmt::Display for SpaceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Fock x {} qubit levels", self.n_fock, self.n_qubit)
    }
}

/// The Hilbert space an [`Operator`] acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Resonator(usize),
    Qubit(usize),
    Joint(SpaceConfig),
    /// Anything without a resonator/qubit interpretation.
    Generic(usize),
}

impl Space {
    pub fn dim(&self) -> usize {
        match *self {
            Space::Resonator(n) | Space::Qubit(n) | Space::Generic(n) => n,
            Space::Joint(cfg) => cfg.dim(),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Resonator(n) => write!(f, "resonator({n})"),
            Space::Qubit(n) => write!(f, "qubit({n})"),
            Space::Joint(cfg) => write!(f, "joint({cfg})"),
            Space::Generic(n) => write!(f, "generic({n})"),
        }
    }
}

/// A square complex matrix tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Space,
    mat: CMatrix,
}

impl Operator {
    pub fn from_matrix(space: Space, mat: CMatrix) -> Result<Self, OperatorError> {
        if mat.nrows() != mat.ncols() {
            return Err(OperatorError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() != space.dim() {
            return Err(OperatorError::DimensionMismatch {
                space,
                expected: space.dim(),
                got: mat.nrows(),
            });
        }
        Ok(Self { space, mat })
    }

    /// Generic operator from a real row-major listing; handy for tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, OperatorError> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(OperatorError::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        let mat = CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0));
        Ok(Self {
            space: Space::Generic(n),
            mat,
        })
    }

    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        Self {
            space,
            mat: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(space: Space) -> Self {
        let d = space.dim();
        Self {
            space,
            mat: CMatrix::zeros(d, d),
        }
    }

    /// Diagonal operator with real entries.
    pub fn diagonal(space: Space, diag: &[f64]) -> Result<Self, OperatorError> {
        if diag.len() != space.dim() {
            return Err(OperatorError::DimensionMismatch {
                space,
                expected: space.dim(),
                got: diag.len(),
            });
        }
        let n = diag.len();
        let mut mat = CMatrix::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(v, 0.0);
        }
        Ok(Self { space, mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    /// Relabel the space; the dimension must agree.
    pub fn with_space(self, space: Space) -> Result<Self, OperatorError> {
        Self::from_matrix(space, self.mat)
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space,
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            space: self.space,
            mat: &self.mat * C64::new(s, 0.0),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            space: self.space,
            mat: &self.mat * s,
        }
    }

    fn check_space(&self, other: &Operator) -> Result<(), OperatorError> {
        if self.space != other.space {
            return Err(OperatorError::SpaceMismatch {
                left: self.space,
                right: other.space,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Operator) -> Result<Self, OperatorError> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space,
            mat: &self.mat + &other.mat,
        })
    }

    pub fn checked_sub(&self, other: &Operator) -> Result<Self, OperatorError> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space,
            mat: &self.mat - &other.mat,
        })
    }

    /// Matrix product `self · other`.
    pub fn checked_mul(&self, other: &Operator) -> Result<Self, OperatorError> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space,
            mat: &self.mat * &other.mat,
        })
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Result<Self, OperatorError> {
        let ab = self.checked_mul(other)?;
        let ba = other.checked_mul(self)?;
        ab.checked_sub(&ba)
    }

    /// Largest entrywise deviation from `self†`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        hermitian_eigen(&self.mat).0
    }

    /// Ascending eigenvalues and the matching eigenvectors (as columns).
    pub fn eigen_hermitian(&self) -> (Vec<f64>, CMatrix) {
        hermitian_eigen(&self.mat)
    }
}

/// Ascending eigen-decomposition of the Hermitian part of `m`.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = m.nrows();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $trait<Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

/// Truncated resonator lowering operator, `a[i, i+1] = √(i+1)`.
pub fn annihilation(n_fock: usize) -> Result<Operator, OperatorError> {
    if n_fock < 2 {
        return Err(OperatorError::FockTooSmall(n_fock));
    }
    let mut mat = CMatrix::zeros(n_fock, n_fock);
    for i in 0..n_fock - 1 {
        mat[(i, i + 1)] = C64::new(((i + 1) as f64).sqrt(), 0.0);
    }
    Ok(Operator {
        space: Space::Resonator(n_fock),
        mat,
    })
}

pub fn creation(n_fock: usize) -> Result<Operator, OperatorError> {
    Ok(annihilation(n_fock)?.dagger())
}

/// `a†a = diag(0, 1, …, n_fock − 1)`.
pub fn number(n_fock: usize) -> Result<Operator, OperatorError> {
    if n_fock < 2 {
        return Err(OperatorError::FockTooSmall(n_fock));
    }
    let diag: Vec<f64> = (0..n_fock).map(|n| n as f64).collect();
    Operator::diagonal(Space::Resonator(n_fock), &diag)
}

/// Two-level qubit operators in `(|g⟩, |e⟩)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitOps {
    pub sigma_z: Operator,
    pub sigma_plus: Operator,
    pub sigma_minus: Operator,
}

pub fn qubit_ops() -> QubitOps {
    let sigma_z = Operator::diagonal(Space::Qubit(2), &[-1.0, 1.0]).expect("2x2");
    let mut sp = CMatrix::zeros(2, 2);
    sp[(1, 0)] = ONE;
    let sigma_plus = Operator {
        space: Space::Qubit(2),
        mat: sp,
    };
    let sigma_minus = sigma_plus.dagger();
    QubitOps {
        sigma_z,
        sigma_plus,
        sigma_minus,
    }
}

/// Transmon ladder projector `|j⟩⟨j+1|` on a `levels`-level qubit.
pub fn transmon_lowering(levels: usize, j: usize) -> Result<Operator, OperatorError> {
    if levels < 2 {
        return Err(OperatorError::QubitTooSmall(levels));
    }
    assert!(
        j + 1 < levels,
        "no level above {j} in a {levels}-level qubit"
    );
    let mut mat = CMatrix::zeros(levels, levels);
    mat[(j, j + 1)] = ONE;
    Ok(Operator {
        space: Space::Qubit(levels),
        mat,
    })
}

/// Kronecker product `a ⊗ b`.
///
/// A resonator operator on the left and a qubit operator on the right give a
/// [`Space::Joint`] result; every other combination is [`Space::Generic`].
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let space = match (a.space, b.space) {
        (Space::Resonator(n_fock), Space::Qubit(n_qubit)) => {
            Space::Joint(SpaceConfig { n_fock, n_qubit })
        }
        _ => Space::Generic(a.dim() * b.dim()),
    };
    Operator {
        space,
        mat: a.mat.kronecker(&b.mat),
    }
}

/// The standard operators lifted onto a joint space.
#[derive(Debug, Clone)]
pub struct JointOperators {
    pub space: SpaceConfig,
    pub a: Operator,
    pub a_dag: Operator,
    pub n: Operator,
    pub sigma_z: Operator,
    pub sigma_plus: Operator,
    pub sigma_minus: Operator,
    pub identity: Operator,
}

impl JointOperators {
    /// Requires a two-level qubit.
    pub fn new(space: SpaceConfig) -> Result<Self, OperatorError> {
        if space.n_qubit != 2 {
            return Err(OperatorError::DimensionMismatch {
                space: Space::Qubit(space.n_qubit),
                expected: 2,
                got: space.n_qubit,
            });
        }
        let a_r = annihilation(space.n_fock)?;
        let id_r = Operator::identity(Space::Resonator(space.n_fock));
        let id_q = Operator::identity(Space::Qubit(2));
        let q = qubit_ops();
        let a = tensor(&a_r, &id_q);
        let a_dag = a.dagger();
        let n = tensor(&number(space.n_fock)?, &id_q);
        Ok(Self {
            space,
            a,
            a_dag,
            n,
            sigma_z: tensor(&id_r, &q.sigma_z),
            sigma_plus: tensor(&id_r, &q.sigma_plus),
            sigma_minus: tensor(&id_r, &q.sigma_minus),
            identity: Operator::identity(Space::Joint(space)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(op: &Operator, i: usize, j: usize) -> f64 {
        let v = op.get(i, j);
        assert_eq!(v.im, 0.0);
        v.re
    }

    #[test]
    fn smallest_annihilation() {
        let a = annihilation(2).unwrap();
        assert_eq!(re(&a, 0, 1), 1.0);
        assert_eq!(re(&a, 0, 0), 0.0);
        assert_eq!(re(&a, 1, 0), 0.0);
        assert_eq!(re(&a, 1, 1), 0.0);
    }

    #[test]
    fn annihilation_rejects_tiny_truncation() {
        assert_eq!(annihilation(1), Err(OperatorError::FockTooSmall(1)));
        assert!(SpaceConfig::new(1, 2).is_err());
        assert!(SpaceConfig::new(3, 1).is_err());
    }

    #[test]
    fn number_operator_from_ladder() {
        let a = annihilation(4).unwrap();
        let n = &a.dagger() * &a;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { i as f64 } else { 0.0 };
                assert!((n.get(i, j) - C64::new(want, 0.0)).norm() <= 4.0 * f64::EPSILON * want);
            }
        }
    }

    #[test]
    fn truncated_commutator_artifact() {
        let a = annihilation(10).unwrap();
        let c = a.commutator(&a.dagger()).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let want = match (i == j, i) {
                    (true, 9) => -9.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert!(
                    (c.get(i, j) - C64::new(want, 0.0)).norm() < 1e-12,
                    "({i},{j})"
                );
            }
        }
    }

    #[test]
    fn qubit_algebra() {
        let q = qubit_ops();
        // σz|g⟩ = −|g⟩
        assert_eq!(re(&q.sigma_z, 0, 0), -1.0);
        assert_eq!(re(&q.sigma_z, 1, 1), 1.0);
        // σ+|g⟩ = |e⟩
        assert_eq!(re(&q.sigma_plus, 1, 0), 1.0);
        let pe = &q.sigma_plus * &q.sigma_minus;
        assert_eq!(
            pe,
            Operator::diagonal(Space::Qubit(2), &[0.0, 1.0]).unwrap()
        );
        let sum = &(&q.sigma_minus * &q.sigma_plus) + &pe;
        assert_eq!(sum, Operator::identity(Space::Qubit(2)));
    }

    #[test]
    fn tensor_small_cases() {
        let i2 = Operator::identity(Space::Generic(2));
        assert_eq!(tensor(&i2, &i2), Operator::identity(Space::Generic(4)));

        let p = Operator::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(tensor(&p, &i2).trace(), C64::new(2.0, 0.0));
    }

    #[test]
    fn number_times_sigma_z_spectrum() {
        // brute-force oracle: eigenvalues of diag products are the products of
        // the factor eigenvalues
        let n = number(3).unwrap();
        let sz = qubit_ops().sigma_z;
        let op = tensor(&n, &sz);
        assert_eq!(
            op.space(),
            Space::Joint(SpaceConfig {
                n_fock: 3,
                n_qubit: 2
            })
        );
        let mut got = op.eigenvalues_hermitian();
        let mut want = vec![];
        for k in 0..3 {
            for s in [-1.0, 1.0] {
                want.push(k as f64 * s);
            }
        }
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert_eq!(want, vec![-2.0, -1.0, 0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn basis_convention_matches_kronecker() {
        let space = SpaceConfig::qubit(4).unwrap();
        let ops = JointOperators::new(space).unwrap();
        for fock in 0..4 {
            for q in 0..2 {
                let k = space.index(fock, q);
                assert_eq!(space.split(k), (fock, q));
                assert_eq!(re(&ops.n, k, k), fock as f64);
                assert_eq!(re(&ops.sigma_z, k, k), if q == 0 { -1.0 } else { 1.0 });
            }
        }
        // a lowers the Fock index and leaves the qubit alone
        let k_from = space.index(2, 1);
        let k_to = space.index(1, 1);
        assert!((ops.a.get(k_to, k_from) - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = annihilation(3).unwrap();
        let sz = qubit_ops().sigma_z;
        assert!(matches!(
            a.checked_mul(&sz),
            Err(OperatorError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn from_matrix_validates_shape() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(
            Operator::from_matrix(Space::Generic(2), m),
            Err(OperatorError::NotSquare { .. })
        ));
        let m = CMatrix::zeros(3, 3);
        assert!(matches!(
            Operator::from_matrix(Space::Qubit(2), m),
            Err(OperatorError::DimensionMismatch { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn int_matrix(n: usize) -> impl Strategy<Value = Operator> {
            proptest::collection::vec(-3i32..=3, n * n).prop_map(move |v| {
                let mat = CMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j] as f64, 0.0));
                Operator::from_matrix(Space::Generic(n), mat).unwrap()
            })
        }

        proptest! {
            #[test]
            fn ladder_product_is_exact_number(n_fock in 2usize..24) {
                // √k·√k is k up to one rounding of the product
                let a = annihilation(n_fock).unwrap();
                let prod = &a.dagger() * &a;
                let want = number(n_fock).unwrap();
                for i in 0..n_fock {
                    for j in 0..n_fock {
                        let err = (prod.get(i, j) - want.get(i, j)).norm();
                        prop_assert!(err <= 2.0 * f64::EPSILON * want.get(i, j).re, "({}, {}) off by {}", i, j, err);
                    }
                }
            }

            #[test]
            fn tensor_is_associative(a in int_matrix(2), b in int_matrix(3), c in int_matrix(2)) {
                let left = tensor(&tensor(&a, &b), &c);
                let right = tensor(&a, &tensor(&b, &c));
                prop_assert_eq!(left.matrix(), right.matrix());
            }
        }
    }
}
