//! Dense complex operators on small qubit registers.
//!
//! Conventions used everywhere in the crate:
//! `|0⟩ = (1, 0)ᵀ`, `X = [[0,1],[1,0]]`, `Y = [[0,−i],[i,0]]`, `Z = diag(1,−1)`,
//! and qubit 0 is the leftmost (most significant) tensor factor.

mod linalg;
mod pauli;
mod superop;

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub use linalg::{eigh, exp_hermitian, expm, trace_distance};
pub use pauli::{Pauli, PauliString, Phase};
pub use superop::{dissipator, h_superop};

/// Largest register the dense representation accepts.
pub const MAX_QUBITS: usize = 8;

/// Hermiticity tolerance for operators flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated in a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// State vector.
pub type Ket = Array1<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix whose dimension is a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(Array2<C64>);

impl Operator {
    pub fn new(a: Array2<C64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols || !rows.is_power_of_two() {
            return Err(Error::NotQubitOperator { rows, cols });
        }
        let n = rows.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                requested: n,
                max: MAX_QUBITS,
            });
        }
        Ok(Operator(a))
    }

    /// Row-major entries.
    pub fn from_vec(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let a = Array2::from_shape_vec((dim, dim), entries)
            .map_err(|_| Error::NotQubitOperator { rows: dim, cols: dim })?;
        Operator::new(a)
    }

    pub(crate) fn from_array_unchecked(a: Array2<C64>) -> Self {
        debug_assert!(a.nrows() == a.ncols() && a.nrows().is_power_of_two());
        Operator(a)
    }

    pub fn identity(dim: usize) -> Self {
        Operator(Array2::eye(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(Array2::zeros((dim, dim)))
    }

    fn two_by_two(m: [[C64; 2]; 2]) -> Self {
        Operator(ndarray::arr2(&m))
    }

    pub fn pauli_x() -> Self {
        Self::two_by_two([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::two_by_two([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::two_by_two([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// `|0⟩⟨1|`, the decay `|1⟩ → |0⟩`.
    pub fn sigma_minus() -> Self {
        Self::two_by_two([[ZERO, ONE], [ZERO, ZERO]])
    }

    pub fn hadamard() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::two_by_two([[h, h], [h, -h]])
    }

    /// One-qubit operator `a·σ` for a real 3-vector.
    pub fn from_bloch(v: [f64; 3]) -> Self {
        &(&Self::pauli_x().scale_real(v[0]) + &Self::pauli_y().scale_real(v[1]))
            + &Self::pauli_z().scale_real(v[2])
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[[row, col]]
    }

    pub fn array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn dagger(&self) -> Operator {
        Operator(self.0.t().mapv(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator(&self.0 * c)
    }

    pub fn scale_real(&self, c: f64) -> Operator {
        Operator(self.0.mapv(|z| z * c))
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator(ndarray::linalg::kron(&self.0, &other.0))
    }

    /// `f_0 ⊗ f_1 ⊗ …`; the empty product is the 1×1 identity.
    pub fn tensor(factors: &[Operator]) -> Operator {
        factors
            .iter()
            .fold(Operator::identity(1), |acc, f| acc.kron(f))
    }

    /// Lifts a one-qubit operator to act on `qubit` of an `n`-qubit register.
    pub fn embed(&self, qubit: usize, n: usize) -> Result<Operator> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        if qubit >= n {
            return Err(Error::InvalidConfig(format!(
                "qubit index {qubit} out of range for {n} qubits"
            )));
        }
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits {
                requested: n,
                max: MAX_QUBITS,
            });
        }
        let left = Operator::identity(1 << qubit);
        let right = Operator::identity(1 << (n - qubit - 1));
        Ok(left.kron(self).kron(&right))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Operator) -> Operator {
        &(self * other) + &(other * self)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (self - &self.dagger()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `‖U†U − I‖_max`.
    pub fn unitary_deviation(&self) -> f64 {
        (&(&self.dagger() * self) - &Operator::identity(self.dim())).max_abs()
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        self.0.dot(v)
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &Ket) -> C64 {
        inner(v, &self.apply(v))
    }

    /// Coefficients of a one-qubit operator in the basis `(I, X, Y, Z)`:
    /// `M = m0·I + m1·X + m2·Y + m3·Z`.
    pub fn pauli_coefficients(&self) -> Result<[C64; 4]> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        let m = &self.0;
        Ok([
            (m[[0, 0]] + m[[1, 1]]) * 0.5,
            (m[[0, 1]] + m[[1, 0]]) * 0.5,
            (m[[1, 0]] - m[[0, 1]]) * (I * -0.5),
            (m[[0, 0]] - m[[1, 1]]) * 0.5,
        ])
    }

    /// Traceless part `M − (tr M / d)·I`.
    pub fn traceless_part(&self) -> Operator {
        let shift = self.trace() / self.dim() as f64;
        self - &Operator::identity(self.dim()).scale(shift)
    }
}

impl AsRef<Operator> for Operator {
    fn as_ref(&self) -> &Operator {
        self
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(self.0.dot(&rhs.0))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// `⟨a|b⟩`.
pub fn inner(a: &Ket, b: &Ket) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &Ket) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalizes in place and returns the previous norm.
pub fn normalize(v: &mut Ket) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.mapv_inplace(|z| z / n);
    }
    n
}

/// Computational basis vector `|index⟩`.
pub fn basis_ket(dim: usize, index: usize) -> Ket {
    let mut v = Ket::zeros(dim);
    v[index] = ONE;
    v
}

/// `|v⟩⟨w|`.
pub fn outer(v: &Ket, w: &Ket) -> Operator {
    let d = v.len();
    Operator::from_array_unchecked(Array2::from_shape_fn((d, d), |(i, j)| v[i] * w[j].conj()))
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        let rho = DensityMatrix(op);
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_operator_unchecked(op: Operator) -> Self {
        DensityMatrix(op)
    }

    pub fn from_ket(v: &Ket) -> Self {
        let mut v = v.clone();
        normalize(&mut v);
        DensityMatrix(outer(&v, &v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.0.array().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigh(&self.0).0[0]
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.0.hermitian_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::NonHermitian {
                what: "density matrix".into(),
                deviation: herm,
            });
        }
        let tr = self.0.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::NumericalIntegrity {
                time: f64::NAN,
                detail: format!("density matrix trace {tr}"),
            });
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(Error::NumericalIntegrity {
                time: f64::NAN,
                detail: format!("density matrix eigenvalue {min:e}"),
            });
        }
        Ok(())
    }
}

impl AsRef<Operator> for DensityMatrix {
    fn as_ref(&self) -> &Operator {
        &self.0
    }
}

/// `e^{−iφ}c = χ·I + a·σ + i·b·σ` with real `a`, `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneQubitDecomposition {
    pub chi: C64,
    pub a_vec: [f64; 3],
    pub b_vec: [f64; 3],
}

impl OneQubitDecomposition {
    /// Splits a 2×2 operator into its identity, Hermitian and anti-Hermitian parts.
    pub fn of(m: &Operator) -> Result<Self> {
        let [m0, mx, my, mz] = m.pauli_coefficients()?;
        // Hermitian part (M + M†)/2 has real Pauli coefficients Re(m_k).
        Ok(OneQubitDecomposition {
            chi: m0,
            a_vec: [mx.re, my.re, mz.re],
            b_vec: [mx.im, my.im, mz.im],
        })
    }

    /// `A = a·σ`.
    pub fn a(&self) -> Operator {
        Operator::from_bloch(self.a_vec)
    }

    /// `B = b·σ`.
    pub fn b(&self) -> Operator {
        Operator::from_bloch(self.b_vec)
    }

    pub fn reconstruct(&self) -> Operator {
        let id = Operator::identity(2).scale(self.chi);
        &(&id + &self.a()) + &self.b().scale(I)
    }
}
