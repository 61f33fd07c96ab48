//! Dense Hermitian matrices.
//!
//! [`HermitianMatrix`] is the single matrix type used across the crate. It is a
//! thin wrapper over an `nalgebra` complex matrix that enforces
//! `M[i][j] == conj(M[j][i])` bit-for-bit: inputs are validated against a
//! relative asymmetry budget and then symmetrized as `(M + M†)/2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest relative Frobenius asymmetry `‖M − M†‖_F / ‖M‖_F` accepted at construction.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-8;

/// A dense complex Hermitian matrix of dimension at least one.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Validates and symmetrizes a square complex matrix.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::input(format!(
                "matrix is not square: {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::input("matrix dimension must be at least 1"));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("matrix has non-finite entries"));
        }
        let asym = (&m - m.adjoint()).norm();
        let norm = m.norm();
        if asym > ASYMMETRY_TOLERANCE * norm {
            return Err(Error::input(format!(
                "matrix is not Hermitian: ‖M − M†‖_F = {asym:e} exceeds {:e}·‖M‖_F",
                ASYMMETRY_TOLERANCE
            )));
        }
        if asym == 0.0 {
            // Already exact; keep the input bit for bit (signed zeros included).
            return Ok(Self { inner: m });
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without validation. Used for results of operations that are
    /// Hermitian in exact arithmetic.
    pub(crate) fn symmetrized(m: DMatrix<Complex64>) -> Self {
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            let d = out[(i, i)].re;
            out[(i, i)] = Complex64::new(d, 0.0);
            for j in (i + 1)..n {
                let z = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = z;
                out[(j, i)] = z.conj();
            }
        }
        Self { inner: out }
    }

    /// Builds a matrix from row-major complex entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::input(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Builds a real symmetric matrix from row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_row_major(dim, &c)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "diagonal must be non-empty");
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { inner: m }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Self {
            inner: DMatrix::zeros(dim, dim),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.inner
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    /// Real trace (the imaginary part vanishes for Hermitian matrices).
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Largest absolute diagonal or off-diagonal modulus; a cheap proxy used for
    /// scaling thresholds before an eigendecomposition is available.
    pub fn max_abs_entry(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            inner: &self.inner * Complex64::new(alpha, 0.0),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &Self, alpha: f64) -> Self {
        self.check_same_dim(other);
        let a = Complex64::new(alpha, 0.0);
        Self::symmetrized(&self.inner + &other.inner * a)
    }

    /// `Tr[self · other]`, real because both operands are Hermitian.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.check_same_dim(other);
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = self.inner[(i, j)] * other.inner[(j, i)];
                acc += z.re;
            }
        }
        acc
    }

    /// `C · self · C` for Hermitian `C`; Hermitian by construction.
    pub fn congruence(&self, c: &Self) -> Self {
        self.check_same_dim(c);
        Self::symmetrized(&c.inner * &self.inner * &c.inner)
    }

    /// Plain matrix product; generally not Hermitian.
    pub fn matmul(&self, other: &Self) -> DMatrix<Complex64> {
        self.check_same_dim(other);
        &self.inner * &other.inner
    }

    /// True when `self · other == other · self` up to `tol · ‖self‖_F · ‖other‖_F`.
    pub fn commutes_with(&self, other: &Self, tol: f64) -> bool {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        (ab - ba).norm() <= tol * self.frobenius_norm() * other.frobenius_norm()
    }

    fn check_same_dim(&self, other: &Self) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dimension mismatch: {} vs {}",
            self.dim(),
            other.dim()
        );
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix({}x{}) [", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            write!(f, "  ")?;
            for j in 0..self.dim() {
                let z = self.inner[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        self.add_scaled(rhs, 1.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        self.add_scaled(rhs, -1.0)
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}
