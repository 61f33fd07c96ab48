//! Spectral calculus for dense Hermitian matrices.
//!
//! Everything here is built on [`eig_hermitian`], a cyclic Jacobi eigensolver
//! for complex Hermitian matrices. Positive/negative parts, spectral
//! projections `{H > γB}`, the matrix logarithm and the pencil spectrum of
//! `(H, B)` are all functions of one eigendecomposition.
//!
//! Eigenvalues are classified as strictly positive when they exceed
//! [`zero_threshold`], `dim · ‖M‖∞ · 2⁻⁵⁰`. The strict and non-strict
//! projections only differ when `H − γB` is singular, which happens on a finite
//! set of `γ`, so the threshold only has to absorb roundoff.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;

/// Maximum number of cyclic Jacobi sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Condition number of a positive definite argument above which a warning is recorded.
pub const CONDITION_WARNING: f64 = 1e12;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |λᵢ|`.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    /// `Σ |λᵢ|`.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Threshold below which an eigenvalue of the decomposed matrix counts as zero.
    pub fn zero_threshold(&self) -> f64 {
        zero_threshold(self.dim(), self.operator_norm())
    }

    /// Functional calculus: `V · diag(f(λ)) · V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let fj = Complex64::new(f(lambda), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        HermitianMatrix::symmetrized(scaled * v.adjoint())
    }

    /// Orthogonal projection onto the span of eigenvectors whose eigenvalue
    /// satisfies `keep`.
    pub fn projection_where(&self, keep: impl Fn(f64) -> bool) -> Projection {
        let n = self.dim();
        let cols: Vec<usize> = (0..n).filter(|&j| keep(self.eigenvalues[j])).collect();
        let rank = cols.len();
        let matrix = if rank == 0 {
            HermitianMatrix::zeros(n)
        } else if rank == n {
            HermitianMatrix::identity(n)
        } else {
            let sub = self.eigenvectors.select_columns(cols.iter());
            HermitianMatrix::symmetrized(&sub * sub.adjoint())
        };
        Projection { matrix, rank }
    }

    /// `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        self.apply(|l| l)
    }
}

/// `dim · ‖M‖∞ · 2⁻⁵⁰`.
pub fn zero_threshold(dim: usize, operator_norm: f64) -> f64 {
    dim as f64 * operator_norm * 2f64.powi(-50)
}

/// Orthogonal projection together with its rank.
#[derive(Debug, Clone)]
pub struct Projection {
    matrix: HermitianMatrix,
    rank: usize,
}

impl Projection {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `I − P`.
    pub fn complement(&self) -> Projection {
        let n = self.dim();
        let matrix = if self.rank == 0 {
            HermitianMatrix::identity(n)
        } else if self.rank == n {
            HermitianMatrix::zeros(n)
        } else {
            HermitianMatrix::identity(n).add_scaled(&self.matrix, -1.0)
        };
        Projection {
            matrix,
            rank: n - self.rank,
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<SpectralDecomposition> {
    let n = m.dim();
    // Column-major working copies.
    let mut a: Vec<Complex64> = m.as_matrix().as_slice().to_vec();
    let mut v: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i + i * n] = Complex64::new(1.0, 0.0);
    }
    let fro = m.frobenius_norm();
    let target = f64::EPSILON * fro;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a, n) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }
    if !converged {
        converged = off_diagonal_norm(&a, n) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i + i * n].re.total_cmp(&a[j + j * n].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i + i * n].re).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| v[i + order[j] * n]);
    let decomposition = SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    };

    if !converged {
        let residual = (decomposition.reconstruct().as_matrix() - m.as_matrix()).norm();
        if residual > 1e-12 * fro.max(1.0) {
            return Err(Error::NumericalFailure(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps (residual {residual:e})"
            )));
        }
    }
    Ok(decomposition)
}

fn off_diagonal_norm(a: &[Complex64], n: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                acc += a[i + j * n].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `a[p][q]` with the unitary `J = diag(1, ū) · [[c, s], [−s, c]]`
/// acting on coordinates `(p, q)`, where `u` is the phase of `a[p][q]`.
fn rotate(a: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = a[p + q * n];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = a[p + p * n].re;
    let aqq = a[q + q * n].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau.abs() > 1e150 {
        0.5 / tau
    } else if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let u = apq / g;
    let uc = u.conj();

    // A <- A J
    for k in 0..n {
        let x = a[k + p * n];
        let y = a[k + q * n];
        a[k + p * n] = x * c - y * uc * s;
        a[k + q * n] = x * s + y * uc * c;
    }
    // A <- J† A
    for k in 0..n {
        let x = a[p + k * n];
        let y = a[q + k * n];
        a[p + k * n] = x * c - y * u * s;
        a[q + k * n] = x * s + y * u * c;
    }
    // V <- V J
    for k in 0..n {
        let x = v[k + p * n];
        let y = v[k + q * n];
        v[k + p * n] = x * c - y * uc * s;
        v[k + q * n] = x * s + y * uc * c;
    }
    a[p + q * n] = Complex64::new(0.0, 0.0);
    a[q + p * n] = Complex64::new(0.0, 0.0);
    a[p + p * n] = Complex64::new(app - t * g, 0.0);
    a[q + q * n] = Complex64::new(aqq + t * g, 0.0);
}

/// A validated positive definite matrix with its cached eigendecomposition
/// and inverse square root.
#[derive(Debug, Clone)]
pub struct PositiveDefinite {
    matrix: HermitianMatrix,
    eig: SpectralDecomposition,
    inv_sqrt: HermitianMatrix,
    warnings: Vec<String>,
}

impl PositiveDefinite {
    /// Fails with [`Error::Input`] when `λ_min(B) ≤ dim · ‖B‖∞ · 2⁻⁵⁰`.
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let eig = eig_hermitian(&matrix)?;
        let lmin = eig.min_eigenvalue();
        let lmax = eig.max_eigenvalue();
        if lmin <= eig.zero_threshold() {
            return Err(Error::input(format!(
                "matrix is not positive definite (smallest eigenvalue {lmin:e})"
            )));
        }
        let mut warnings = Vec::new();
        let cond = lmax / lmin;
        if cond > CONDITION_WARNING {
            let msg = format!("ill-conditioned positive definite argument: condition number {cond:e}");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let inv_sqrt = eig.apply(|l| 1.0 / l.sqrt());
        Ok(Self {
            matrix,
            eig,
            inv_sqrt,
            warnings,
        })
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn eigen(&self) -> &SpectralDecomposition {
        &self.eig
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn inv_sqrt(&self) -> &HermitianMatrix {
        &self.inv_sqrt
    }

    pub fn inverse(&self) -> HermitianMatrix {
        self.eig.apply(|l| 1.0 / l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.min_eigenvalue()
    }

    pub fn condition_number(&self) -> f64 {
        self.eig.max_eigenvalue() / self.eig.min_eigenvalue()
    }

    /// Conditioning warnings recorded at construction.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

impl TryFrom<HermitianMatrix> for PositiveDefinite {
    type Error = Error;
    fn try_from(m: HermitianMatrix) -> Result<Self> {
        Self::new(m)
    }
}

/// Validates `M ≥ 0`: every eigenvalue must be at least `−dim · ‖M‖∞ · 2⁻⁵⁰`.
pub fn check_psd(m: &HermitianMatrix, name: &str) -> Result<SpectralDecomposition> {
    let eig = eig_hermitian(m)?;
    if eig.min_eigenvalue() < -eig.zero_threshold() {
        return Err(Error::input(format!(
            "{name} is not positive semidefinite (smallest eigenvalue {:e})",
            eig.min_eigenvalue()
        )));
    }
    Ok(eig)
}

/// `(M)₊ = ½(√(M²) + M)`.
pub fn positive_part(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(eig_hermitian(m)?.apply(|l| l.max(0.0)))
}

/// `(M)₋ = ½(√(M²) − M)`.
pub fn negative_part(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(eig_hermitian(m)?.apply(|l| (-l).max(0.0)))
}

/// `Tr[(M)₊]`, the sum of the positive eigenvalues.
pub fn positive_trace(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.eigenvalues.iter().filter(|&&l| l > 0.0).sum())
}

/// `{M > 0}`: projection onto eigenvalues above the zero threshold.
pub fn positive_projection(m: &HermitianMatrix) -> Result<Projection> {
    let eig = eig_hermitian(m)?;
    let thr = eig.zero_threshold();
    Ok(eig.projection_where(|l| l > thr))
}

/// `{H > γB}`, the projection onto the strictly positive part of `H − γB`.
pub fn projection_gt(h: &HermitianMatrix, b: &PositiveDefinite, gamma: f64) -> Result<Projection> {
    positive_projection(&h.add_scaled(b.matrix(), -gamma))
}

/// `{H ≤ γB} = I − {H > γB}`.
pub fn projection_le(h: &HermitianMatrix, b: &PositiveDefinite, gamma: f64) -> Result<Projection> {
    Ok(projection_gt(h, b, gamma)?.complement())
}

/// Principal logarithm of a positive definite matrix.
pub fn matrix_log(b: &PositiveDefinite) -> HermitianMatrix {
    b.eigen().apply(f64::ln)
}

/// Matrix exponential of a Hermitian matrix.
pub fn matrix_exp(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    Ok(eig_hermitian(m)?.apply(f64::exp))
}

/// `B^{−1/2}`.
pub fn inv_sqrt(b: &PositiveDefinite) -> HermitianMatrix {
    b.inv_sqrt().clone()
}

/// `‖M‖₁ = Σ |λᵢ|`.
pub fn trace_norm(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.trace_norm())
}

/// `‖M‖∞ = max |λᵢ|`.
pub fn operator_norm(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.operator_norm())
}

/// Hilbert–Schmidt inner product `Tr[M·N]` of Hermitian matrices.
pub fn hs_inner(m: &HermitianMatrix, n: &HermitianMatrix) -> f64 {
    m.trace_product(n)
}

/// Ascending spectrum of `B^{−1/2} H B^{−1/2}`: the `γ` at which `H − γB` is singular.
pub fn pencil_eigenvalues(h: &HermitianMatrix, b: &PositiveDefinite) -> Result<Vec<f64>> {
    Ok(eig_hermitian(&h.congruence(b.inv_sqrt()))?.eigenvalues)
}

/// `Tr[{X > 0} · X]`, the maximizer of `Tr[ΛX]` over `0 ≤ Λ ≤ I`.
pub fn variational_positive_trace(x: &HermitianMatrix) -> Result<f64> {
    let p = positive_projection(x)?;
    Ok(hs_inner(p.matrix(), x))
}
