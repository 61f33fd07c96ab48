//! Directional derivative of the matrix logarithm, `D log[B](H)`.
//!
//! [`dlog_daleckii_krein`] is the closed form: in the eigenbasis of `B` the
//! derivative acts entrywise through the matrix of first divided differences
//! of `log` at the eigenvalues. [`dlog_finite_difference`] discretizes the
//! defining limit and serves as a sanity oracle. The projection-integral route
//! lives in [`crate::layercake`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;
use crate::spectral::{matrix_log, operator_norm, PositiveDefinite};

/// Relative eigenvalue gap below which the divided difference switches to its series.
pub const SERIES_CROSSOVER: f64 = 1e-7;

/// First divided differences of `log` at a set of positive eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerMatrix {
    pub entries: DMatrix<f64>,
}

impl LoewnerMatrix {
    pub fn for_log(eigenvalues: &[f64]) -> Self {
        let n = eigenvalues.len();
        let entries = DMatrix::from_fn(n, n, |i, j| log_divided_difference(eigenvalues[i], eigenvalues[j]));
        Self { entries }
    }
}

/// `(log x − log y)/(x − y)`, or `1/x` on the diagonal.
///
/// With `r = (x − y)/(x + y)`, the quotient equals `(2/(x + y))·atanh(r)/r`;
/// for `|r| < 1e-7` the series `(2/(x + y))(1 + r²/3 + r⁴/5)` is used instead.
pub fn log_divided_difference(x: f64, y: f64) -> f64 {
    let sum = x + y;
    let r = (x - y) / sum;
    if r.abs() < SERIES_CROSSOVER {
        let r2 = r * r;
        (2.0 / sum) * (1.0 + r2 / 3.0 + r2 * r2 / 5.0)
    } else {
        (x.ln() - y.ln()) / (x - y)
    }
}

/// `V · (L ∘ (V† H V)) · V†` with `B = V Λ V†`.
pub fn dlog_daleckii_krein(b: &PositiveDefinite, h: &HermitianMatrix) -> HermitianMatrix {
    assert_eq!(b.dim(), h.dim(), "dimension mismatch");
    let eig = b.eigen();
    let v = &eig.eigenvectors;
    let loewner = LoewnerMatrix::for_log(&eig.eigenvalues);
    let mut rotated = v.adjoint() * h.as_matrix() * v;
    for (z, l) in rotated.iter_mut().zip(loewner.entries.iter()) {
        *z *= Complex64::new(*l, 0.0);
    }
    HermitianMatrix::symmetrized(v * rotated * v.adjoint())
}

/// `10⁻⁵ · ‖B‖∞ / max(‖H‖∞, ε)`.
pub fn default_step(b: &PositiveDefinite, h: &HermitianMatrix) -> Result<f64> {
    let hn = operator_norm(h)?;
    Ok(1e-5 * b.eigen().operator_norm() / hn.max(f64::EPSILON))
}

/// Central difference `(log(B + sH) − log(B − sH)) / (2s)` with step `s`.
pub fn dlog_finite_difference(b: &PositiveDefinite, h: &HermitianMatrix, step: f64) -> Result<HermitianMatrix> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::input(format!("finite-difference step {step} must be positive")));
    }
    let plus = PositiveDefinite::new(b.matrix().add_scaled(h, step))
        .map_err(|_| Error::input("B + hH is not positive definite; reduce the step"))?;
    let minus = PositiveDefinite::new(b.matrix().add_scaled(h, -step))
        .map_err(|_| Error::input("B − hH is not positive definite; reduce the step"))?;
    let diff = matrix_log(&plus).add_scaled(&matrix_log(&minus), -1.0);
    Ok(diff.scale(0.5 / step))
}

/// `(Tr[D log[B](H)], Tr[B⁻¹H])`; equal because `d/dt log det(B + tH) = Tr[B⁻¹H]`.
pub fn dlog_trace_identity(b: &PositiveDefinite, h: &HermitianMatrix) -> (f64, f64) {
    let lhs = dlog_daleckii_krein(b, h).trace();
    let rhs = b.inverse().trace_product(h);
    (lhs, rhs)
}
