//! Operator layer cake integrals for `D log[B](H)`.
//!
//! For `B > 0` and Hermitian `H`,
//!
//! ```text
//! D log[B](H) = ∫_0^∞ {H > γB} dγ − ∫_{−∞}^0 {H ≤ γB} dγ
//! ```
//!
//! and for `A ≥ 0` the second integral vanishes. Both integrands are supported
//! in `[−r, r]` with `r = ‖B^{−1/2} H B^{−1/2}‖∞`, so the integrals are finite.
//!
//! Only the rank of `{H > γB}` is piecewise constant in `γ`; the projection
//! itself rotates between consecutive pencil eigenvalues unless `H` and `B`
//! commute. Each piece is therefore integrated adaptively, not sampled.

use crate::error::Result;
use crate::matrix::HermitianMatrix;
use crate::quadrature::{merge_breakpoints, try_integrate_matrix, QuadratureConfig, QuadratureResult};
use crate::spectral::{check_psd, operator_norm, pencil_eigenvalues, projection_gt, projection_le, PositiveDefinite};

/// Relative margin applied to the support radius.
pub const RADIUS_MARGIN: f64 = 1e-9;

/// Breakpoints closer than this fraction of `r` are merged.
pub const BREAKPOINT_MERGE: f64 = 1e-12;

/// Half-width of an interval containing the support of the layer cake integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRadius {
    pub r: f64,
}

/// `‖B^{−1/2} H B^{−1/2}‖∞ · (1 + 10⁻⁹)`.
pub fn support_radius(b: &PositiveDefinite, h: &HermitianMatrix) -> Result<SupportRadius> {
    let norm = operator_norm(&h.congruence(b.inv_sqrt()))?;
    Ok(SupportRadius {
        r: norm * (1.0 + RADIUS_MARGIN),
    })
}

fn zero_result(dim: usize) -> QuadratureResult<HermitianMatrix> {
    QuadratureResult::zero().map(|_| HermitianMatrix::zeros(dim))
}

fn breakpoints_in(pencil: &[f64], lo: f64, hi: f64, r: f64) -> Vec<f64> {
    merge_breakpoints(pencil, lo, hi, BREAKPOINT_MERGE * r)
}

fn integrate_gt(
    h: &HermitianMatrix,
    b: &PositiveDefinite,
    r: f64,
    pencil: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<HermitianMatrix>> {
    if r <= 0.0 {
        return Ok(zero_result(h.dim()));
    }
    let bp = breakpoints_in(pencil, 0.0, r, r);
    try_integrate_matrix(|g| Ok(projection_gt(h, b, g)?.into_matrix()), 0.0, r, &bp, cfg)?.require_converged()
}

fn integrate_le(
    h: &HermitianMatrix,
    b: &PositiveDefinite,
    r: f64,
    pencil: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<HermitianMatrix>> {
    if r <= 0.0 {
        return Ok(zero_result(h.dim()));
    }
    let bp = breakpoints_in(pencil, -r, 0.0, r);
    try_integrate_matrix(|g| Ok(projection_le(h, b, g)?.into_matrix()), -r, 0.0, &bp, cfg)?.require_converged()
}

/// `∫_0^∞ {A > γB} dγ` for `A ≥ 0`, integrated over `[0, r]`.
pub fn layer_cake_positive(
    b: &PositiveDefinite,
    a: &HermitianMatrix,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<HermitianMatrix>> {
    check_psd(a, "A")?;
    let r = support_radius(b, a)?.r;
    let pencil = pencil_eigenvalues(a, b)?;
    integrate_gt(a, b, r, &pencil, cfg)
}

/// `∫_0^∞ {H > γB} dγ − ∫_{−∞}^0 {H ≤ γB} dγ`, integrated over `[0, r]` and `[−r, 0]`.
pub fn layer_cake_two_sided(
    b: &PositiveDefinite,
    h: &HermitianMatrix,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<HermitianMatrix>> {
    let r = support_radius(b, h)?.r;
    let pencil = pencil_eigenvalues(h, b)?;
    let (upper, lower) = rayon::join(
        || integrate_gt(h, b, r, &pencil, cfg),
        || integrate_le(h, b, r, &pencil, cfg),
    );
    let (upper, lower) = (upper?, lower?);
    Ok(QuadratureResult {
        value: upper.value.add_scaled(&lower.value, -1.0),
        error_estimate: upper.error_estimate + lower.error_estimate,
        evaluations: upper.evaluations + lower.evaluations,
        panels: upper.panels + lower.panels,
        tolerance: upper.tolerance + lower.tolerance,
        converged: upper.converged && lower.converged,
    })
}

/// Residual of the shift reduction from a general direction to a positive one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftIdentity {
    /// `‖∫_0^∞ {H + rB > γB} dγ − r·I − (two-sided integral of H)‖_F`.
    pub residual: f64,
    /// Summed quadrature error estimates of the two routes.
    pub error_estimate: f64,
    pub radius: f64,
}

/// Compares the one-sided integral of the positive direction `H + rB` (minus
/// `r·I`) with the two-sided integral of `H`.
pub fn shift_identity_residual(
    b: &PositiveDefinite,
    h: &HermitianMatrix,
    cfg: &QuadratureConfig,
) -> Result<ShiftIdentity> {
    let r = support_radius(b, h)?.r;
    let shifted = h.add_scaled(b.matrix(), r);
    let positive = layer_cake_positive(b, &shifted, cfg)?;
    let two_sided = layer_cake_two_sided(b, h, cfg)?;
    let n = h.dim();
    let reduced = positive.value.add_scaled(&HermitianMatrix::identity(n), -r);
    let residual = (reduced.as_matrix() - two_sided.value.as_matrix()).norm();
    Ok(ShiftIdentity {
        residual,
        error_estimate: positive.error_estimate + two_sided.error_estimate,
        radius: r,
    })
}
