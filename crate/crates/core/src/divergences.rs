//! Umegaki relative entropy, hockey-stick divergence, and the integral
//! representations of the former in terms of the latter.
//!
//! The γ-form integrates `E_γ(A‖B)/γ + E_γ(B‖A)/γ²` over `γ ∈ [1, ∞)`:
//!
//! * the first term vanishes once `A ≤ γB`, i.e. beyond the largest
//!   generalized eigenvalue of the pencil `(A, B)`, so it is integrated on the
//!   compact interval `[1, r_AB]`;
//! * the second term is mapped to `∫₀¹ Tr[(uB − A)₊]/u du` by `u = 1/γ`. The
//!   substituted integrand has a finite limit at `u = 0` even for rank-deficient
//!   `A`, and the open quadrature rule never samples `u = 0`.
//!
//! The t-form integrates `Tr[((1−t)A + tB)₋] / (|t|(t−1)²)` over the real line.
//! On `[0, 1]` the operator is positive semidefinite and the integrand is zero.
//! The two remaining branches are pulled back to the same compact domains as
//! the γ-form (`t = γ/(γ−1)` and `t = u/(u−1)`), but the integrand is evaluated
//! literally from the t-form, so the two routes share breakpoints and nothing else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;
use crate::quadrature::{try_compactify_reciprocal, try_integrate_scalar, QuadratureConfig, QuadratureResult};
use crate::spectral::{check_psd, matrix_log, pencil_eigenvalues, positive_trace, PositiveDefinite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceMethod {
    Umegaki,
    FrenkelGamma,
    FrenkelT,
}

impl DivergenceMethod {
    pub fn name(self) -> &'static str {
        match self {
            DivergenceMethod::Umegaki => "umegaki",
            DivergenceMethod::FrenkelGamma => "frenkel_gamma",
            DivergenceMethod::FrenkelT => "frenkel_t",
        }
    }
}

/// A relative entropy value together with how it was obtained.
#[derive(Debug, Clone)]
pub struct DivergenceReport {
    pub value: f64,
    pub method: DivergenceMethod,
    /// Combined quadrature statistics for the integral methods.
    pub quadrature: Option<QuadratureResult<f64>>,
    /// Per-branch values: `[γ ≥ 1 term, u ∈ (0,1) term]` for the γ-form,
    /// `[t > 1 branch, t < 0 branch]` for the t-form.
    pub terms: Vec<f64>,
    pub warnings: Vec<String>,
}

fn check_dims(a: &HermitianMatrix, b: &PositiveDefinite) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::input(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `D(A‖B) = Tr[A(log A − log B) + B − A]`, with `0·log 0 = 0`.
pub fn umegaki(a: &HermitianMatrix, b: &PositiveDefinite) -> Result<f64> {
    check_dims(a, b)?;
    let spectrum = check_psd(a, "A")?;
    let thr = spectrum.zero_threshold();
    let a_log_a: f64 = spectrum.eigenvalues.iter().filter(|&&l| l > thr).map(|&l| l * l.ln()).sum();
    let a_log_b = a.trace_product(&matrix_log(b));
    Ok(a_log_a - a_log_b + b.matrix().trace() - a.trace())
}

/// `E_γ(A‖B) = Tr[(A − γB)₊]` for `A, B ≥ 0` and `γ ≥ 0`.
pub fn hockey_stick(a: &HermitianMatrix, b: &HermitianMatrix, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::input(format!("gamma must be finite and nonnegative, got {gamma}")));
    }
    if a.dim() != b.dim() {
        return Err(Error::input(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    check_psd(a, "A")?;
    check_psd(b, "B")?;
    hockey_stick_unchecked(a, b, gamma)
}

/// `Tr[(A − γB)₊]` without validating its arguments.
pub fn hockey_stick_unchecked(a: &HermitianMatrix, b: &HermitianMatrix, gamma: f64) -> Result<f64> {
    positive_trace(&a.add_scaled(b, -gamma))
}

/// Shared geometry for both integral forms: the pencil spectrum of `(A, B)`.
struct FrenkelSetup {
    /// `max(1, λ_max(B^{-1/2} A B^{-1/2}))`.
    upper: f64,
    /// Pencil eigenvalues in `(1, upper)`: kinks of `γ ↦ E_γ(A‖B)`.
    gamma_breaks: Vec<f64>,
    /// Pencil eigenvalues in `(0, 1)`: kinks of `u ↦ Tr[(uB − A)₊]`, i.e. the
    /// reciprocals of the kinks of `γ ↦ E_γ(B‖A)` on `γ > 1`.
    u_breaks: Vec<f64>,
}

fn frenkel_setup(a: &HermitianMatrix, b: &PositiveDefinite) -> Result<FrenkelSetup> {
    check_dims(a, b)?;
    check_psd(a, "A")?;
    let pencil = pencil_eigenvalues(a, b)?;
    let upper = pencil.last().copied().unwrap_or(0.0).max(1.0);
    let gamma_breaks = pencil.iter().copied().filter(|&g| g > 1.0 && g < upper).collect();
    let u_breaks = pencil.iter().copied().filter(|&u| u > 0.0 && u < 1.0).collect();
    Ok(FrenkelSetup {
        upper,
        gamma_breaks,
        u_breaks,
    })
}

/// `∫₁^∞ {E_γ(A‖B)/γ + E_γ(B‖A)/γ²} dγ`.
pub fn frenkel_gamma(a: &HermitianMatrix, b: &PositiveDefinite, cfg: &QuadratureConfig) -> Result<DivergenceReport> {
    let setup = frenkel_setup(a, b)?;
    let bm = b.matrix();

    let first = if setup.upper > 1.0 {
        try_integrate_scalar(
            |g| Ok(hockey_stick_unchecked(a, bm, g)? / g),
            1.0,
            setup.upper,
            &setup.gamma_breaks,
            cfg,
        )?
    } else {
        QuadratureResult::zero()
    };

    let gamma_kinks: Vec<f64> = setup.u_breaks.iter().map(|u| 1.0 / u).collect();
    let second = try_compactify_reciprocal(
        |g| Ok(hockey_stick_unchecked(bm, a, g)? / (g * g)),
        1.0,
        &gamma_kinks,
        cfg,
    )?;

    let quad = first.combine(&second);
    let report = DivergenceReport {
        value: quad.value,
        method: DivergenceMethod::FrenkelGamma,
        terms: vec![first.value, second.value],
        quadrature: Some(quad.clone().require_converged()?),
        warnings: b.warnings().to_vec(),
    };
    Ok(report)
}

/// Integrand of the t-form: `Tr[((1−t)A + tB)₋] / (|t|(t−1)²)`.
fn t_form_integrand(a: &HermitianMatrix, b: &HermitianMatrix, t: f64) -> Result<f64> {
    let mixed = a.scale(1.0 - t).add_scaled(b, t);
    let negative_trace = positive_trace(&mixed.scale(-1.0))?;
    Ok(negative_trace / (t.abs() * (t - 1.0) * (t - 1.0)))
}

/// `∫ dt/(|t|(t−1)²) Tr[((1−t)A + tB)₋]` over the real line.
pub fn frenkel_t(a: &HermitianMatrix, b: &PositiveDefinite, cfg: &QuadratureConfig) -> Result<DivergenceReport> {
    let setup = frenkel_setup(a, b)?;
    let bm = b.matrix();

    // t > 1 with t = γ/(γ−1), |dt/dγ| = 1/(γ−1)².
    let upper_branch = if setup.upper > 1.0 {
        try_integrate_scalar(
            |g| {
                let t = g / (g - 1.0);
                Ok(t_form_integrand(a, bm, t)? / ((g - 1.0) * (g - 1.0)))
            },
            1.0,
            setup.upper,
            &setup.gamma_breaks,
            cfg,
        )?
    } else {
        QuadratureResult::zero()
    };

    // t < 0 with t = u/(u−1), |dt/du| = 1/(1−u)².
    let lower_branch = try_integrate_scalar(
        |u| {
            let t = u / (u - 1.0);
            Ok(t_form_integrand(a, bm, t)? / ((1.0 - u) * (1.0 - u)))
        },
        0.0,
        1.0,
        &setup.u_breaks,
        cfg,
    )?;

    let quad = upper_branch.combine(&lower_branch);
    Ok(DivergenceReport {
        value: quad.value,
        method: DivergenceMethod::FrenkelT,
        terms: vec![upper_branch.value, lower_branch.value],
        quadrature: Some(quad.clone().require_converged()?),
        warnings: b.warnings().to_vec(),
    })
}

/// Dispatches on `method`.
pub fn relative_entropy(
    a: &HermitianMatrix,
    b: &PositiveDefinite,
    method: DivergenceMethod,
    cfg: &QuadratureConfig,
) -> Result<DivergenceReport> {
    match method {
        DivergenceMethod::Umegaki => Ok(DivergenceReport {
            value: umegaki(a, b)?,
            method,
            quadrature: None,
            terms: Vec::new(),
            warnings: b.warnings().to_vec(),
        }),
        DivergenceMethod::FrenkelGamma => frenkel_gamma(a, b, cfg),
        DivergenceMethod::FrenkelT => frenkel_t(a, b, cfg),
    }
}
