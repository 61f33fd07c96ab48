//! One randomized trial per function. Each returns the observed residual and
//! the bound it must stay under.

use crate::divergences::{frenkel_gamma, hockey_stick_unchecked, umegaki};
use crate::error::{Error, Result};
use crate::frechet::{dlog_daleckii_krein, dlog_finite_difference};
use crate::layercake::{layer_cake_positive, layer_cake_two_sided};
use crate::matrix::HermitianMatrix;
use crate::quadrature::QuadratureConfig;
use crate::spectral::{
    eig_hermitian, hs_inner, operator_norm, pencil_eigenvalues, positive_projection, positive_trace, trace_norm,
    PositiveDefinite,
};

use super::instance::{InstanceKind, TrialRng};

/// Result of a single trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub residual: f64,
    /// The trial passes when `residual <= allowed`. Finite-difference checks
    /// widen this to the truncation error they can expect at their step size.
    pub allowed: f64,
}

impl TrialOutcome {
    fn new(residual: f64, allowed: f64) -> Self {
        Self { residual, allowed }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.allowed
    }

    /// Residual rescaled so that `tol` is the pass threshold.
    pub fn normalized(&self, tol: f64) -> f64 {
        if self.allowed == tol || self.allowed == 0.0 {
            self.residual
        } else {
            self.residual * tol / self.allowed
        }
    }

    fn worst(self, other: Self) -> Self {
        let ratio = |o: &Self| if o.allowed > 0.0 { o.residual / o.allowed } else { o.residual };
        if ratio(&other) > ratio(&self) || other.residual.is_nan() {
            other
        } else {
            self
        }
    }
}

/// Relative error of a central difference with truncation constant `c` at step `h`.
fn fd_outcome(err: f64, magnitude: f64, tol: f64, c: f64, h: f64) -> TrialOutcome {
    let denom = magnitude.max(1.0);
    TrialOutcome::new(err / denom, tol.max(c * h * h / denom))
}

/// Central-difference step: no larger than `default`, small enough that the
/// truncation bound `c·h²` stays under half of `tol_abs`, but not so small
/// that cancellation in function values of size `noise` exceeds it.
fn fd_step(default: f64, c: f64, tol_abs: f64, noise: f64) -> f64 {
    let truncation = (0.5 * tol_abs / c).sqrt();
    let cancellation = 20.0 * f64::EPSILON * noise / tol_abs;
    default.min(truncation).max(cancellation)
}

fn relative(err: f64, magnitude: f64, tol: f64) -> TrialOutcome {
    TrialOutcome::new(err / magnitude.max(1.0), tol)
}

fn frob_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).norm()
}

fn min_abs_eigenvalue(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.eigenvalues.iter().fold(f64::INFINITY, |acc, l| acc.min(l.abs())))
}

/// Relative eigenvalue margin required between a sampled point and the set
/// where an eigenvalue crosses zero.
const SINGULAR_MARGIN: f64 = 1e-3;
const MAX_REJECTIONS: usize = 200;

fn no_sample(what: &str) -> Error {
    Error::NumericalFailure(format!("could not sample {what} away from the singular set"))
}

struct Triple {
    a: HermitianMatrix,
    b: PositiveDefinite,
    h: HermitianMatrix,
}

/// The instance shared by the three equivalence checks: `A ≥ 0` of cycling
/// rank, `B > 0` and a Hermitian direction.
fn equivalence_instance(rng: &mut TrialRng) -> Result<Triple> {
    let a = rng.matrix(InstanceKind::PsdRankDeficient(rng.rank()), 1.0)?;
    let b = PositiveDefinite::new(rng.matrix(InstanceKind::Pd, 1.0)?)?;
    let h = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    Ok(Triple { a, b, h })
}

/// Frenkel γ-integral against the closed-form relative entropy.
pub(crate) fn equivalence_iii(rng: &mut TrialRng, tol: f64, cfg: &QuadratureConfig) -> Result<TrialOutcome> {
    let Triple { a, b, .. } = equivalence_instance(rng)?;
    let truth = umegaki(&a, &b)?;
    let integral = frenkel_gamma(&a, &b, cfg)?.value;
    Ok(relative((integral - truth).abs(), truth.abs(), tol))
}

/// One-sided layer cake for `A ≥ 0` against Daleckii–Krein.
pub(crate) fn equivalence_ii(rng: &mut TrialRng, tol: f64, cfg: &QuadratureConfig) -> Result<TrialOutcome> {
    let Triple { a, b, .. } = equivalence_instance(rng)?;
    let truth = dlog_daleckii_krein(&b, &a);
    let integral = layer_cake_positive(&b, &a, cfg)?.value;
    Ok(relative(frob_diff(&integral, &truth), truth.frobenius_norm(), tol))
}

/// Two-sided layer cake for Hermitian `H` against Daleckii–Krein.
pub(crate) fn equivalence_i(rng: &mut TrialRng, tol: f64, cfg: &QuadratureConfig) -> Result<TrialOutcome> {
    let Triple { b, h, .. } = equivalence_instance(rng)?;
    let truth = dlog_daleckii_krein(&b, &h);
    let integral = layer_cake_two_sided(&b, &h, cfg)?.value;
    Ok(relative(frob_diff(&integral, &truth), truth.frobenius_norm(), tol))
}

/// `d/dt D(A‖B+tX)|₀ = −Tr[A·D log[B](X)] + Tr X`.
pub(crate) fn derivative_identity(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let a = rng.matrix(InstanceKind::PsdRankDeficient(rng.rank()), 1.0)?;
    let b = PositiveDefinite::new(rng.matrix(InstanceKind::Pd, 1.0)?)?;
    let x = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let xn = operator_norm(&x)?;
    if xn == 0.0 {
        return Ok(TrialOutcome::new(0.0, tol));
    }
    let lmin = b.min_eigenvalue();
    let exact = -hs_inner(&a, &dlog_daleckii_krein(&b, &x)) + x.trace();
    let c = 10.0 * (xn / lmin).powi(3) * a.trace().max(1.0);
    // log(B ± hX) carries relative error ε·cond(B) in every eigenvalue.
    let noise = a.trace() * b.condition_number() + umegaki(&a, &b)?.abs();
    let h = fd_step(1e-5 * b.eigen().operator_norm() / xn, c, tol * exact.abs().max(1.0), noise).min(0.5 * lmin / xn);
    let plus = PositiveDefinite::new(b.matrix().add_scaled(&x, h))?;
    let minus = PositiveDefinite::new(b.matrix().add_scaled(&x, -h))?;
    let fd = (umegaki(&a, &plus)? - umegaki(&a, &minus)?) / (2.0 * h);
    Ok(fd_outcome((fd - exact).abs(), exact.abs(), tol, c, h))
}

/// `Tr[(K − σX)₊]`-type central difference against `∓Tr[X·P]` where `P` is the
/// positive projection at the sample point.
fn kink_free_partial(
    k: &HermitianMatrix,
    dir: &HermitianMatrix,
    margin: f64,
    tol: f64,
    step_hint: f64,
) -> Result<TrialOutcome> {
    let dn = operator_norm(dir)?;
    if dn == 0.0 {
        return Ok(TrialOutcome::new(0.0, tol));
    }
    let exact = hs_inner(dir, positive_projection(k)?.matrix());
    let c = 10.0 * k.dim() as f64 * dn.powi(3) / (margin * margin);
    let noise = k.dim() as f64 * operator_norm(k)?;
    // The step never reaches the nearest sign change of an eigenvalue.
    let h = fd_step(step_hint, c, tol * exact.abs().max(1.0), noise).min(0.1 * margin / dn);
    let fd = (positive_trace(&k.add_scaled(dir, h))? - positive_trace(&k.add_scaled(dir, -h))?) / (2.0 * h);
    Ok(fd_outcome((fd - exact).abs(), exact.abs(), tol, c, h))
}

/// Both partial derivatives of the hockey-stick divergence along Hermitian
/// perturbations of its arguments.
pub(crate) fn hockey_stick_partials(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let b = PositiveDefinite::new(rng.matrix(InstanceKind::Pd, 1.0)?)?;
    let x = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let hdir = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let reach = 0.25 * b.min_eigenvalue() / operator_norm(&x)?.max(operator_norm(&hdir)?).max(f64::MIN_POSITIVE);
    let s = rng.uniform(-reach, reach);
    let t = rng.uniform(-reach, reach);
    let p = b.matrix().add_scaled(&x, s);
    let q = b.matrix().add_scaled(&hdir, t);
    let q_pd = PositiveDefinite::new(q.clone())?;
    // Both partials are singular exactly where γ or 1/γ is an eigenvalue of
    // the pencil (B+sX, B+tH).
    let pencil = pencil_eigenvalues(&p, &q_pd)?;
    let top = pencil.last().copied().unwrap_or(1.0);
    let pn = operator_norm(&p)?;

    for _ in 0..MAX_REJECTIONS {
        let gamma = rng.uniform(0.0, 2.0 * top);
        let near = pencil
            .iter()
            .any(|&l| (gamma - l).abs() < SINGULAR_MARGIN * top || (gamma * l - 1.0).abs() < SINGULAR_MARGIN);
        if near {
            continue;
        }
        // d/ds E_γ(B+sX‖B+tH) = Tr[X{B+sX > γ(B+tH)}]
        let k1 = p.add_scaled(&q, -gamma);
        // d/ds E_γ(B+tH‖B+sX) = −γ·Tr[X{γ(B+sX) < B+tH}]
        let k2 = q.add_scaled(&p, -gamma);
        let (m1, m2) = (min_abs_eigenvalue(&k1)?, min_abs_eigenvalue(&k2)?);
        let step = 1e-5 * pn / operator_norm(&x)?.max(f64::MIN_POSITIVE);
        let first = kink_free_partial(&k1, &x, m1, tol, step)?;
        if gamma == 0.0 {
            return Ok(first);
        }
        let second = kink_free_partial(&k2, &x.scale(-gamma), m2, tol, step / gamma)?;
        return Ok(first.worst(second));
    }
    Err(no_sample("γ"))
}

/// `d/dt Tr[(K − tL)₊] = −Tr[L{K > tL}]` away from the singular set.
pub(crate) fn lemma_differentiability(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let k = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let l = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let (kn, ln) = (operator_norm(&k)?, operator_norm(&l)?);
    for _ in 0..MAX_REJECTIONS {
        let t = rng.uniform(-2.0, 2.0);
        let scale = kn + t.abs() * ln;
        let m = k.add_scaled(&l, -t);
        let margin = min_abs_eigenvalue(&m)?;
        if margin < SINGULAR_MARGIN * scale {
            continue;
        }
        let step = 1e-5 * scale / ln.max(f64::MIN_POSITIVE);
        return kink_free_partial(&m, &l.scale(-1.0), margin, tol, step);
    }
    Err(no_sample("t"))
}

/// `|Tr[X₊] − Tr[Y₊]| ≤ ‖X − Y‖₁`, half the trials on nearly equal pairs.
pub(crate) fn lipschitz(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let x = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let y = if rng.sign() > 0.0 {
        x.add_scaled(&rng.matrix(InstanceKind::Hermitian, 1.0)?, 1e-8)
    } else {
        rng.matrix(InstanceKind::Hermitian, 1.0)?
    };
    let lhs = (positive_trace(&x)? - positive_trace(&y)?).abs();
    let rhs = trace_norm(&x.add_scaled(&y, -1.0))?;
    let size = trace_norm(&x)? + trace_norm(&y)?;
    if size == 0.0 {
        return Ok(TrialOutcome::new(0.0, tol));
    }
    Ok(TrialOutcome::new((lhs - rhs).max(0.0) / size, tol))
}

/// `⟨A, D log[B](X)⟩ = ⟨D log[B](A), X⟩`.
pub(crate) fn self_adjointness(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let a = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let x = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let b = PositiveDefinite::new(rng.matrix(InstanceKind::Pd, 1.0)?)?;
    let lhs = hs_inner(&a, &dlog_daleckii_krein(&b, &x));
    let rhs = hs_inner(&dlog_daleckii_krein(&b, &a), &x);
    let size = a.frobenius_norm() * x.frobenius_norm() / b.min_eigenvalue();
    if size == 0.0 {
        return Ok(TrialOutcome::new(0.0, tol));
    }
    Ok(TrialOutcome::new((lhs - rhs).abs() / size, tol))
}

/// `|E_γ(A‖B+tX) − E_γ(A‖B)| ≤ |t|·γ·‖X‖₁`, with `|t|` log-uniform.
pub(crate) fn dominated_quotient_bound(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let a = rng.matrix(InstanceKind::PsdRankDeficient(rng.rank()), 1.0)?;
    let b = PositiveDefinite::new(rng.matrix(InstanceKind::Pd, 1.0)?)?;
    let x = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let xn = operator_norm(&x)?;
    if xn == 0.0 {
        return Ok(TrialOutcome::new(0.0, tol));
    }
    let r = pencil_eigenvalues(&a, &b)?.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let gamma = rng.uniform(0.01, 2.0) * r;
    let t0 = 0.5 * b.min_eigenvalue() / xn;
    let lo = 1e-4f64.min(1e-2 * t0);
    let t = rng.sign() * (lo.ln() + (t0.ln() - lo.ln()) * rng.uniform(0.0, 1.0)).exp();
    let moved = hockey_stick_unchecked(&a, &b.matrix().add_scaled(&x, t), gamma)?;
    let base = hockey_stick_unchecked(&a, b.matrix(), gamma)?;
    let bound = t.abs() * gamma * trace_norm(&x)?;
    Ok(TrialOutcome::new(((moved - base).abs() - bound).max(0.0) / bound, tol))
}

/// `Tr[(B+sX)·log(B+tH)]`.
fn cross_trace(b: &HermitianMatrix, x: &HermitianMatrix, hdir: &HermitianMatrix, s: f64, t: f64) -> Result<f64> {
    let log = crate::spectral::matrix_log(&PositiveDefinite::new(b.add_scaled(hdir, t))?);
    Ok(b.add_scaled(x, s).trace_product(&log))
}

/// Nested central difference of [`cross_trace`] at the origin, differencing
/// `s` first (inner) or `t` first.
fn nested_mixed(
    b: &HermitianMatrix,
    x: &HermitianMatrix,
    hdir: &HermitianMatrix,
    hs: f64,
    ht: f64,
    s_first: bool,
) -> Result<f64> {
    let f = |s: f64, t: f64| cross_trace(b, x, hdir, s, t);
    if s_first {
        let inner = |t: f64| -> Result<f64> { Ok((f(hs, t)? - f(-hs, t)?) / (2.0 * hs)) };
        Ok((inner(ht)? - inner(-ht)?) / (2.0 * ht))
    } else {
        let inner = |s: f64| -> Result<f64> { Ok((f(s, ht)? - f(s, -ht)?) / (2.0 * ht)) };
        Ok((inner(hs)? - inner(-hs)?) / (2.0 * hs))
    }
}

/// A well-conditioned `B`: the second differences below lose `cond(B)·ε/h`
/// to cancellation, so `B` is kept away from singular.
fn conditioned_pd(rng: &mut TrialRng, shift: f64) -> Result<PositiveDefinite> {
    let b = rng.matrix(InstanceKind::Pd, 1.0)?;
    PositiveDefinite::new(b.add_scaled(&HermitianMatrix::identity(b.dim()), shift))
}

/// `∂²/∂s∂t Tr[(B+sX)·log(B+tH)]|₀ = Tr[X·D log[B](H)]`, differenced in both
/// orders. The same mixed partial of `D(B+sX‖B+tH)` is its negative, since
/// the remaining terms of the divergence depend on one variable only.
pub(crate) fn mixed_partials(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let b = conditioned_pd(rng, 0.5)?;
    let x = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let hdir = rng.matrix(InstanceKind::Hermitian, 1.0)?;
    let (xn, hn) = (operator_norm(&x)?, operator_norm(&hdir)?);
    if xn == 0.0 || hn == 0.0 {
        return Ok(TrialOutcome::new(0.0, tol));
    }
    let lmin = b.min_eigenvalue();
    let exact = hs_inner(&x, &dlog_daleckii_krein(&b, &hdir));
    // Affine in s: the s-step adds no truncation error, only the t-step does.
    let hs = 1.0 / xn;
    let c = 10.0 * xn * hn.powi(3) / lmin.powi(3);
    let noise = b.dim() as f64 * b.condition_number() * (b.eigen().operator_norm() + 1.0);
    let ht = fd_step(1e-3 * lmin / hn, c, tol * exact.abs().max(1.0), noise);
    // Different t-steps so the two orders are distinct stencils.
    let st = nested_mixed(b.matrix(), &x, &hdir, hs, ht, true)?;
    let ts = nested_mixed(b.matrix(), &x, &hdir, 2.0 * hs, 0.5 * ht, false)?;
    let first = fd_outcome((st - exact).abs(), exact.abs(), tol, c, ht);
    let second = fd_outcome((ts - exact).abs(), exact.abs(), tol, c, 0.5 * ht);
    let orders = fd_outcome((st - ts).abs(), exact.abs(), tol, c, ht);
    Ok(first.worst(second).worst(orders))
}

/// Error of each finite-difference quantity at step `h`, signed where scalar.
fn convergence_errors(
    b: &PositiveDefinite,
    a: &HermitianMatrix,
    x: &HermitianMatrix,
    k: &HermitianMatrix,
    l: &HermitianMatrix,
    h: f64,
) -> Result<Vec<f64>> {
    let dk = dlog_daleckii_krein(b, x);
    let dlog = frob_diff(&dlog_finite_difference(b, x, h)?, &dk);

    let plus = PositiveDefinite::new(b.matrix().add_scaled(x, h))?;
    let minus = PositiveDefinite::new(b.matrix().add_scaled(x, -h))?;
    let fd = (umegaki(a, &plus)? - umegaki(a, &minus)?) / (2.0 * h);
    let derivative = fd - (-hs_inner(a, &dk) + x.trace());

    let mixed = nested_mixed(b.matrix(), l, x, 1.0, h, true)? - hs_inner(l, &dk);

    let mut errs = vec![dlog, derivative, mixed];
    if k.dim() >= 2 {
        let ptr = |m: &HermitianMatrix| positive_trace(m);
        let fd = (ptr(&k.add_scaled(l, -h))? - ptr(&k.add_scaled(l, h))?) / (2.0 * h);
        errs.push(fd + hs_inner(l, positive_projection(k)?.matrix()));
    }
    Ok(errs)
}

/// Step used by the convergence probe; errors are compared at `h` and `h/2`.
pub(crate) const PROBE_STEP: f64 = 1e-2;

/// Halving the step of each central difference divides its error by about four.
pub(crate) fn convergence_order(rng: &mut TrialRng, tol: f64, _: &QuadratureConfig) -> Result<TrialOutcome> {
    let b = conditioned_pd(rng, 1.0)?;
    let a = rng.matrix(InstanceKind::PsdRankDeficient(rng.rank()), 0.5)?;
    let x = rng.matrix(InstanceKind::Hermitian, 0.5)?;
    let l = rng.matrix(InstanceKind::Hermitian, 0.5)?;
    // Near a sign change of K the positive trace is only piecewise smooth;
    // keep every eigenvalue far outside the stencil.
    let reach = 20.0 * PROBE_STEP * operator_norm(&l)?;
    let mut k = rng.matrix(InstanceKind::TracelessHermitian, 1.0)?;
    let mut tries = 0;
    while min_abs_eigenvalue(&k)? < reach {
        tries += 1;
        if tries > MAX_REJECTIONS {
            return Err(no_sample("K"));
        }
        k = rng.matrix(InstanceKind::TracelessHermitian, 1.0)?;
    }
    let coarse = convergence_errors(&b, &a, &x, &k, &l, PROBE_STEP)?;
    let fine = convergence_errors(&b, &a, &x, &k, &l, PROBE_STEP / 2.0)?;
    let worst = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (c / f - 4.0).abs())
        .fold(0.0, |acc: f64, r| if r.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(r) });
    Ok(TrialOutcome::new(worst, tol))
}
