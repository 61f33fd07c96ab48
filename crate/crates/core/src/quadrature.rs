//! Adaptive Gauss–Legendre quadrature with caller-supplied breakpoints.
//!
//! `[a, b]` is first cut at the breakpoints, then each panel is refined by
//! bisection. A panel's error estimate is `‖Q(panel) − (Q(left) + Q(right))‖`
//! with a roundoff floor of `50·ε·Σ wᵢ‖f(xᵢ)‖`; the panel with the largest
//! estimate is split until the summed estimate is below
//! `max(abs_tol, rel_tol·‖value‖)` or the panel budget is spent.
//!
//! Gauss–Legendre nodes are interior to every panel, so neither the interval
//! endpoints nor any breakpoint is ever evaluated. Integrands that are
//! discontinuous or undefined exactly at a breakpoint are therefore fine.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::HermitianMatrix;

/// Tolerances and limits for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Absolute tolerance for scalar integrals.
    pub abs_tol: f64,
    /// Absolute tolerance (Frobenius norm) for matrix-valued integrals.
    pub matrix_abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of panels.
    pub max_subdivisions: usize,
    /// Order of the Gauss–Legendre rule applied on each panel.
    pub nodes_per_panel: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            matrix_abs_tol: 1e-8,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            nodes_per_panel: 15,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.abs_tol) || !positive(self.matrix_abs_tol) || !positive(self.rel_tol) {
            return Err(Error::input("quadrature tolerances must be positive and finite"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::input("max_subdivisions must be at least 1"));
        }
        if self.nodes_per_panel < 2 {
            return Err(Error::input("nodes_per_panel must be at least 2"));
        }
        Ok(())
    }
}

/// Outcome of an adaptive integration.
///
/// A result whose tolerance was not met is still returned with
/// `converged == false`; [`QuadratureResult::require_converged`] turns that
/// into [`Error::ToleranceNotMet`].
#[derive(Debug, Clone)]
pub struct QuadratureResult<V> {
    pub value: V,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub panels: usize,
    pub tolerance: f64,
    pub converged: bool,
}

impl<V> QuadratureResult<V> {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::ToleranceNotMet {
                estimate: self.error_estimate,
                tolerance: self.tolerance,
                panels: self.panels,
            })
        }
    }

    pub fn map<W>(self, f: impl FnOnce(V) -> W) -> QuadratureResult<W> {
        QuadratureResult {
            value: f(self.value),
            error_estimate: self.error_estimate,
            evaluations: self.evaluations,
            panels: self.panels,
            tolerance: self.tolerance,
            converged: self.converged,
        }
    }
}

impl QuadratureResult<f64> {
    /// Result of integrating over an empty interval.
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            panels: 0,
            tolerance: 0.0,
            converged: true,
        }
    }

    /// Sum of two independent integrals; estimates and counts add.
    pub fn combine(&self, other: &Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            evaluations: self.evaluations + other.evaluations,
            panels: self.panels + other.panels,
            tolerance: self.tolerance + other.tolerance,
            converged: self.converged && other.converged,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of `P_n` by Newton iteration from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Value types the adaptive engine can accumulate.
trait Accumulate: Clone {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn size(&self) -> f64;
    fn distance(&self, other: &Self) -> f64;
}

impl Accumulate for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        *self += alpha * x;
    }
    fn size(&self) -> f64 {
        self.abs()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl Accumulate for DMatrix<Complex64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn axpy(&mut self, alpha: f64, x: &Self) {
        let a = Complex64::new(alpha, 0.0);
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += a * v;
        }
    }
    fn size(&self) -> f64 {
        self.norm()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

struct Panel<V> {
    a: f64,
    b: f64,
    left: V,
    right: V,
    err: f64,
    /// `|Q(panel) − (Q(left) + Q(right))|` is at roundoff level; bisecting cannot help.
    resolved: bool,
}

impl<V: Accumulate> Panel<V> {
    fn value(&self) -> V {
        let mut v = self.left.clone();
        v.axpy(1.0, &self.right);
        v
    }
}

struct Engine<'a, V, F> {
    f: F,
    rule: &'a GaussLegendre,
    evaluations: usize,
    _marker: std::marker::PhantomData<V>,
}

impl<V: Accumulate, F: FnMut(f64) -> Result<V>> Engine<'_, V, F> {
    /// Gauss–Legendre estimate on `[a, b]` and `Σ wᵢ‖f(xᵢ)‖` for the roundoff floor.
    fn rule_on(&mut self, a: f64, b: f64) -> Result<(V, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc: Option<V> = None;
        let mut abs = 0.0;
        for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let fx = (self.f)(mid + half * x)?;
            self.evaluations += 1;
            abs += w * half * fx.size();
            match acc.as_mut() {
                Some(s) => s.axpy(w * half, &fx),
                None => {
                    let mut s = fx.zero_like();
                    s.axpy(w * half, &fx);
                    acc = Some(s);
                }
            }
        }
        Ok((acc.expect("rule has at least one node"), abs))
    }

    fn panel(&mut self, a: f64, b: f64, coarse: V) -> Result<Panel<V>> {
        let mid = 0.5 * (a + b);
        let (left, abs_l) = self.rule_on(a, mid)?;
        let (right, abs_r) = self.rule_on(mid, b)?;
        let mut fine = left.clone();
        fine.axpy(1.0, &right);
        let diff = coarse.distance(&fine);
        let floor = 50.0 * f64::EPSILON * (abs_l + abs_r);
        // Panels too narrow to bisect meaningfully are treated as resolved.
        let too_narrow = !(a < mid && mid < b) || (b - a) <= 64.0 * f64::EPSILON * a.abs().max(b.abs());
        Ok(Panel {
            a,
            b,
            left,
            right,
            err: diff.max(floor),
            resolved: diff <= floor || too_narrow,
        })
    }
}

/// Sorts, clips to the open interval `(a, b)` and merges breakpoints closer than `merge_tol`.
pub fn merge_breakpoints(points: &[f64], a: f64, b: f64, merge_tol: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = points.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        let last = out.last().copied().unwrap_or(a);
        if p - last > merge_tol {
            out.push(p);
        }
    }
    while let Some(&last) = out.last() {
        if b - last <= merge_tol {
            out.pop();
        } else {
            break;
        }
    }
    out
}

fn adaptive<V, F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<V>>
where
    V: Accumulate,
    F: FnMut(f64) -> Result<V>,
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::input(format!("integration interval [{a}, {b}] must be finite with a < b")));
    }
    if let Some(&p) = breakpoints.iter().find(|&&p| !(p >= a && p <= b)) {
        return Err(Error::input(format!("breakpoint {p} lies outside [{a}, {b}]")));
    }
    let rule = GaussLegendre::new(cfg.nodes_per_panel);
    let mut engine = Engine {
        f,
        rule: &rule,
        evaluations: 0,
        _marker: std::marker::PhantomData,
    };

    let cuts = merge_breakpoints(breakpoints, a, b, 1e-14 * (b - a));
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut panels: Vec<Panel<V>> = Vec::with_capacity(edges.len() * 4);
    for w in edges.windows(2) {
        let (coarse, _) = engine.rule_on(w[0], w[1])?;
        panels.push(engine.panel(w[0], w[1], coarse)?);
    }

    let mut total = panels[0].value().zero_like();
    for p in &panels {
        total.axpy(1.0, &p.value());
    }
    let mut total_err: f64 = panels.iter().map(|p| p.err).sum();
    let target = |total: &V| abs_tol.max(cfg.rel_tol * total.size());

    while total_err > target(&total) && panels.len() < cfg.max_subdivisions {
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.resolved)
            .max_by(|(_, x), (_, y)| x.err.total_cmp(&y.err))
            .map(|(i, _)| i);
        let Some(i) = worst else { break };
        let parent = panels.swap_remove(i);
        let mid = 0.5 * (parent.a + parent.b);
        let left = engine.panel(parent.a, mid, parent.left.clone())?;
        let right = engine.panel(mid, parent.b, parent.right.clone())?;
        total.axpy(-1.0, &parent.value());
        total.axpy(1.0, &left.value());
        total.axpy(1.0, &right.value());
        total_err += left.err + right.err - parent.err;
        panels.push(left);
        panels.push(right);
    }

    // Fixed accumulation order so results are bit-stable for a given config.
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = panels[0].value().zero_like();
    for p in &panels {
        value.axpy(1.0, &p.value());
    }
    let error_estimate: f64 = panels.iter().map(|p| p.err).sum();
    let tolerance = target(&value);
    Ok(QuadratureResult {
        value,
        error_estimate,
        evaluations: engine.evaluations,
        panels: panels.len(),
        tolerance,
        converged: error_estimate <= tolerance,
    })
}

/// `∫_a^b f(x) dx` for a fallible scalar integrand.
pub fn try_integrate_scalar(
    f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<f64>> {
    adaptive(f, a, b, breakpoints, cfg.abs_tol, cfg)
}

/// `∫_a^b f(x) dx`, refining around the supplied breakpoints.
pub fn integrate_scalar(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<f64>> {
    adaptive(|x| Ok(f(x)), a, b, breakpoints, cfg.abs_tol, cfg)
}

/// Matrix-valued `∫_a^b F(x) dx` with Frobenius-norm error control. The result is symmetrized.
pub fn try_integrate_matrix(
    mut f: impl FnMut(f64) -> Result<HermitianMatrix>,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<HermitianMatrix>> {
    let res = adaptive(|x| f(x).map(HermitianMatrix::into_matrix), a, b, breakpoints, cfg.matrix_abs_tol, cfg)?;
    Ok(res.map(HermitianMatrix::symmetrized))
}

pub fn integrate_matrix(
    mut f: impl FnMut(f64) -> HermitianMatrix,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<HermitianMatrix>> {
    try_integrate_matrix(|x| Ok(f(x)), a, b, breakpoints, cfg)
}

/// `∫_Γ^∞ g(γ) dγ` via `u = 1/γ`, i.e. `∫_0^{1/Γ} g(1/u)/u² du`.
///
/// `breakpoints` are given in the `γ` variable; those in `(Γ, ∞)` are mapped to
/// `u = 1/γ`. The transformed integrand must extend continuously to `u = 0`;
/// it is never evaluated there.
pub fn try_compactify_reciprocal(
    mut g: impl FnMut(f64) -> Result<f64>,
    gamma0: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<f64>> {
    if !(gamma0.is_finite() && gamma0 > 0.0) {
        return Err(Error::input(format!("lower limit {gamma0} must be positive and finite")));
    }
    let upper = 1.0 / gamma0;
    let mapped: Vec<f64> = breakpoints
        .iter()
        .filter(|&&x| x > gamma0)
        .map(|&x| 1.0 / x)
        .filter(|&u| u > 0.0 && u < upper)
        .collect();
    adaptive(|u| Ok(g(1.0 / u)? / (u * u)), 0.0, upper, &mapped, cfg.abs_tol, cfg)
}

pub fn compactify_reciprocal(
    mut g: impl FnMut(f64) -> f64,
    gamma0: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult<f64>> {
    try_compactify_reciprocal(|x| Ok(g(x)), gamma0, breakpoints, cfg)
}
