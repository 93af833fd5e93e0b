//! Gauss–Legendre rules, composite integration with dyadic panel refinement,
//! and an adaptive bisecting variant for integrands of unknown smoothness.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on P_n from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
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

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over [a, b] with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Fallible variant of [`integrate`](Self::integrate).
    pub fn try_integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x)?;
        }
        Ok(sum * half)
    }
}

/// Legendre polynomial P_n(x) and its derivative by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 32-point rule used by the composite integrator.
pub fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

/// Shared 16-point rule used for short subintervals and adaptive panels.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Result of a refined quadrature: value and the last refinement difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Controls for [`composite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeOptions {
    /// Absolute difference between successive refinements that stops the loop.
    pub tolerance: f64,
    /// Upper bound on the panel count.
    pub max_panels: usize,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_panels: 40,
        }
    }
}

/// Composite 32-point Gauss–Legendre on [a, b], doubling the number of equal
/// panels until successive estimates agree to `tolerance` or the panel budget
/// is spent.
pub fn composite<F>(a: f64, b: f64, options: CompositeOptions, mut f: F) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let rule = gl32();
    let mut panels = 1usize;
    let mut previous = panel_sum(rule, a, b, panels, &mut f)?;
    let mut error = f64::INFINITY;
    while panels * 2 <= options.max_panels.max(2) {
        panels *= 2;
        let current = panel_sum(rule, a, b, panels, &mut f)?;
        error = (current - previous).abs();
        previous = current;
        if error < options.tolerance {
            break;
        }
    }
    if !previous.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integral on [{a}, {b}]"
        )));
    }
    Ok(Estimate {
        value: previous,
        error,
        panels,
    })
}

fn panel_sum<F>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, f: &mut F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        total += rule.try_integrate(lo, hi, &mut *f)?;
    }
    Ok(total)
}

/// Adaptive bisection with a 16-point rule: a panel is accepted once the
/// two-half estimate agrees with the whole-panel estimate to within
/// `max(abs_tol, rel_tol * |estimate|)` scaled by the panel's share of the interval.
pub fn adaptive<F>(a: f64, b: f64, abs_tol: f64, rel_tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let rule = gl16();
    let whole = rule.try_integrate(a, b, &mut f)?;
    let total_len = (b - a).abs();
    adaptive_step(rule, a, b, whole, abs_tol, rel_tol, total_len, 0, &mut f)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    abs_tol: f64,
    rel_tol: f64,
    total_len: f64,
    depth: usize,
    f: &mut F,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mid = 0.5 * (a + b);
    let left = rule.try_integrate(a, mid, &mut *f)?;
    let right = rule.try_integrate(mid, b, &mut *f)?;
    let refined = left + right;
    let share = (b - a).abs() / total_len;
    let tol = (abs_tol * share).max(rel_tol * refined.abs());
    if (refined - whole).abs() <= tol {
        return Ok(refined);
    }
    if depth >= 40 {
        return Err(Error::Quadrature(format!(
            "adaptive refinement did not converge on [{a}, {b}]"
        )));
    }
    let l = adaptive_step(
        rule,
        a,
        mid,
        left,
        abs_tol,
        rel_tol,
        total_len,
        depth + 1,
        f,
    )?;
    let r = adaptive_step(
        rule,
        mid,
        b,
        right,
        abs_tol,
        rel_tol,
        total_len,
        depth + 1,
        f,
    )?;
    Ok(l + r)
}
