//! Pressure law p, capillarity κ, and the effective potential
//!
//! ```text
//! F(v, c) = ∫_{v*}^{v} p(s) ds − p(v*)(v − v*) + ½ c² (v − v*)²
//! ```
//!
//! whose double root at the base state and simple root at the turning point
//! organize every solitary wave.

mod expr;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

pub use expr::Expr;

/// Open interval of admissible specific volumes. `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lower: None,
        upper: None,
    };
    pub const POSITIVE: Domain = Domain {
        lower: Some(0.0),
        upper: None,
    };

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.lower.is_none_or(|lo| v > lo) && self.upper.is_none_or(|hi| v < hi)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lower, self.upper) {
            (None, None) => write!(f, "(-inf, inf)"),
            (Some(lo), None) => write!(f, "({lo}, inf)"),
            (None, Some(hi)) => write!(f, "(-inf, {hi})"),
            (Some(lo), Some(hi)) => write!(f, "({lo}, {hi})"),
        }
    }
}

/// A model given by expressions for p and κ, with derivatives from symbolic differentiation.
#[derive(Debug, Clone)]
pub struct UserModel {
    pub p: Expr,
    pub kappa: Expr,
    dp: Expr,
    dkappa: Expr,
    pub params: BTreeMap<String, f64>,
    memo: Arc<Mutex<HashMap<(u64, u64), f64>>>,
}

impl PartialEq for UserModel {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.kappa == other.kappa && self.params == other.params
    }
}

const MEMO_CAPACITY: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// p(V) = −V + V^q, κ ≡ 1.
    BonaSachs {
        q: u32,
    },
    /// p(V) = α/V² − β/V³, κ(V) = 1/(4V⁴), on V > 0.
    GrossPitaevskii {
        alpha: f64,
        beta: f64,
    },
    UserDefined(UserModel),
}

/// An immutable pressure/capillarity model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    domain: Domain,
    label: String,
}

/// Base state and speed of a traveling wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParameters {
    pub v_star: f64,
    pub u_star: f64,
    pub c: f64,
}

impl WaveParameters {
    pub fn new(v_star: f64, c: f64) -> Self {
        Self {
            v_star,
            u_star: 0.0,
            c,
        }
    }

    pub fn with_u_star(mut self, u_star: f64) -> Self {
        self.u_star = u_star;
        self
    }

    pub fn with_speed(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}

/// F(v, c) together with its partial derivatives in v and c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValues {
    pub f: f64,
    pub f_v: f64,
    pub f_c: f64,
}

impl ModelSpec {
    pub fn bona_sachs(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidModel(format!(
                "bona-sachs exponent must be an integer >= 2, got {q}"
            )));
        }
        Ok(Self {
            kind: ModelKind::BonaSachs { q },
            domain: Domain::REAL_LINE,
            label: format!("bona-sachs:q={q}"),
        })
    }

    pub fn gross_pitaevskii(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "gross-pitaevskii needs alpha, beta > 0, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self {
            kind: ModelKind::GrossPitaevskii { alpha, beta },
            domain: Domain::POSITIVE,
            label: format!("gross-pitaevskii:alpha={alpha},beta={beta}"),
        })
    }

    /// Builds a model from expression sources for p and κ.
    pub fn parse(
        p_source: &str,
        kappa_source: &str,
        params: &BTreeMap<String, f64>,
        domain: Domain,
    ) -> Result<Self> {
        for (name, &value) in params {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "parameter `{name}` must be positive, got {value}"
                )));
            }
            if name == "v" {
                return Err(Error::InvalidModel(
                    "`v` is reserved for the variable".into(),
                ));
            }
        }
        let p = Expr::parse(p_source, params)?;
        let kappa = Expr::parse(kappa_source, params)?;
        let dp = p.derivative()?;
        let dkappa = kappa.derivative()?;
        Ok(Self {
            label: format!("user:p={};kappa={}", p_source.trim(), kappa_source.trim()),
            kind: ModelKind::UserDefined(UserModel {
                p,
                kappa,
                dp,
                dkappa,
                params: params.clone(),
                memo: Arc::new(Mutex::new(HashMap::new())),
            }),
            domain,
        })
    }

    /// Parses a built-in selector such as `bona-sachs:q=2` or
    /// `gross-pitaevskii:alpha=1,beta=1`.
    pub fn from_selector(selector: &str) -> Result<Self> {
        let (name, args) = selector.split_once(':').unwrap_or((selector, ""));
        let mut values = BTreeMap::new();
        for item in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::InvalidModel(format!("expected key=value in selector, got `{item}`"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidModel(format!(
                    "`{value}` is not a number in selector `{selector}`"
                ))
            })?;
            values.insert(key.trim().to_string(), value);
        }
        let take = |values: &mut BTreeMap<String, f64>, key: &str, default: f64| {
            values.remove(key).unwrap_or(default)
        };
        let model = match name.trim() {
            "bona-sachs" => {
                let q = take(&mut values, "q", 2.0);
                if q.fract() != 0.0 || q < 2.0 || q > u32::MAX as f64 {
                    return Err(Error::InvalidModel(format!(
                        "bona-sachs exponent must be an integer >= 2, got {q}"
                    )));
                }
                Self::bona_sachs(q as u32)?
            }
            "gross-pitaevskii" => {
                let alpha = take(&mut values, "alpha", 1.0);
                let beta = take(&mut values, "beta", 1.0);
                Self::gross_pitaevskii(alpha, beta)?
            }
            other => {
                return Err(Error::InvalidModel(format!(
                    "unknown built-in model `{other}`"
                )))
            }
        };
        if let Some(key) = values.keys().next() {
            return Err(Error::InvalidModel(format!(
                "unknown parameter `{key}` for `{name}`"
            )));
        }
        Ok(model)
    }

    /// Parses the key/value model file format:
    ///
    /// ```text
    /// # comment
    /// p = alpha/v^2 - beta/v^3
    /// kappa = 1/(4*v^4)
    /// params.alpha = 1
    /// params.beta = 1
    /// domain = 0, inf
    /// ```
    ///
    /// A file may instead name a built-in with `model = <selector>`.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut p = None;
        let mut kappa = None;
        let mut builtin = None;
        let mut domain = Domain::REAL_LINE;
        let mut params = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::InvalidModel(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "p" => p = Some(value.to_string()),
                "kappa" => kappa = Some(value.to_string()),
                "model" => builtin = Some(value.to_string()),
                "domain" => domain = parse_domain(value).map_err(|m| bad(&m))?,
                _ => {
                    let Some(name) = key.strip_prefix("params.") else {
                        return Err(bad(&format!("unknown key `{key}`")));
                    };
                    let number: f64 = value
                        .parse()
                        .map_err(|_| bad(&format!("`{value}` is not a number")))?;
                    params.insert(name.to_string(), number);
                }
            }
        }
        if let Some(selector) = builtin {
            return Self::from_selector(&selector);
        }
        match (p, kappa) {
            (Some(p), Some(kappa)) => Self::parse(&p, &kappa, &params, domain),
            _ => Err(Error::InvalidModel(
                "model file needs both `p` and `kappa` (or `model`)".into(),
            )),
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn check_domain(&self, v: f64) -> Result<()> {
        if self.domain.contains(v) {
            Ok(())
        } else {
            Err(Error::DomainViolation {
                v,
                domain: self.domain.to_string(),
            })
        }
    }

    fn finite(v: f64, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFiniteModel { v })
        }
    }

    /// Pressure p(v).
    pub fn pressure(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        let value = match &self.kind {
            ModelKind::BonaSachs { q } => -v + v.powi(*q as i32),
            ModelKind::GrossPitaevskii { alpha, beta } => {
                let inv = 1.0 / v;
                let inv2 = inv * inv;
                alpha * inv2 - beta * inv2 * inv
            }
            ModelKind::UserDefined(m) => m.p.eval(v),
        };
        Self::finite(v, value)
    }

    /// p′(v).
    pub fn pressure_derivative(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        let value = match &self.kind {
            ModelKind::BonaSachs { q } => -1.0 + *q as f64 * v.powi(*q as i32 - 1),
            ModelKind::GrossPitaevskii { alpha, beta } => {
                let inv = 1.0 / v;
                let inv3 = inv * inv * inv;
                -2.0 * alpha * inv3 + 3.0 * beta * inv3 * inv
            }
            ModelKind::UserDefined(m) => m.dp.eval(v),
        };
        Self::finite(v, value)
    }

    /// Capillarity κ(v); fails unless strictly positive.
    pub fn kappa(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        let value = match &self.kind {
            ModelKind::BonaSachs { .. } => 1.0,
            ModelKind::GrossPitaevskii { .. } => 0.25 / (v * v * v * v),
            ModelKind::UserDefined(m) => m.kappa.eval(v),
        };
        let value = Self::finite(v, value)?;
        if value > 0.0 {
            Ok(value)
        } else {
            Err(Error::NonPositiveCapillarity { v, kappa: value })
        }
    }

    /// κ′(v).
    pub fn kappa_derivative(&self, v: f64) -> Result<f64> {
        self.check_domain(v)?;
        let value = match &self.kind {
            ModelKind::BonaSachs { .. } => 0.0,
            ModelKind::GrossPitaevskii { .. } => -1.0 / (v * v * v * v * v),
            ModelKind::UserDefined(m) => m.dkappa.eval(v),
        };
        Self::finite(v, value)
    }

    /// p, κ and κ′ at every point of `v`, with the same checks as the scalar methods.
    pub fn evaluate_fields(
        &self,
        v: &[f64],
        p: &mut [f64],
        kappa: &mut [f64],
        kappa_v: &mut [f64],
    ) -> Result<()> {
        for &x in v {
            self.check_domain(x)?;
        }
        match &self.kind {
            ModelKind::BonaSachs { q } => {
                let q = *q as i32;
                for j in 0..v.len() {
                    let x = v[j];
                    p[j] = -x + if q == 2 { x * x } else { x.powi(q) };
                    kappa[j] = 1.0;
                    kappa_v[j] = 0.0;
                }
            }
            ModelKind::GrossPitaevskii { alpha, beta } => {
                for j in 0..v.len() {
                    let inv = 1.0 / v[j];
                    let inv2 = inv * inv;
                    let inv4 = inv2 * inv2;
                    p[j] = alpha * inv2 - beta * inv2 * inv;
                    kappa[j] = 0.25 * inv4;
                    kappa_v[j] = -inv4 * inv;
                }
            }
            ModelKind::UserDefined(m) => {
                for j in 0..v.len() {
                    p[j] = m.p.eval(v[j]);
                    kappa[j] = m.kappa.eval(v[j]);
                    kappa_v[j] = m.dkappa.eval(v[j]);
                }
            }
        }
        for j in 0..v.len() {
            if !(p[j].is_finite() && kappa[j].is_finite() && kappa_v[j].is_finite()) {
                return Err(Error::NonFiniteModel { v: v[j] });
            }
            if kappa[j] <= 0.0 {
                return Err(Error::NonPositiveCapillarity {
                    v: v[j],
                    kappa: kappa[j],
                });
            }
        }
        Ok(())
    }

    fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        self.check_domain(a)?;
        self.check_domain(b)
    }

    /// ∫_{v_ref}^{v} p(s) ds, i.e. −f(v) + f(v_ref) for the pressure potential f with −f′ = p.
    pub fn pressure_antiderivative_diff(&self, v: f64, v_ref: f64) -> Result<f64> {
        self.check_interval(v, v_ref)?;
        if v == v_ref {
            return Ok(0.0);
        }
        match &self.kind {
            ModelKind::BonaSachs { q } => {
                let k = *q as i32 + 1;
                Ok(-0.5 * (v * v - v_ref * v_ref) + (v.powi(k) - v_ref.powi(k)) / k as f64)
            }
            ModelKind::GrossPitaevskii { alpha, beta } => Ok(alpha * (1.0 / v_ref - 1.0 / v)
                + 0.5 * beta * (1.0 / (v * v) - 1.0 / (v_ref * v_ref))),
            ModelKind::UserDefined(_) => {
                let p_ref = self.pressure(v_ref)?;
                Ok(self.pressure_excess_integral(v, v_ref)? + p_ref * (v - v_ref))
            }
        }
    }

    /// ∫_{v_ref}^{v} (p(s) − p(v_ref)) ds.
    ///
    /// For user models this is integrated directly rather than formed as a
    /// difference, which keeps relative accuracy when v is close to v_ref.
    fn pressure_excess_integral(&self, v: f64, v_ref: f64) -> Result<f64> {
        if v == v_ref {
            return Ok(0.0);
        }
        match &self.kind {
            ModelKind::UserDefined(m) => {
                let key = (v.to_bits(), v_ref.to_bits());
                if let Some(&hit) = m.memo.lock().expect("memo poisoned").get(&key) {
                    return Ok(hit);
                }
                let (lo, hi) = if v_ref < v { (v_ref, v) } else { (v, v_ref) };
                // the domain is open and convex, so checking both ends covers the interval
                self.check_interval(lo, hi)?;
                let p_ref = self.pressure(v_ref)?;
                let value =
                    quadrature::adaptive(
                        v_ref,
                        v,
                        1e-12,
                        1e-14,
                        |s| Ok(self.pressure(s)? - p_ref),
                    )?;
                let mut memo = m.memo.lock().expect("memo poisoned");
                if memo.len() >= MEMO_CAPACITY {
                    memo.clear();
                }
                memo.insert(key, value);
                Ok(value)
            }
            ModelKind::BonaSachs { q } => {
                self.check_interval(v, v_ref)?;
                // ∫ (s^q − a^q) ds over [a, a + d] = Σ_{k≥2} C(q+1, k) a^{q+1−k} d^k / (q+1)
                let (a, d) = (v_ref, v - v_ref);
                let n = *q + 1;
                let mut binom = 1.0;
                let mut sum = 0.0;
                for k in 1..=n {
                    binom *= (n - k + 1) as f64 / k as f64;
                    if k >= 2 {
                        sum += binom * a.powi((n - k) as i32) * d.powi(k as i32);
                    }
                }
                Ok(-0.5 * d * d + sum / n as f64)
            }
            ModelKind::GrossPitaevskii { alpha, beta } => {
                self.check_interval(v, v_ref)?;
                let (a, b) = (v_ref, v);
                let d = b - a;
                let d2 = d * d;
                Ok(-alpha * d2 / (a * a * b)
                    + beta * d2 * (2.0 * b + a) / (2.0 * a * a * a * b * b))
            }
        }
    }

    /// F(v, c), F_v and F_c at `v`.
    pub fn potential(&self, params: &WaveParameters, v: f64) -> Result<PotentialValues> {
        let v_star = params.v_star;
        let c = params.c;
        let d = v - v_star;
        if d == 0.0 {
            self.check_domain(v)?;
            return Ok(PotentialValues {
                f: 0.0,
                f_v: 0.0,
                f_c: 0.0,
            });
        }
        let excess = self.pressure_excess_integral(v, v_star)?;
        let f = excess + 0.5 * c * c * d * d;
        let f_v = self.pressure(v)? - self.pressure(v_star)? + c * c * d;
        let f_c = c * d * d;
        Ok(PotentialValues { f, f_v, f_c })
    }

    /// F_vv(v*, c) = p′(v*) + c², negative exactly in the subsonic regime.
    pub fn base_curvature(&self, params: &WaveParameters) -> Result<f64> {
        Ok(self.pressure_derivative(params.v_star)? + params.c * params.c)
    }
}

fn parse_domain(text: &str) -> std::result::Result<Domain, String> {
    let (lo, hi) = text
        .split_once(',')
        .ok_or_else(|| format!("domain must be `lower, upper`, got `{text}`"))?;
    let bound = |s: &str, infinite: f64| -> std::result::Result<Option<f64>, String> {
        let s = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .trim();
        let x: f64 = match s {
            "inf" | "+inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            _ => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
        };
        Ok(if x == infinite { None } else { Some(x) })
    };
    let domain = Domain {
        lower: bound(lo, f64::NEG_INFINITY)?,
        upper: bound(hi, f64::INFINITY)?,
    };
    if let (Some(a), Some(b)) = (domain.lower, domain.upper) {
        if a >= b {
            return Err(format!("empty domain ({a}, {b})"));
        }
    }
    Ok(domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parsed_bona_sachs_pressure() {
        let m = ModelSpec::parse("-v + v^2", "1", &BTreeMap::new(), Domain::REAL_LINE).unwrap();
        assert_eq!(m.pressure(1.0).unwrap(), 0.0);
        assert_eq!(m.kappa(3.0).unwrap(), 1.0);
        assert_eq!(m.pressure_derivative(0.0).unwrap(), -1.0);
    }

    #[test]
    fn parsed_gross_pitaevskii_capillarity() {
        let m = ModelSpec::parse(
            "1/v^2 - 1/v^3",
            "1/(4*v^4)",
            &BTreeMap::new(),
            Domain::POSITIVE,
        )
        .unwrap();
        assert_eq!(m.kappa(2.0).unwrap(), 1.0 / 64.0);
        let gp = ModelSpec::gross_pitaevskii(1.0, 1.0).unwrap();
        for v in [0.5, 1.0, 2.0, 3.5] {
            assert!((m.pressure(v).unwrap() - gp.pressure(v).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn parse_error_surfaces_offset() {
        let err = ModelSpec::parse("v + ", "1", &BTreeMap::new(), Domain::REAL_LINE).unwrap_err();
        assert!(matches!(err, Error::Syntax { offset: 4, .. }));
        let err =
            ModelSpec::parse("v + gamma", "1", &BTreeMap::new(), Domain::REAL_LINE).unwrap_err();
        assert!(matches!(err, Error::UnknownIdentifier { .. }));
    }

    #[test]
    fn parameters_must_be_positive() {
        let err =
            ModelSpec::parse("a*v", "1", &params(&[("a", -1.0)]), Domain::REAL_LINE).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn antiderivative_closed_forms() {
        let bs = ModelSpec::bona_sachs(2).unwrap();
        assert!((bs.pressure_antiderivative_diff(1.0, 0.0).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        let gp = ModelSpec::gross_pitaevskii(1.0, 1.0).unwrap();
        assert!((gp.pressure_antiderivative_diff(1.0, 2.0).unwrap() + 0.125).abs() < 1e-15);
        assert_eq!(gp.pressure_antiderivative_diff(1.3, 1.3).unwrap(), 0.0);
    }

    #[test]
    fn user_antiderivative_by_quadrature() {
        let m = ModelSpec::parse(
            "alpha/v^2 - beta/v^3",
            "1/(4*v^4)",
            &params(&[("alpha", 1.0), ("beta", 1.0)]),
            Domain::POSITIVE,
        )
        .unwrap();
        let got = m.pressure_antiderivative_diff(1.0, 2.0).unwrap();
        assert!((got + 0.125).abs() < 1e-12);
        // memo hit returns the identical value
        assert_eq!(m.pressure_antiderivative_diff(1.0, 2.0).unwrap(), got);
    }

    #[test]
    fn domain_violations() {
        let gp = ModelSpec::gross_pitaevskii(1.0, 1.0).unwrap();
        assert!(matches!(
            gp.pressure_antiderivative_diff(-1.0, 2.0),
            Err(Error::DomainViolation { .. })
        ));
        assert!(gp.kappa(0.0).is_err());
        let bad = ModelSpec::parse("v", "v", &BTreeMap::new(), Domain::REAL_LINE).unwrap();
        assert!(matches!(
            bad.kappa(-1.0),
            Err(Error::NonPositiveCapillarity { .. })
        ));
        let pole = ModelSpec::parse("1/v", "1", &BTreeMap::new(), Domain::REAL_LINE).unwrap();
        assert!(matches!(
            pole.pressure(0.0),
            Err(Error::NonFiniteModel { .. })
        ));
    }

    #[test]
    fn potential_examples() {
        let bs = ModelSpec::bona_sachs(2).unwrap();
        let pv = bs.potential(&WaveParameters::new(0.0, 0.0), 1.0).unwrap();
        assert!((pv.f + 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(pv.f_v, 0.0);
        assert_eq!(pv.f_c, 0.0);

        let gp = ModelSpec::gross_pitaevskii(1.0, 1.0).unwrap();
        let pv = gp.potential(&WaveParameters::new(2.0, 0.0), 1.5).unwrap();
        let exact = -0.5 * 0.25 / (8.0 * 2.25);
        assert!((pv.f - exact).abs() < 1e-15);

        for c in [-0.7, 0.0, 0.3] {
            let at_base = gp.potential(&WaveParameters::new(2.0, c), 2.0).unwrap();
            assert_eq!(
                at_base,
                PotentialValues {
                    f: 0.0,
                    f_v: 0.0,
                    f_c: 0.0
                }
            );
        }
    }

    #[test]
    fn selectors() {
        let bs = ModelSpec::from_selector("bona-sachs:q=3").unwrap();
        assert_eq!(bs.kind(), &ModelKind::BonaSachs { q: 3 });
        assert_eq!(bs.label(), "bona-sachs:q=3");
        let gp = ModelSpec::from_selector("gross-pitaevskii:alpha=1,beta=2").unwrap();
        assert_eq!(
            gp.kind(),
            &ModelKind::GrossPitaevskii {
                alpha: 1.0,
                beta: 2.0
            }
        );
        assert!(ModelSpec::from_selector("bona-sachs:q=1").is_err());
        assert!(ModelSpec::from_selector("bona-sachs:q=2.5").is_err());
        assert!(ModelSpec::from_selector("gross-pitaevskii:alpha=0").is_err());
        assert!(ModelSpec::from_selector("van-der-waals").is_err());
        assert!(ModelSpec::from_selector("bona-sachs:r=2").is_err());
    }

    #[test]
    fn model_file_format() {
        let text = "# Gross-Pitaevskii written out\n\
                    p = alpha/v^2 - beta/v^3\n\
                    kappa = 1/(4*v^4)\n\
                    params.alpha = 1\n\
                    params.beta = 2   # trailing comment\n\
                    domain = 0, inf\n";
        let m = ModelSpec::parse_file(text).unwrap();
        assert_eq!(m.domain(), Domain::POSITIVE);
        assert!((m.pressure(1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(ModelSpec::parse_file("p = v\n").is_err());
        assert!(ModelSpec::parse_file("p = v\nkappa = 1\nfoo = 2\n").is_err());
        let builtin = ModelSpec::parse_file("model = bona-sachs:q=2\n").unwrap();
        assert_eq!(builtin.kind(), &ModelKind::BonaSachs { q: 2 });
    }
}
