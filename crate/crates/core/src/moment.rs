//! The moment of instability m(c) = ∫ κ(v) v′² dξ and its speed derivatives.
//!
//! All three quantities are integrals between v* and the turning point v_m.
//! They are evaluated in w = √|v − v_m| (dv = 2w dw up to orientation), where
//!
//! ```text
//! m   =  4 ∫₀^W √κ √(−2F) w dw
//! m′  = −4 ∫₀^W √κ F_c / √(−2F) w dw
//! m″  =  4 ∫₀^W (A + B) / (√κ (−2F)^{3/2}) w dw
//! A   =  F κ_v v_m′ F_c
//! B   =  κ (v−v*) [ 2F ((v−v*) + 2c v_m′) − c (v−v*) (F_v v_m′ + F_c) ]
//! ```
//!
//! with W = √|v_m − v*|. Every integrand is smooth in w on [0, W]: the
//! square-root behavior at v_m and the double root at v* both cancel. For
//! depression waves (v_m < v*) the same formulas hold with the interval
//! taken from v_m up to v*.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::model::{ModelSpec, WaveParameters};
use crate::profile::{
    find_turning_point, Direction, Profile, TurningOptions, WaveGeometry, WavePoint,
};
use crate::quadrature::{self, CompositeOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOptions {
    pub quadrature: CompositeOptions,
    pub turning: TurningOptions,
    /// |m″| below this is too close to call.
    pub verdict_tolerance: f64,
    /// Endpoint offset, as a fraction of |v_m − v*|, for the m″ integrand limits.
    pub endpoint_offset: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self {
            quadrature: CompositeOptions::default(),
            turning: TurningOptions::default(),
            verdict_tolerance: 1e-8,
            endpoint_offset: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Standing wave (c = 0): never orbitally stable.
    UnstableStanding,
    /// m″(c) < 0: m fails to be convex, so the wave is orbitally unstable.
    UnstableNonconvex,
    /// m″(c) ≥ 0: the convexity test says nothing about stability.
    CriterionInconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::UnstableStanding => "UnstableStanding",
            Verdict::UnstableNonconvex => "UnstableNonconvex",
            Verdict::CriterionInconclusive => "CriterionInconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimates {
    pub m: f64,
    pub m_prime: f64,
    pub m_second: f64,
}

/// m, m′, m″ at one speed with the resulting stability call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub model: String,
    pub v_star: f64,
    pub u_star: f64,
    pub c: f64,
    pub v_m: f64,
    pub direction: Direction,
    pub v_m_prime: f64,
    pub m: f64,
    pub m_prime: f64,
    pub m_second: f64,
    pub quadrature_error_estimates: ErrorEstimates,
    pub verdict: Verdict,
    /// |m″| below the verdict tolerance.
    pub near_zero: bool,
    /// A standing wave whose computed m″ is not negative.
    pub numerical_inconsistency: bool,
    /// The m″ endpoint extrapolations disagreed.
    pub endpoint_flag: bool,
}

/// Verdict together with the flags raised while deciding it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assessment {
    pub verdict: Verdict,
    pub near_zero: bool,
    pub numerical_inconsistency: bool,
}

/// Applies the convexity criterion to a speed and its m″.
pub fn assess(c: f64, m_second: f64, tolerance: f64) -> Assessment {
    let near_zero = m_second.abs() < tolerance;
    if c == 0.0 {
        return Assessment {
            verdict: Verdict::UnstableStanding,
            near_zero,
            numerical_inconsistency: !(m_second < 0.0),
        };
    }
    let verdict = if m_second < -tolerance {
        Verdict::UnstableNonconvex
    } else {
        Verdict::CriterionInconclusive
    };
    Assessment {
        verdict,
        near_zero,
        numerical_inconsistency: false,
    }
}

/// The verdict implied by a report's speed and m″.
pub fn stability_verdict(report: &MomentReport, tolerance: f64) -> Verdict {
    assess(report.c, report.m_second, tolerance).verdict
}

/// Pointwise decomposition of the m″ integrand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDerivativeIntegrand {
    pub w: f64,
    pub v: f64,
    pub a: f64,
    pub b: f64,
    /// 2w(A + B) / (√κ (−2F)^{3/2}); m″ = 2 ∫₀^W combined dw.
    pub combined: f64,
}

/// m″ with its integrand samples and endpoint limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondDerivative {
    pub value: f64,
    pub error: f64,
    pub samples: Vec<SecondDerivativeIntegrand>,
    /// Extrapolated integrand limits at the turning point (w = 0) and the base state (w = W).
    pub endpoint_limits: [f64; 2],
    /// Set when successive Richardson extrapolations disagree beyond 1e-6 relative.
    pub endpoint_flag: bool,
}

/// Shared state for the integrals of one wave.
struct MomentIntegrals<'a> {
    geom: WaveGeometry<'a>,
    options: MomentOptions,
}

impl<'a> MomentIntegrals<'a> {
    fn new(model: &'a ModelSpec, params: &WaveParameters, options: &MomentOptions) -> Result<Self> {
        let turning = find_turning_point(model, params, &options.turning)?;
        Ok(Self {
            geom: WaveGeometry::new(model, *params, turning)?,
            options: *options,
        })
    }

    fn integrate<F>(&self, mut integrand: F) -> Result<quadrature::Estimate>
    where
        F: FnMut(f64, &WavePoint) -> f64,
    {
        quadrature::composite(0.0, self.geom.w_max(), self.options.quadrature, |w| {
            let pt = self.geom.at_w(w)?;
            Ok(integrand(w, &pt))
        })
    }

    fn moment(&self) -> Result<quadrature::Estimate> {
        let est = self
            .integrate(|w, pt| 4.0 * pt.kappa.sqrt() * WaveGeometry::minus_two_f(pt).sqrt() * w)?;
        Ok(est)
    }

    fn moment_prime(&self) -> Result<quadrature::Estimate> {
        if self.geom.params.c == 0.0 {
            // F_c(·, 0) ≡ 0
            return Ok(quadrature::Estimate {
                value: 0.0,
                error: 0.0,
                panels: 0,
            });
        }
        self.integrate(|w, pt| {
            let m2f = WaveGeometry::minus_two_f(pt);
            -4.0 * pt.kappa.sqrt() * pt.pot.f_c / m2f.sqrt() * w
        })
    }

    fn decompose(&self, w: f64, pt: &WavePoint) -> SecondDerivativeIntegrand {
        let c = self.geom.params.c;
        let vmp = self.geom.turning.v_m_prime;
        let d = pt.v - self.geom.params.v_star;
        let f = pt.pot.f;
        let a = f * pt.kappa_v * vmp * pt.pot.f_c;
        let b = pt.kappa
            * (d * (2.0 * f * (d + 2.0 * c * vmp) - c * d * (pt.pot.f_v * vmp + pt.pot.f_c)));
        let m2f = WaveGeometry::minus_two_f(pt);
        let combined = 2.0 * w * (a + b) / (pt.kappa.sqrt() * m2f * m2f.sqrt());
        SecondDerivativeIntegrand {
            w,
            v: pt.v,
            a,
            b,
            combined,
        }
    }

    fn moment_second_value(&self) -> Result<quadrature::Estimate> {
        let mut est = self.integrate(|w, pt| self.decompose(w, pt).combined)?;
        est.value *= 2.0;
        est.error *= 2.0;
        Ok(est)
    }

    /// Integrand limit at one end from offsets t, t/2, t/4 in v: returns the
    /// finer Richardson value and whether the two extrapolations disagree.
    fn endpoint_limit(&self, at_turning_point: bool) -> Result<(f64, bool)> {
        let span = self.geom.span;
        let h = self.options.endpoint_offset;
        let g = |t: f64| -> Result<f64> {
            let w = if at_turning_point {
                (t * span).sqrt()
            } else {
                (span - t * span).sqrt()
            };
            Ok(self.decompose(w, &self.geom.at_w(w)?).combined)
        };
        let (g1, g2, g4) = (g(h)?, g(0.5 * h)?, g(0.25 * h)?);
        let coarse = 2.0 * g2 - g1;
        let fine = 2.0 * g4 - g2;
        // the limit itself may vanish (at v* when c = 0), so compare against the samples too
        let scale = fine.abs().max(g1.abs()).max(1e-300);
        Ok((fine, (coarse - fine).abs() > 1e-6 * scale))
    }

    fn moment_second(&self, sample_count: usize) -> Result<SecondDerivative> {
        let est = self.moment_second_value()?;
        let (at_vm, flag_vm) = self.endpoint_limit(true)?;
        let (at_base, flag_base) = self.endpoint_limit(false)?;
        let w_max = self.geom.w_max();
        let mut samples = Vec::with_capacity(sample_count);
        for k in 1..=sample_count {
            let w = w_max * k as f64 / (sample_count + 1) as f64;
            samples.push(self.decompose(w, &self.geom.at_w(w)?));
        }
        Ok(SecondDerivative {
            value: est.value,
            error: est.error,
            samples,
            endpoint_limits: [at_vm, at_base],
            endpoint_flag: flag_vm || flag_base,
        })
    }
}

/// m(c).
pub fn moment(model: &ModelSpec, params: &WaveParameters, options: &MomentOptions) -> Result<f64> {
    Ok(MomentIntegrals::new(model, params, options)?
        .moment()?
        .value)
}

/// m′(c).
pub fn moment_prime(
    model: &ModelSpec,
    params: &WaveParameters,
    options: &MomentOptions,
) -> Result<f64> {
    Ok(MomentIntegrals::new(model, params, options)?
        .moment_prime()?
        .value)
}

/// m″(c), with 15 interior samples of the integrand decomposition.
pub fn moment_second(
    model: &ModelSpec,
    params: &WaveParameters,
    options: &MomentOptions,
) -> Result<SecondDerivative> {
    MomentIntegrals::new(model, params, options)?.moment_second(15)
}

/// m″(0) from the reduced standing-wave integrand, where only B survives:
/// m″(0) = −2 ∫ √κ (v − v*)² / √(−2F(v, 0)) dv.
pub fn moment_second_standing(
    model: &ModelSpec,
    v_star: f64,
    options: &MomentOptions,
) -> Result<f64> {
    let params = WaveParameters::new(v_star, 0.0);
    let integrals = MomentIntegrals::new(model, &params, options)?;
    let est = integrals.integrate(|w, pt| {
        let d = pt.v - v_star;
        -4.0 * pt.kappa.sqrt() * d * d / WaveGeometry::minus_two_f(pt).sqrt() * w
    })?;
    Ok(est.value)
}

/// m from the profile itself: trapezoidal ∫ κ(v) v′² dξ over the (uniform)
/// grid plus the exponential tails beyond both ends.
pub fn moment_direct(profile: &Profile, model: &ModelSpec) -> Result<f64> {
    let n = profile.xi.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let vp = profile.v_prime[i];
        density.push(if vp == 0.0 {
            0.0
        } else {
            model.kappa(profile.v[i])? * vp * vp
        });
    }
    let mut total = 0.0;
    for i in 0..n - 1 {
        total += 0.5 * (profile.xi[i + 1] - profile.xi[i]) * (density[i] + density[i + 1]);
    }
    // beyond the grid v − v* ≈ a e^{−λ|ξ|}, so ∫ κ v′² = κ(v*) λ a_end² / 2 per side
    let v_star = profile.params.v_star;
    let lambda = profile.decay_rate;
    if lambda > 0.0 && lambda.is_finite() {
        let kappa_star = model.kappa(v_star)?;
        for end in [profile.v[0], profile.v[n - 1]] {
            let a = end - v_star;
            total += 0.5 * kappa_star * lambda * a * a;
        }
    }
    Ok(total)
}

/// Full report at one speed.
pub fn moment_report(
    model: &ModelSpec,
    params: &WaveParameters,
    options: &MomentOptions,
) -> Result<MomentReport> {
    let integrals = MomentIntegrals::new(model, params, options)?;
    let m = integrals.moment()?;
    let mp = integrals.moment_prime()?;
    let ms = integrals.moment_second(0)?;
    let assessment = assess(params.c, ms.value, options.verdict_tolerance);
    let turning = integrals.geom.turning;
    Ok(MomentReport {
        model: model.label().to_string(),
        v_star: params.v_star,
        u_star: params.u_star,
        c: params.c,
        v_m: turning.v_m,
        direction: turning.direction,
        v_m_prime: turning.v_m_prime,
        m: m.value,
        m_prime: mp.value,
        m_second: ms.value,
        quadrature_error_estimates: ErrorEstimates {
            m: m.error,
            m_prime: mp.error,
            m_second: ms.error,
        },
        verdict: assessment.verdict,
        near_zero: assessment.near_zero,
        numerical_inconsistency: assessment.numerical_inconsistency,
        endpoint_flag: ms.endpoint_flag,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowStatus {
    Ok,
    NoSolitaryWave,
    SonicDegenerate,
    Failed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "Ok",
            RowStatus::NoSolitaryWave => "NoSolitaryWave",
            RowStatus::SonicDegenerate => "SonicDegenerate",
            RowStatus::Failed => "Failed",
        }
    }
}

/// One speed of a moment curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub c: f64,
    pub status: RowStatus,
    pub report: Option<MomentReport>,
    pub message: Option<String>,
}

/// Reports for each speed in `speeds`; rows are evaluated in parallel and
/// failures are recorded per row.
pub fn moment_curve(
    model: &ModelSpec,
    base: &WaveParameters,
    speeds: &[f64],
    options: &MomentOptions,
) -> Vec<CurveRow> {
    speeds
        .par_iter()
        .map(|&c| {
            let params = base.with_speed(c);
            match moment_report(model, &params, options) {
                Ok(report) => CurveRow {
                    c,
                    status: RowStatus::Ok,
                    report: Some(report),
                    message: None,
                },
                Err(err) => CurveRow {
                    c,
                    status: match err {
                        Error::NoSolitaryWave { .. } | Error::NoSubsonicWindow { .. } => {
                            RowStatus::NoSolitaryWave
                        }
                        Error::SonicDegenerate { .. } => RowStatus::SonicDegenerate,
                        _ => RowStatus::Failed,
                    },
                    report: None,
                    message: Some(err.to_string()),
                },
            }
        })
        .collect()
}

/// Curve CSV with header `c,m,m_prime,m_second,verdict,status`; numeric
/// fields of failed rows are left empty.
pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("c,m,m_prime,m_second,verdict,status\n");
    for row in rows {
        match &row.report {
            Some(r) => out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_f64(row.c),
                fmt_f64(r.m),
                fmt_f64(r.m_prime),
                fmt_f64(r.m_second),
                r.verdict.as_str(),
                row.status.as_str()
            )),
            None => out.push_str(&format!("{},,,,,{}\n", fmt_f64(row.c), row.status.as_str())),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs2() -> ModelSpec {
        ModelSpec::bona_sachs(2).unwrap()
    }

    fn closed_form_m(c: f64) -> f64 {
        1.2 * (1.0 - c * c).powf(2.5)
    }

    #[test]
    fn bona_sachs_moment_closed_forms() {
        let opts = MomentOptions::default();
        let m0 = moment(&bs2(), &WaveParameters::new(0.0, 0.0), &opts).unwrap();
        assert!((m0 - 1.2).abs() < 1e-12);
        let m5 = moment(&bs2(), &WaveParameters::new(0.0, 0.5), &opts).unwrap();
        assert!((m5 - closed_form_m(0.5)).abs() < 1e-12);
        let mp = moment_prime(&bs2(), &WaveParameters::new(0.0, 0.5), &opts).unwrap();
        assert!((mp + 6.0 * 0.5 * 0.75f64.powf(1.5)).abs() < 1e-11);
    }

    #[test]
    fn standing_wave_derivatives() {
        let opts = MomentOptions::default();
        let params = WaveParameters::new(0.0, 0.0);
        assert_eq!(moment_prime(&bs2(), &params, &opts).unwrap(), 0.0);
        let ms = moment_second(&bs2(), &params, &opts).unwrap();
        assert!((ms.value + 6.0).abs() < 1e-10);
        assert!(!ms.endpoint_flag);
        let standing = moment_second_standing(&bs2(), 0.0, &opts).unwrap();
        assert!((standing - ms.value).abs() < 1e-10);
        for s in &ms.samples {
            assert_eq!(s.a, 0.0);
            assert!(s.b < 0.0);
        }
    }

    #[test]
    fn verdict_rules() {
        let tol = 1e-8;
        assert_eq!(assess(0.0, -6.0, tol).verdict, Verdict::UnstableStanding);
        let odd = assess(0.0, 1.0, tol);
        assert_eq!(odd.verdict, Verdict::UnstableStanding);
        assert!(odd.numerical_inconsistency);
        let m2 = -6.0 * 0.91f64.sqrt() * (1.0 - 0.36);
        assert_eq!(assess(0.3, m2, tol).verdict, Verdict::UnstableNonconvex);
        let m2 = -6.0 * 0.51f64.sqrt() * (1.0 - 1.96);
        assert_eq!(assess(0.7, m2, tol).verdict, Verdict::CriterionInconclusive);
        let tiny = assess(0.5, -1e-10, tol);
        assert_eq!(tiny.verdict, Verdict::CriterionInconclusive);
        assert!(tiny.near_zero);
    }

    #[test]
    fn curve_rows_and_csv() {
        let rows = moment_curve(
            &bs2(),
            &WaveParameters::new(0.0, 0.0),
            &[0.0, 0.25, 1.5],
            &MomentOptions::default(),
        );
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].status, RowStatus::NoSolitaryWave);
        let m = rows[1].report.as_ref().unwrap().m;
        assert!((m - closed_form_m(0.25)).abs() < 1e-10);
        let csv = curve_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "c,m,m_prime,m_second,verdict,status");
        assert!(lines[1].ends_with(",UnstableStanding,Ok"));
        assert!(lines[3].ends_with(",,,,,NoSolitaryWave"));
        assert!(moment_curve(
            &bs2(),
            &WaveParameters::new(0.0, 0.0),
            &[],
            &MomentOptions::default()
        )
        .is_empty());
    }

    #[test]
    fn report_json_has_documented_fields() {
        let r = moment_report(
            &bs2(),
            &WaveParameters::new(0.0, 0.0),
            &MomentOptions::default(),
        )
        .unwrap();
        let json = serde_json::to_value(&r).unwrap();
        for key in [
            "model",
            "v_star",
            "u_star",
            "c",
            "m",
            "m_prime",
            "m_second",
            "quadrature_error_estimates",
            "verdict",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["verdict"], "UnstableStanding");
        let back: MomentReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
