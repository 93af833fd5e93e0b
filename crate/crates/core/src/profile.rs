//! Turning points and homoclinic profiles.
//!
//! Along a solitary wave the first integral ½κ(v)v′² + F(v, c) vanishes, so
//! the profile is fixed by F alone: v travels from the base state v* to the
//! nearest simple zero v_m of F(·, c) and back, with v′ = ±√(−2F/κ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, PotentialValues, WaveParameters};
use crate::quadrature;
use crate::roots;

/// Open interval of subsonic speeds, c² < −p′(v*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedWindow {
    pub lower: f64,
    pub upper: f64,
}

impl SpeedWindow {
    pub fn contains(&self, c: f64) -> bool {
        c > self.lower && c < self.upper
    }
}

/// Speeds that admit exponentially decaying waves around `v_star`.
pub fn existence_window(model: &ModelSpec, v_star: f64) -> Result<SpeedWindow> {
    let p_prime = model.pressure_derivative(v_star)?;
    if p_prime >= 0.0 {
        return Err(Error::NoSubsonicWindow { v_star, p_prime });
    }
    let edge = (-p_prime).sqrt();
    Ok(SpeedWindow {
        lower: -edge,
        upper: edge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// v_m > v*
    Elevation,
    /// v_m < v*
    Depression,
}

impl Direction {
    /// +1 for elevation, −1 for depression.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Elevation => 1.0,
            Direction::Depression => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Elevation => "elevation",
            Direction::Depression => "depression",
        }
    }
}

/// Which branch to return when turning points exist on both sides of v*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchPreference {
    /// The zero closest to v*; ties go to elevation.
    #[default]
    Nearest,
    Elevation,
    Depression,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningOptions {
    /// Relative bracket width at which root refinement stops.
    pub root_tolerance: f64,
    pub prefer: BranchPreference,
}

impl Default for TurningOptions {
    fn default() -> Self {
        Self {
            root_tolerance: 1e-12,
            prefer: BranchPreference::Nearest,
        }
    }
}

/// The extreme value v_m of a solitary wave and its speed sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub v_m: f64,
    pub direction: Direction,
    pub f_v_at_vm: f64,
    /// dv_m/dc = −F_c(v_m, c) / F_v(v_m, c).
    pub v_m_prime: f64,
    /// Turning point on the other side of v*, when that side also admits a wave.
    pub opposite: Option<f64>,
}

const SONIC_TOLERANCE: f64 = 1e-10;

/// Locates the turning point of the solitary wave with parameters `params`.
pub fn find_turning_point(
    model: &ModelSpec,
    params: &WaveParameters,
    options: &TurningOptions,
) -> Result<TurningPoint> {
    let v_star = params.v_star;
    let c = params.c;
    let curvature = model.base_curvature(params)?;
    if curvature.abs() < SONIC_TOLERANCE {
        return Err(Error::SonicDegenerate {
            v_star,
            c,
            reason: format!("F_vv(v*, c) = {curvature:e}"),
        });
    }
    if curvature > 0.0 {
        return Err(Error::NoSolitaryWave {
            v_star,
            c,
            reason: format!("speed outside the subsonic window (F_vv(v*, c) = {curvature})"),
        });
    }

    let up = search_side(model, params, Direction::Elevation, options.root_tolerance)?;
    let down = search_side(model, params, Direction::Depression, options.root_tolerance)?;
    let (chosen, direction, other) = match (up, down) {
        (None, None) => {
            return Err(Error::NoSolitaryWave {
                v_star,
                c,
                reason: "F(., c) has no zero on either side of v* before the domain ends".into(),
            })
        }
        (Some(a), None) => (a, Direction::Elevation, None),
        (None, Some(b)) => (b, Direction::Depression, None),
        (Some(a), Some(b)) => {
            let elevation = match options.prefer {
                BranchPreference::Elevation => true,
                BranchPreference::Depression => false,
                BranchPreference::Nearest => (a - v_star).abs() <= (v_star - b).abs(),
            };
            if elevation {
                (a, Direction::Elevation, Some(b))
            } else {
                (b, Direction::Depression, Some(a))
            }
        }
    };

    let at_vm = model.potential(params, chosen)?;
    let scale = model
        .pressure(chosen)?
        .abs()
        .max(model.pressure(v_star)?.abs())
        .max(1.0);
    if at_vm.f_v.abs() < SONIC_TOLERANCE * scale || at_vm.f_v * direction.sign() <= 0.0 {
        return Err(Error::SonicDegenerate {
            v_star,
            c,
            reason: format!(
                "F_v(v_m) = {:e} at v_m = {chosen}: zero is not simple",
                at_vm.f_v
            ),
        });
    }
    // F_c vanishes identically at c = 0; the 0.0 addition clears a negative zero
    let v_m_prime = -at_vm.f_c / at_vm.f_v + 0.0;
    Ok(TurningPoint {
        v_m: chosen,
        direction,
        f_v_at_vm: at_vm.f_v,
        v_m_prime,
        opposite: other,
    })
}

/// Walks away from v* on one side until F changes sign, then refines the zero.
///
/// Returns `None` when F stays negative up to the domain boundary (or a
/// non-finite evaluation), or never becomes negative off the base state.
fn search_side(
    model: &ModelSpec,
    params: &WaveParameters,
    direction: Direction,
    root_tolerance: f64,
) -> Result<Option<f64>> {
    let v_star = params.v_star;
    let s = direction.sign();
    let domain = model.domain();
    let eval = |v: f64| -> Option<f64> {
        if !domain.contains(v) {
            return None;
        }
        model
            .potential(params, v)
            .ok()
            .map(|pv| pv.f)
            .filter(|f| f.is_finite())
    };

    // step off the double root at v*
    let mut offset = 1e-3 * v_star.abs().max(1.0);
    let mut start = None;
    for _ in 0..=20 {
        let x = v_star + s * offset;
        if let Some(f) = eval(x) {
            if f < 0.0 {
                start = Some((x, offset));
                break;
            }
        }
        offset *= 0.5;
    }
    let Some((mut x_prev, mut step)) = start else {
        return Ok(None);
    };

    let boundary = if s > 0.0 { domain.upper } else { domain.lower };
    for _ in 0..400 {
        step *= 2.0;
        let mut x_next = x_prev + s * step;
        if let Some(b) = boundary {
            if (x_next - b) * s >= 0.0 {
                x_next = x_prev + 0.5 * (b - x_prev);
                step = (x_next - x_prev).abs();
                if x_next == x_prev {
                    return Ok(None);
                }
            }
        }
        if !x_next.is_finite() {
            return Ok(None);
        }
        let Some(f_next) = eval(x_next) else {
            return Ok(None);
        };
        if f_next == 0.0 {
            return Ok(Some(x_next));
        }
        if f_next > 0.0 {
            let root = roots::bracketed(
                |v| Ok(model.potential(params, v)?.f),
                x_prev,
                x_next,
                root_tolerance,
            )?;
            return Ok(Some(root));
        }
        x_prev = x_next;
        if boundary.is_some() {
            // shrink back toward geometric growth once clear of the boundary
            step = step.min((x_prev - v_star).abs());
        }
    }
    Ok(None)
}

/// Evaluation context for integrals between v* and v_m in the variable
/// w = √|v − v_m|, which removes the inverse-square-root singularity at v_m.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WaveGeometry<'a> {
    pub model: &'a ModelSpec,
    pub params: WaveParameters,
    pub turning: TurningPoint,
    /// |v_m − v*|
    pub span: f64,
    /// sign(v_m − v*)
    pub sign: f64,
    f_at_vm: f64,
}

/// Model quantities at one point of the wave.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WavePoint {
    pub v: f64,
    pub pot: PotentialValues,
    pub kappa: f64,
    pub kappa_v: f64,
}

impl<'a> WaveGeometry<'a> {
    pub fn new(
        model: &'a ModelSpec,
        params: WaveParameters,
        turning: TurningPoint,
    ) -> Result<Self> {
        let f_at_vm = model.potential(&params, turning.v_m)?.f;
        Ok(Self {
            model,
            params,
            turning,
            span: (turning.v_m - params.v_star).abs(),
            sign: turning.direction.sign(),
            f_at_vm,
        })
    }

    /// Upper limit of the w variable, √|v_m − v*|.
    pub fn w_max(&self) -> f64 {
        self.span.sqrt()
    }

    pub fn v_at_w(&self, w: f64) -> f64 {
        self.turning.v_m - self.sign * w * w
    }

    /// Evaluates at `v`, with F corrected so that it vanishes exactly at v_m;
    /// the correction is quadratic in v − v* and leaves the double root intact.
    pub fn point(&self, v: f64) -> Result<WavePoint> {
        let mut pot = self.model.potential(&self.params, v)?;
        let r = (v - self.params.v_star) / self.span;
        pot.f -= self.f_at_vm * r * r;
        Ok(WavePoint {
            v,
            pot,
            kappa: self.model.kappa(v)?,
            kappa_v: self.model.kappa_derivative(v)?,
        })
    }

    pub fn at_w(&self, w: f64) -> Result<WavePoint> {
        self.point(self.v_at_w(w))
    }

    /// −2F clamped at zero against rounding right at the endpoints.
    pub fn minus_two_f(point: &WavePoint) -> f64 {
        (-2.0 * point.pot.f).max(0.0)
    }
}

/// Grid controls for [`reconstruct_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Half-width of the output grid; defaults to 30 decay lengths.
    pub half_width: Option<f64>,
    /// Number of output nodes; bumped to the next odd number so ξ = 0 is a node.
    pub points: usize,
    /// Quadrature is continued until |v − v*| < tail_cut·|v_m − v*|.
    pub tail_cut: f64,
    /// Subintervals in w between the turning point and the midpoint of the wave.
    pub core_intervals: usize,
    /// Subintervals in log|v − v*| from the midpoint down to the tail cut.
    pub tail_intervals: usize,
    pub turning: TurningOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            half_width: None,
            points: 4001,
            tail_cut: 1e-10,
            core_intervals: 400,
            tail_intervals: 2400,
            turning: TurningOptions::default(),
        }
    }
}

/// Cubic Hermite representation of the half profile ξ ≥ 0 plus its exponential tail.
#[derive(Debug, Clone, PartialEq)]
struct HalfProfile {
    xi: Vec<f64>,
    v: Vec<f64>,
    vp: Vec<f64>,
    vpp: Vec<f64>,
    v_star: f64,
    /// v − v* at the tail start.
    tail_amplitude: f64,
    tail_start: f64,
    decay_rate: f64,
}

impl HalfProfile {
    /// (v, v′) at ξ ≥ 0.
    fn eval(&self, xi: f64) -> (f64, f64) {
        if xi >= self.tail_start {
            let dv = self.tail_amplitude * (-self.decay_rate * (xi - self.tail_start)).exp();
            return (self.v_star + dv, -self.decay_rate * dv);
        }
        let i = match self.xi.partition_point(|&x| x <= xi) {
            0 => 0,
            k => (k - 1).min(self.xi.len() - 2),
        };
        let h = self.xi[i + 1] - self.xi[i];
        let t = (xi - self.xi[i]) / h;
        let v = hermite(t, h, self.v[i], self.vp[i], self.v[i + 1], self.vp[i + 1]);
        let vp = hermite(
            t,
            h,
            self.vp[i],
            self.vpp[i],
            self.vp[i + 1],
            self.vpp[i + 1],
        );
        (v, vp)
    }
}

fn hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// A solitary-wave profile sampled on a uniform grid symmetric about ξ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    pub u: Vec<f64>,
    pub decay_rate: f64,
    pub params: WaveParameters,
    pub first_integral_residual: f64,
    /// |ξ| beyond which the profile follows its linearized exponential tail.
    pub tail_start: f64,
    pub turning: Option<TurningPoint>,
    half: HalfProfile,
}

impl Profile {
    /// Wraps externally sampled values (e.g. an exact solution) as a profile.
    ///
    /// `xi` must be increasing and symmetric about 0; `v_prime` is used as given.
    pub fn from_samples(
        params: WaveParameters,
        xi: Vec<f64>,
        v: Vec<f64>,
        v_prime: Vec<f64>,
        decay_rate: f64,
    ) -> Result<Self> {
        let n = xi.len();
        if n < 3 || v.len() != n || v_prime.len() != n {
            return Err(Error::InvalidConfig(
                "profile samples need at least three nodes and equal lengths".into(),
            ));
        }
        let u = v
            .iter()
            .map(|&vi| params.u_star - params.c * (vi - params.v_star))
            .collect();
        // right half, with v'' from differences of v'
        let start = xi.partition_point(|&x| x < 0.0);
        let hx: Vec<f64> = xi[start..].to_vec();
        let hv: Vec<f64> = v[start..].to_vec();
        let hvp: Vec<f64> = v_prime[start..].to_vec();
        let m = hx.len();
        let mut hvpp = vec![0.0; m];
        for i in 0..m {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i + 1 == m {
                (m - 2, m - 1)
            } else {
                (i - 1, i + 1)
            };
            hvpp[i] = (hvp[b] - hvp[a]) / (hx[b] - hx[a]);
        }
        let last = *hx.last().expect("non-empty");
        let half = HalfProfile {
            tail_amplitude: hv[m - 1] - params.v_star,
            xi: hx,
            v: hv,
            vp: hvp,
            vpp: hvpp,
            v_star: params.v_star,
            tail_start: last,
            decay_rate,
        };
        Ok(Self {
            xi,
            v,
            v_prime,
            u,
            decay_rate,
            params,
            first_integral_residual: f64::NAN,
            tail_start: f64::INFINITY,
            turning: None,
            half,
        })
    }

    /// Interpolated (v, v′) at an arbitrary ξ, including the exponential tail.
    pub fn sample(&self, xi: f64) -> (f64, f64) {
        let (v, vp) = self.half.eval(xi.abs());
        if xi < 0.0 {
            (v, -vp)
        } else {
            (v, vp)
        }
    }

    /// (v, v′) at ξ obtained by integrating the profile equation
    /// κv″ = −F_v − ½κ′v′² from the nearest stored node, so the result is a
    /// smooth function of ξ rather than a piecewise interpolant.
    ///
    /// Profiles built with [`Profile::from_samples`] fall back to [`Profile::sample`].
    pub fn sample_smooth(&self, model: &ModelSpec, xi: f64) -> Result<(f64, f64)> {
        let x = xi.abs();
        let half = &self.half;
        if self.turning.is_none() || x >= half.tail_start {
            return Ok(self.sample(xi));
        }
        let i = match half.xi.partition_point(|&s| s <= x) {
            0 => 0,
            k if k == half.xi.len() => k - 1,
            k if x - half.xi[k - 1] <= half.xi[k] - x => k - 1,
            k => k,
        };
        let p_star = model.pressure(self.params.v_star)?;
        let c2 = self.params.c * self.params.c;
        let v_star = self.params.v_star;
        let accel = |v: f64, vp: f64| -> Result<f64> {
            let f_v = model.pressure(v)? - p_star + c2 * (v - v_star);
            Ok(-(f_v + 0.5 * model.kappa_derivative(v)? * vp * vp) / model.kappa(v)?)
        };
        let gap = x - half.xi[i];
        let steps = ((gap.abs() / 2e-4).ceil() as usize).max(1);
        let h = gap / steps as f64;
        let (mut v, mut vp) = (half.v[i], half.vp[i]);
        for _ in 0..steps {
            let a1 = accel(v, vp)?;
            let (v2, p2) = (v + 0.5 * h * vp, vp + 0.5 * h * a1);
            let a2 = accel(v2, p2)?;
            let (v3, p3) = (v + 0.5 * h * p2, vp + 0.5 * h * a2);
            let a3 = accel(v3, p3)?;
            let (v4, p4) = (v + h * p3, vp + h * a3);
            let a4 = accel(v4, p4)?;
            v += h / 6.0 * (vp + 2.0 * p2 + 2.0 * p3 + p4);
            vp += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        }
        Ok(if xi < 0.0 { (v, -vp) } else { (v, vp) })
    }

    /// Profile CSV with header `xi,v,v_prime,u` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,v,v_prime,u\n");
        for i in 0..self.xi.len() {
            out.push_str(&crate::export::csv_row(&[
                self.xi[i],
                self.v[i],
                self.v_prime[i],
                self.u[i],
            ]));
        }
        out
    }
}

/// Builds the profile by integrating dξ = √(κ/(−2F)) |dv| away from the turning point.
pub fn reconstruct_profile(
    model: &ModelSpec,
    params: &WaveParameters,
    options: &ProfileOptions,
) -> Result<Profile> {
    let turning = find_turning_point(model, params, &options.turning)?;
    let geom = WaveGeometry::new(model, *params, turning)?;
    let v_star = params.v_star;
    let sign = geom.sign;
    let span = geom.span;
    let kappa_star = model.kappa(v_star)?;
    let decay_rate = (-model.base_curvature(params)? / kappa_star).sqrt();
    if !(options.tail_cut > 0.0 && options.tail_cut < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "tail_cut must lie in (0, 0.5), got {}",
            options.tail_cut
        )));
    }
    let core_n = options.core_intervals.max(4);
    let tail_n = options.tail_intervals.max(4);

    let rule = quadrature::gl16();
    let mut xs = Vec::with_capacity(core_n + tail_n + 1);
    let mut vs = Vec::with_capacity(core_n + tail_n + 1);
    let mut vps = Vec::with_capacity(core_n + tail_n + 1);
    let mut vpps = Vec::with_capacity(core_n + tail_n + 1);
    let mut push_node = |xi: f64, point: &WavePoint| {
        let slope = -sign * (WaveGeometry::minus_two_f(point) / point.kappa).sqrt();
        let curvature = (-point.pot.f_v - 0.5 * point.kappa_v * slope * slope) / point.kappa;
        xs.push(xi);
        vs.push(point.v);
        vps.push(slope);
        vpps.push(curvature);
    };

    // core: w from 0 to √(span/2), dξ/dw = 2w √(κ/(−2F))
    let w_split = (0.5 * span).sqrt();
    let dxi_dw = |w: f64| -> Result<f64> {
        let pt = geom.at_w(w)?;
        let m2f = WaveGeometry::minus_two_f(&pt);
        if m2f <= 0.0 {
            return Err(Error::Quadrature(format!(
                "F(v, c) >= 0 inside the wave at v = {}",
                pt.v
            )));
        }
        Ok(2.0 * w * (pt.kappa / m2f).sqrt())
    };
    let mut xi = 0.0;
    push_node(0.0, &geom.at_w(0.0)?);
    let hw = w_split / core_n as f64;
    for k in 0..core_n {
        let (a, b) = (
            hw * k as f64,
            if k + 1 == core_n {
                w_split
            } else {
                hw * (k + 1) as f64
            },
        );
        xi += rule.try_integrate(a, b, dxi_dw)?;
        push_node(xi, &geom.at_w(b)?);
    }

    // tail: ℓ = ln r with v = v* + sign·span·r, from ln ½ down to ln tail_cut
    let l_hi = 0.5f64.ln();
    let l_lo = options.tail_cut.ln();
    let dxi_dl = |l: f64| -> Result<f64> {
        let r = l.exp();
        let pt = geom.point(v_star + sign * span * r)?;
        let m2f = WaveGeometry::minus_two_f(&pt);
        if m2f <= 0.0 {
            return Err(Error::Quadrature(format!(
                "F(v, c) >= 0 inside the wave at v = {}",
                pt.v
            )));
        }
        Ok((pt.kappa / m2f).sqrt() * span * r)
    };
    let hl = (l_hi - l_lo) / tail_n as f64;
    for k in 0..tail_n {
        let a = l_hi - hl * k as f64;
        let b = if k + 1 == tail_n {
            l_lo
        } else {
            l_hi - hl * (k + 1) as f64
        };
        xi += rule.try_integrate(b, a, dxi_dl)?;
        push_node(xi, &geom.point(v_star + sign * span * b.exp())?);
    }
    let tail_start = xi;
    let half = HalfProfile {
        tail_amplitude: vs.last().copied().unwrap_or(v_star) - v_star,
        xi: xs,
        v: vs,
        vp: vps,
        vpp: vpps,
        v_star,
        tail_start,
        decay_rate,
    };

    let half_width = options.half_width.unwrap_or(30.0 / decay_rate);
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "invalid half width {half_width}"
        )));
    }
    let points = (options.points.max(3)) | 1;
    let h = 2.0 * half_width / (points - 1) as f64;
    let center = points / 2;
    let mut grid = Vec::with_capacity(points);
    let mut v = Vec::with_capacity(points);
    let mut vp = Vec::with_capacity(points);
    for k in 0..points {
        let x = (k as f64 - center as f64) * h;
        let (a, b) = half.eval(x.abs());
        grid.push(x);
        v.push(a);
        vp.push(if x < 0.0 { -b } else { b });
    }
    // the turning point sits exactly on the symmetry axis
    v[center] = turning.v_m;
    vp[center] = 0.0;
    let u = v
        .iter()
        .map(|&vi| params.u_star - params.c * (vi - v_star))
        .collect();

    let mut profile = Profile {
        xi: grid,
        v,
        v_prime: vp,
        u,
        decay_rate,
        params: *params,
        first_integral_residual: 0.0,
        tail_start,
        turning: Some(turning),
        half,
    };
    profile.first_integral_residual = first_integral_residual(&profile, model)?;
    Ok(profile)
}

/// max |½κ(v)v′² + F(v, c)| over grid nodes outside the exponential tail.
pub fn first_integral_residual(profile: &Profile, model: &ModelSpec) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..profile.xi.len() {
        if profile.xi[i].abs() > profile.tail_start {
            continue;
        }
        let v = profile.v[i];
        let vp = profile.v_prime[i];
        let f = model.potential(&profile.params, v)?.f;
        let residual = 0.5 * model.kappa(v)? * vp * vp + f;
        worst = worst.max(residual.abs());
    }
    Ok(worst)
}
