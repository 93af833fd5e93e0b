//! Fourier-spectral time integration of the Euler–Korteweg system on a
//! periodic interval, conserved quantities, and the orbital distance to the
//! translation orbit of a reference wave.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::csv_row;
use crate::model::{ModelSpec, WaveParameters};
use crate::profile::{reconstruct_profile, Profile, ProfileOptions};

/// Largest relative seam jump accepted by [`periodize`].
pub const SEAM_THRESHOLD: f64 = 1e-8;

/// Below this the initial distance is too small to measure growth against.
pub const MIN_REFERENCE_DISTANCE: f64 = 1e-6;

/// Fields V, U on the uniform periodic grid y_j = −L + j·2L/n at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub half_length: f64,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

fn check_grid(half_length: f64, n: usize) -> Result<()> {
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "half length must be positive, got {half_length}"
        )));
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "grid size must be a power of two >= 8, got {n}"
        )));
    }
    Ok(())
}

fn grid(half_length: f64, n: usize) -> Vec<f64> {
    let dy = 2.0 * half_length / n as f64;
    (0..n).map(|j| -half_length + dy * j as f64).collect()
}

impl EvolutionState {
    pub fn new(half_length: f64, v: Vec<f64>, u: Vec<f64>, t: f64) -> Result<Self> {
        check_grid(half_length, v.len())?;
        if u.len() != v.len() {
            return Err(Error::InvalidConfig(
                "V and U must have equal length".into(),
            ));
        }
        Ok(Self {
            half_length,
            y: grid(half_length, v.len()),
            v,
            u,
            t,
        })
    }

    /// Uniform state V ≡ v, U ≡ u.
    pub fn constant(half_length: f64, n: usize, v: f64, u: f64) -> Result<Self> {
        Self::new(half_length, vec![v; n], vec![u; n], 0.0)
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.half_length / self.n() as f64
    }

    /// The state translated so that the returned fields equal f(y + s),
    /// using exact Fourier phase shifts.
    pub fn shifted(&self, s: f64) -> Self {
        let spectral = Spectral::new(self.n(), self.half_length);
        let mut v = self.v.clone();
        let mut u = self.u.clone();
        spectral.shift_real(&mut v, s);
        spectral.shift_real(&mut u, s);
        Self {
            half_length: self.half_length,
            y: self.y.clone(),
            v,
            u,
            t: self.t,
        }
    }

    /// Snapshot CSV with header `y,V,U`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,V,U\n");
        for j in 0..self.n() {
            out.push_str(&csv_row(&[self.y[j], self.v[j], self.u[j]]));
        }
        out
    }
}

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Wavenumber used for odd derivatives; zero at the Nyquist mode.
    k_odd: Vec<f64>,
    /// k² including the Nyquist mode.
    k_sq: Vec<f64>,
    /// Wavenumber used for translations; the Nyquist entry is handled separately.
    k_shift: Vec<f64>,
    /// 2/3-rule mask.
    keep: Vec<bool>,
}

impl Spectral {
    fn new(n: usize, half_length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let base = PI / half_length;
        let mut k_odd = vec![0.0; n];
        let mut k_sq = vec![0.0; n];
        let mut k_shift = vec![0.0; n];
        let mut keep = vec![false; n];
        for m in 0..n {
            let signed = if m <= n / 2 {
                m as i64
            } else {
                m as i64 - n as i64
            };
            let k = base * signed as f64;
            k_shift[m] = k;
            k_sq[m] = k * k;
            k_odd[m] = if m == n / 2 { 0.0 } else { k };
            keep[m] = 3 * signed.unsigned_abs() as usize <= n;
        }
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k_odd,
            k_sq,
            k_shift,
            keep,
        }
    }

    fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Phase factor for translating mode m by s; real at the Nyquist mode.
    fn phase(&self, m: usize, s: f64) -> Complex64 {
        let k = self.k_shift[m];
        if m == self.nyquist() {
            Complex64::new((k * s).cos(), 0.0)
        } else {
            Complex64::from_polar(1.0, k * s)
        }
    }

    fn spectrum(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn shift_real(&self, f: &mut [f64], s: f64) {
        let mut buf = self.spectrum(f);
        for (m, z) in buf.iter_mut().enumerate() {
            *z *= self.phase(m, s);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for (x, z) in f.iter_mut().zip(&buf) {
            *x = z.re * scale;
        }
    }

    fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let mut buf = self.spectrum(f);
        for (m, z) in buf.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, self.k_odd[m]);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }
}

/// Reusable right-hand-side evaluator and RK4 stepper for one model and grid.
pub struct Solver<'a> {
    model: &'a ModelSpec,
    spectral: Spectral,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    v_hat: Vec<Complex64>,
    u_hat: Vec<Complex64>,
    v_y: Vec<f64>,
    v_yy: Vec<f64>,
    p: Vec<f64>,
    kappa: Vec<f64>,
    kappa_v: Vec<f64>,
    stages: [Vec<f64>; 8],
    tmp_v: Vec<f64>,
    tmp_u: Vec<f64>,
    /// Fields larger than this in magnitude count as divergence.
    pub blowup_bound: f64,
}

impl<'a> Solver<'a> {
    pub fn new(model: &'a ModelSpec, half_length: f64, n: usize) -> Result<Self> {
        check_grid(half_length, n)?;
        let zeros = vec![0.0; n];
        let spectral = Spectral::new(n, half_length);
        let scratch_len = spectral
            .forward
            .get_inplace_scratch_len()
            .max(spectral.inverse.get_inplace_scratch_len());
        Ok(Self {
            model,
            spectral,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            buf: vec![Complex64::new(0.0, 0.0); n],
            v_hat: vec![Complex64::new(0.0, 0.0); n],
            u_hat: vec![Complex64::new(0.0, 0.0); n],
            v_y: zeros.clone(),
            v_yy: zeros.clone(),
            p: zeros.clone(),
            kappa: zeros.clone(),
            kappa_v: zeros.clone(),
            stages: std::array::from_fn(|_| zeros.clone()),
            tmp_v: zeros.clone(),
            tmp_u: zeros,
            blowup_bound: f64::INFINITY,
        })
    }

    fn n(&self) -> usize {
        self.spectral.n
    }

    /// Writes (V_t, U_t) for the fields (v, u). `t` and `last_good_t` only
    /// label errors.
    #[allow(clippy::too_many_arguments)]
    fn rhs_into(
        &mut self,
        v: &[f64],
        u: &[f64],
        t: f64,
        last_good_t: f64,
        dv: &mut [f64],
        du: &mut [f64],
    ) -> Result<()> {
        let n = self.n();
        for j in 0..n {
            if !v[j].is_finite() || !u[j].is_finite() {
                return Err(Error::Diverged { t, last_good_t });
            }
            self.buf[j] = Complex64::new(v[j], u[j]);
        }
        let sp = &self.spectral;
        sp.forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for m in 0..n {
            let a = self.buf[m];
            let b = self.buf[(n - m) % n].conj();
            self.v_hat[m] = 0.5 * (a + b);
            self.u_hat[m] = Complex64::new(0.0, -0.5) * (a - b);
        }
        // V_y + i V_yy
        for m in 0..n {
            let vh = self.v_hat[m];
            self.buf[m] =
                Complex64::new(0.0, sp.k_odd[m]) * vh - Complex64::new(0.0, sp.k_sq[m]) * vh;
        }
        sp.inverse
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for j in 0..n {
            self.v_y[j] = self.buf[j].re * scale;
            self.v_yy[j] = self.buf[j].im * scale;
        }

        let escape = |e: Error| match e {
            Error::DomainViolation { .. } | Error::NonPositiveCapillarity { .. } => {
                Error::DomainEscape { t, last_good_t }
            }
            Error::NonFiniteModel { .. } => Error::Diverged { t, last_good_t },
            other => other,
        };
        self.model
            .evaluate_fields(v, &mut self.p, &mut self.kappa, &mut self.kappa_v)
            .map_err(escape)?;
        let kappa_mean = self.kappa.iter().sum::<f64>() / n as f64;
        for j in 0..n {
            let q = self.p[j]
                + (self.kappa[j] - kappa_mean) * self.v_yy[j]
                + 0.5 * self.kappa_v[j] * self.v_y[j] * self.v_y[j];
            self.buf[j] = Complex64::new(q, 0.0);
        }
        sp.forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        // filtered nonlinear flux plus the unfiltered linear capillary part,
        // then pack U_y + i Q_y
        for m in 0..n {
            let mut q_hat = if sp.keep[m] {
                self.buf[m]
            } else {
                Complex64::new(0.0, 0.0)
            };
            q_hat -= kappa_mean * sp.k_sq[m] * self.v_hat[m];
            let ik = Complex64::new(0.0, sp.k_odd[m]);
            self.buf[m] = ik * self.u_hat[m] + Complex64::new(0.0, 1.0) * ik * q_hat;
        }
        sp.inverse
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for j in 0..n {
            dv[j] = self.buf[j].re * scale;
            du[j] = -self.buf[j].im * scale;
        }
        Ok(())
    }

    /// Time derivatives (V_t, U_t) of a state.
    pub fn rhs(&mut self, state: &EvolutionState) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_state(state)?;
        let mut dv = vec![0.0; self.n()];
        let mut du = vec![0.0; self.n()];
        self.rhs_into(&state.v, &state.u, state.t, state.t, &mut dv, &mut du)?;
        Ok((dv, du))
    }

    fn check_state(&self, state: &EvolutionState) -> Result<()> {
        if state.n() != self.n() {
            return Err(Error::InvalidConfig(format!(
                "state has {} nodes, solver expects {}",
                state.n(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Advances the state in place by one classical Runge–Kutta step.
    pub fn step(&mut self, state: &mut EvolutionState, dt: f64) -> Result<()> {
        self.check_state(state)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = self.n();
        let t0 = state.t;
        let mut stages = std::mem::take(&mut self.stages);
        let mut tv = std::mem::take(&mut self.tmp_v);
        let mut tu = std::mem::take(&mut self.tmp_u);
        let result = (|| -> Result<()> {
            let [k1v, k1u, k2v, k2u, k3v, k3u, k4v, k4u] = &mut stages;
            self.rhs_into(&state.v, &state.u, t0, t0, k1v, k1u)?;
            for j in 0..n {
                tv[j] = state.v[j] + 0.5 * dt * k1v[j];
                tu[j] = state.u[j] + 0.5 * dt * k1u[j];
            }
            self.rhs_into(&tv, &tu, t0 + 0.5 * dt, t0, k2v, k2u)?;
            for j in 0..n {
                tv[j] = state.v[j] + 0.5 * dt * k2v[j];
                tu[j] = state.u[j] + 0.5 * dt * k2u[j];
            }
            self.rhs_into(&tv, &tu, t0 + 0.5 * dt, t0, k3v, k3u)?;
            for j in 0..n {
                tv[j] = state.v[j] + dt * k3v[j];
                tu[j] = state.u[j] + dt * k3u[j];
            }
            self.rhs_into(&tv, &tu, t0 + dt, t0, k4v, k4u)?;
            let w = dt / 6.0;
            let mut largest: f64 = 0.0;
            for j in 0..n {
                let v = state.v[j] + w * (k1v[j] + 2.0 * k2v[j] + 2.0 * k3v[j] + k4v[j]);
                let u = state.u[j] + w * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
                tv[j] = v;
                tu[j] = u;
                largest = largest.max(v.abs()).max(u.abs());
            }
            if !largest.is_finite() || largest > self.blowup_bound {
                return Err(Error::Diverged {
                    t: t0 + dt,
                    last_good_t: t0,
                });
            }
            Ok(())
        })();
        if result.is_ok() {
            std::mem::swap(&mut state.v, &mut tv);
            std::mem::swap(&mut state.u, &mut tu);
            state.t = t0 + dt;
        }
        self.stages = stages;
        self.tmp_v = tv;
        self.tmp_u = tu;
        result
    }

    /// Largest κ(V) on the grid.
    pub fn kappa_max(&self, state: &EvolutionState) -> Result<f64> {
        let mut best: f64 = 0.0;
        for &v in &state.v {
            best = best.max(self.model.kappa(v)?);
        }
        Ok(best)
    }

    /// Mass ∫(V − v*), momentum ∫(U − u*) and energy
    /// ∫ ½U² + f(V) − f(v*) + ½κ(V)V_y², by the trapezoidal rule.
    pub fn conserved(&self, state: &EvolutionState, v_star: f64, u_star: f64) -> Result<Conserved> {
        self.check_state(state)?;
        let dy = state.dy();
        let v_y = self.spectral.derivative(&state.v);
        let (mut mass, mut momentum, mut energy) = (0.0, 0.0, 0.0);
        for j in 0..state.n() {
            let v = state.v[j];
            let u = state.u[j];
            mass += v - v_star;
            momentum += u - u_star;
            let potential = -self.model.pressure_antiderivative_diff(v, v_star)?;
            energy += 0.5 * u * u + potential + 0.5 * self.model.kappa(v)? * v_y[j] * v_y[j];
        }
        Ok(Conserved {
            mass: mass * dy,
            momentum: momentum * dy,
            hamiltonian: energy * dy,
        })
    }
}

/// Conserved quantities of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: f64,
    pub hamiltonian: f64,
}

/// Time derivatives (V_t, U_t) of `state` under `model`.
pub fn rhs(state: &EvolutionState, model: &ModelSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    Solver::new(model, state.half_length, state.n())?.rhs(state)
}

/// One RK4 step of size `dt`.
pub fn step_rk4(state: &EvolutionState, model: &ModelSpec, dt: f64) -> Result<EvolutionState> {
    let mut solver = Solver::new(model, state.half_length, state.n())?;
    let mut next = state.clone();
    solver.step(&mut next, dt)?;
    Ok(next)
}

/// (mass, momentum, hamiltonian) relative to the background (v*, u*).
pub fn conserved(
    state: &EvolutionState,
    model: &ModelSpec,
    v_star: f64,
    u_star: f64,
) -> Result<Conserved> {
    Solver::new(model, state.half_length, state.n())?.conserved(state, v_star, u_star)
}

/// Stable time step dt = C·dy²/(π²√κ_max).
pub fn stable_time_step(courant: f64, dy: f64, kappa_max: f64) -> f64 {
    courant * dy * dy / (PI * PI * kappa_max.sqrt())
}

/// A profile sampled on the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodized {
    pub state: EvolutionState,
    /// |v(L) − v*| / |v_m − v*|.
    pub seam_mismatch: f64,
}

/// Samples the profile (centered at y = 0) and its velocity onto [−L, L).
pub fn periodize(
    profile: &Profile,
    model: &ModelSpec,
    half_length: f64,
    n: usize,
) -> Result<Periodized> {
    check_grid(half_length, n)?;
    let params = profile.params;
    let amplitude = match profile.turning {
        Some(tp) => (tp.v_m - params.v_star).abs(),
        None => profile
            .v
            .iter()
            .fold(0.0f64, |acc, &v| acc.max((v - params.v_star).abs())),
    };
    let edge = profile.sample_smooth(model, half_length)?.0;
    let seam_mismatch = if amplitude > 0.0 {
        (edge - params.v_star).abs() / amplitude
    } else {
        0.0
    };
    if seam_mismatch > SEAM_THRESHOLD {
        return Err(Error::DomainTooSmall {
            mismatch: seam_mismatch,
            threshold: SEAM_THRESHOLD,
        });
    }
    let y = grid(half_length, n);
    let mut v = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let domain = model.domain();
    for &yj in &y {
        let vj = profile.sample_smooth(model, yj)?.0;
        if !domain.contains(vj) {
            return Err(Error::DomainViolation {
                v: vj,
                domain: domain.to_string(),
            });
        }
        v.push(vj);
        u.push(params.u_star - params.c * (vj - params.v_star));
    }
    Ok(Periodized {
        state: EvolutionState {
            half_length,
            y,
            v,
            u,
            t: 0.0,
        },
        seam_mismatch,
    })
}

/// Best translate of the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalFit {
    /// min over σ of √(‖V − v(·+σ)‖²_{H¹} + ‖U − u(·+σ)‖²_{L²}).
    pub distance: f64,
    /// Minimizing σ in (−L, L].
    pub shift: f64,
}

/// Precomputed reference spectra for repeated orbital-distance queries.
#[derive(Clone)]
pub struct OrbitalMetric {
    spectral: Spectral,
    half_length: f64,
    weight: Vec<f64>,
    ref_v: Vec<Complex64>,
    ref_u: Vec<Complex64>,
    /// Golden-section stopping width.
    pub tolerance: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

impl OrbitalMetric {
    pub fn new(reference: &EvolutionState) -> Result<Self> {
        check_grid(reference.half_length, reference.n())?;
        let spectral = Spectral::new(reference.n(), reference.half_length);
        let weight = spectral.k_sq.iter().map(|k2| 1.0 + k2).collect();
        Ok(Self {
            ref_v: spectral.spectrum(&reference.v),
            ref_u: spectral.spectrum(&reference.u),
            weight,
            half_length: reference.half_length,
            tolerance: 1e-10 * reference.half_length,
            spectral,
        })
    }

    fn squared(&self, a_v: &[Complex64], a_u: &[Complex64], s: f64) -> f64 {
        let mut total = 0.0;
        for m in 0..a_v.len() {
            let ph = self.spectral.phase(m, s);
            total += self.weight[m] * (a_v[m] - self.ref_v[m] * ph).norm_sqr()
                + (a_u[m] - self.ref_u[m] * ph).norm_sqr();
        }
        let n = a_v.len() as f64;
        total * (2.0 * self.half_length / n) / n
    }

    /// √(‖v − v*‖²_{H¹} + ‖u − u*‖²_{L²}) of the reference itself.
    pub fn reference_norm(&self, v_star: f64, u_star: f64) -> f64 {
        let n = self.spectral.n as f64;
        let mut total = 0.0;
        for m in 0..self.ref_v.len() {
            let (mut a, mut b) = (self.ref_v[m], self.ref_u[m]);
            if m == 0 {
                a -= n * v_star;
                b -= n * u_star;
            }
            total += self.weight[m] * a.norm_sqr() + b.norm_sqr();
        }
        (total * (2.0 * self.half_length / n) / n).sqrt()
    }

    pub fn distance(&self, state: &EvolutionState) -> Result<OrbitalFit> {
        let n = self.spectral.n;
        if state.n() != n || state.half_length != self.half_length {
            return Err(Error::InvalidConfig(
                "state and reference must share the grid".into(),
            ));
        }
        let a_v = self.spectral.spectrum(&state.v);
        let a_u = self.spectral.spectrum(&state.u);
        // cross-correlation over all integer shifts
        let cross: Vec<Complex64> = (0..n)
            .map(|m| self.weight[m] * a_v[m].conj() * self.ref_v[m] + a_u[m].conj() * self.ref_u[m])
            .collect();
        let mut corr = cross.clone();
        self.spectral.inverse.process(&mut corr);
        let best = (0..n)
            .max_by(|&i, &j| corr[i].re.total_cmp(&corr[j].re))
            .unwrap_or(0);
        let dy = 2.0 * self.half_length / n as f64;
        let center = dy * best as f64;

        // golden section on one cell either side
        let f = |s: f64| self.squared(&a_v, &a_u, s);
        let (mut lo, mut hi) = (center - dy, center + dy);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > self.tolerance {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = f(x2);
            }
        }
        let mut s = 0.5 * (lo + hi);
        let mut value = f(s);

        // Newton polish on the stationarity condition of the correlation
        for _ in 0..4 {
            let (mut g1, mut g2) = (0.0, 0.0);
            for m in 0..n {
                let k = self.spectral.k_shift[m];
                let z = cross[m] * self.spectral.phase(m, s);
                g1 -= k * z.im;
                g2 -= k * k * z.re;
            }
            if g2 >= 0.0 || !g1.is_finite() {
                break;
            }
            let candidate = s - g1 / g2;
            if (candidate - s).abs() > dy {
                break;
            }
            let trial = f(candidate);
            if trial <= value {
                s = candidate;
                value = trial;
            } else {
                break;
            }
        }

        let period = 2.0 * self.half_length;
        let mut shift = s.rem_euclid(period);
        if shift > self.half_length {
            shift -= period;
        }
        Ok(OrbitalFit {
            distance: value.max(0.0).sqrt(),
            shift,
        })
    }
}

/// Distance from `state` to the translation orbit of `reference`.
pub fn orbital_distance(state: &EvolutionState, reference: &EvolutionState) -> Result<OrbitalFit> {
    OrbitalMetric::new(reference)?.distance(state)
}

/// Mean-zero Gaussian bump added to V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub amplitude: f64,
    /// Gaussian width; `None` means L/20.
    pub width: Option<f64>,
    pub center: f64,
}

impl Perturbation {
    pub fn none() -> Self {
        Self::bump(0.0)
    }

    pub fn bump(amplitude: f64) -> Self {
        Self {
            amplitude,
            width: None,
            center: 0.0,
        }
    }

    /// The bump δ(g − ḡ) on the grid, g = exp(−(y − y₀)²/(2w²)).
    pub fn sample(&self, y: &[f64], half_length: f64) -> Vec<f64> {
        let width = self.width.unwrap_or(half_length / 20.0);
        let g: Vec<f64> = y
            .iter()
            .map(|&x| {
                let z = (x - self.center) / width;
                (-0.5 * z * z).exp()
            })
            .collect();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        g.iter().map(|x| self.amplitude * (x - mean)).collect()
    }
}

/// Settings for [`run_instability_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub params: WaveParameters,
    pub half_length: f64,
    pub n: usize,
    /// Fixed time step; `None` selects the stable step automatically.
    pub dt: Option<f64>,
    pub courant: f64,
    pub t_final: f64,
    pub perturbation: Perturbation,
    pub sample_stride: usize,
    pub snapshot_times: Vec<f64>,
    pub growth_factor: f64,
    /// End the run once the distance reaches this multiple of the
    /// reference wave's own norm; `None` always runs to `t_final`.
    pub stop_ratio: Option<f64>,
    pub profile: ProfileOptions,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, params: WaveParameters) -> Self {
        Self {
            model,
            params,
            half_length: 40.0,
            n: 1024,
            dt: None,
            courant: 0.5,
            t_final: 20.0,
            perturbation: Perturbation::none(),
            sample_stride: 100,
            snapshot_times: Vec::new(),
            growth_factor: 10.0,
            stop_ratio: Some(1.0),
            profile: ProfileOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.half_length, self.n)?;
        let bad = |what: &str, x: f64| {
            Err(Error::InvalidConfig(format!(
                "{what} must be positive, got {x}"
            )))
        };
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("time horizon", self.t_final);
        }
        if !(self.courant > 0.0 && self.courant.is_finite()) {
            return bad("courant number", self.courant);
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("time step", dt);
            }
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig(
                "sample stride must be at least 1".into(),
            ));
        }
        if !(self.growth_factor > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "growth factor must exceed 1, got {}",
                self.growth_factor
            )));
        }
        if !self.perturbation.amplitude.is_finite() {
            return Err(Error::InvalidConfig(
                "perturbation amplitude must be finite".into(),
            ));
        }
        if let Some(w) = self.perturbation.width {
            if !(w > 0.0 && w.is_finite()) {
                return bad("perturbation width", w);
            }
        }
        if let Some(r) = self.stop_ratio {
            if !(r > 0.0) {
                return bad("stop ratio", r);
            }
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "snapshot times must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One diagnostics sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub orbital_distance: f64,
    pub mass: f64,
    pub momentum: f64,
    pub hamiltonian: f64,
    /// Best translate σ(t), unwrapped across the period.
    #[serde(skip)]
    pub shift: f64,
}

/// Diagnostics CSV with header `t,orbital_distance,mass,momentum,hamiltonian`.
pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from("t,orbital_distance,mass,momentum,hamiltonian\n");
    for r in rows {
        out.push_str(&csv_row(&[
            r.t,
            r.orbital_distance,
            r.mass,
            r.momentum,
            r.hamiltonian,
        ]));
    }
    out
}

/// Outcome of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: String,
    pub v_star: f64,
    pub u_star: f64,
    pub c: f64,
    pub half_length: f64,
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub t_reached: f64,
    pub t_final: f64,
    pub perturbation_amplitude: f64,
    pub perturbation_width: f64,
    pub seam_mismatch: f64,
    pub d0: f64,
    pub d_max: f64,
    pub growth_threshold: f64,
    /// First sampled time with distance ≥ growth_threshold.
    pub crossing_time: Option<f64>,
    /// "none" or "crossed".
    pub growth: String,
    /// max |Q(t) − Q(0)| / max(|Q(0)|, 1) over samples.
    pub mass_drift: f64,
    pub momentum_drift: f64,
    pub hamiltonian_drift: f64,
    /// −dσ/dt from a least-squares fit of the best translate.
    pub fitted_speed: Option<f64>,
    /// √(‖v − v*‖²_{H¹} + ‖u − u*‖²_{L²}) of the unperturbed wave.
    pub reference_norm: f64,
    /// True when the run ended before `t_final` because the distance
    /// reached `stop_ratio` times the reference norm.
    pub stopped_early: bool,
    pub aborted: Option<String>,
    pub last_good_time: Option<f64>,
}

/// A configured run that can be advanced and inspected.
pub struct Experiment {
    config: ExperimentConfig,
    reference: EvolutionState,
    state: EvolutionState,
    metric: OrbitalMetric,
    seam_mismatch: f64,
    reference_norm: f64,
    stopped_early: bool,
    rows: Vec<DiagnosticsRow>,
    snapshots: Vec<EvolutionState>,
    steps: usize,
    dt0: f64,
    aborted: Option<Error>,
}

impl Experiment {
    /// Builds the profile, periodizes it and applies the perturbation.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let profile = reconstruct_profile(&config.model, &config.params, &config.profile)?;
        let needed = 20.0 / profile.decay_rate;
        if config.half_length < needed {
            return Err(Error::DomainTooSmall {
                mismatch: (-profile.decay_rate * config.half_length).exp(),
                threshold: (-20.0f64).exp(),
            });
        }
        let periodized = periodize(&profile, &config.model, config.half_length, config.n)?;
        let reference = periodized.state;
        let mut state = reference.clone();
        let bump = config.perturbation.sample(&state.y, config.half_length);
        let domain = config.model.domain();
        for (v, b) in state.v.iter_mut().zip(&bump) {
            *v += b;
            if !domain.contains(*v) {
                return Err(Error::InvalidConfig(format!(
                    "perturbed state leaves the model domain at V = {v}"
                )));
            }
        }
        let metric = OrbitalMetric::new(&reference)?;
        let reference_norm = metric.reference_norm(config.params.v_star, config.params.u_star);
        Ok(Self {
            reference_norm,
            stopped_early: false,
            config,
            reference,
            state,
            metric,
            seam_mismatch: periodized.seam_mismatch,
            rows: Vec::new(),
            snapshots: Vec::new(),
            steps: 0,
            dt0: f64::NAN,
            aborted: None,
        })
    }

    pub fn reference(&self) -> &EvolutionState {
        &self.reference
    }

    pub fn state(&self) -> &EvolutionState {
        &self.state
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn snapshots(&self) -> &[EvolutionState] {
        &self.snapshots
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn sample(&mut self, solver: &Solver) -> Result<()> {
        let fit = self.metric.distance(&self.state)?;
        let q = solver.conserved(
            &self.state,
            self.config.params.v_star,
            self.config.params.u_star,
        )?;
        let period = 2.0 * self.config.half_length;
        let shift = match self.rows.last() {
            Some(prev) => {
                let turns = ((prev.shift - fit.shift) / period).round();
                fit.shift + turns * period
            }
            None => fit.shift,
        };
        self.rows.push(DiagnosticsRow {
            t: self.state.t,
            orbital_distance: fit.distance,
            mass: q.mass,
            momentum: q.momentum,
            hamiltonian: q.hamiltonian,
            shift,
        });
        Ok(())
    }

    /// Integrates to the time horizon. Step failures are recorded and
    /// returned; samples taken up to the failure are kept.
    pub fn run(&mut self) -> Result<()> {
        let model = self.config.model.clone();
        let mut solver = Solver::new(&model, self.config.half_length, self.config.n)?;
        let scale = self
            .state
            .v
            .iter()
            .chain(&self.state.u)
            .fold(1.0f64, |acc, x| acc.max(x.abs()));
        solver.blowup_bound = 1e6 * scale;
        let dy = self.state.dy();
        let t_final = self.config.t_final;
        let mut targets: Vec<f64> = self
            .config
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t <= t_final)
            .collect();
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        let mut pending = targets.into_iter().peekable();
        while let Some(&t) = pending.peek() {
            if t > 0.0 {
                break;
            }
            self.snapshots.push(self.state.clone());
            pending.next();
        }

        let auto = self.config.dt.is_none();
        let mut dt = match self.config.dt {
            Some(dt) => dt,
            None => stable_time_step(self.config.courant, dy, solver.kappa_max(&self.state)?),
        };
        self.dt0 = dt;
        self.sample(&solver)?;
        let slack = 1e-12 * t_final.max(1.0);
        while self.state.t < t_final - slack {
            if auto && self.steps > 0 && self.steps.is_multiple_of(100) {
                match solver.kappa_max(&self.state) {
                    Ok(k) => dt = stable_time_step(self.config.courant, dy, k),
                    Err(_) => {
                        let err = Error::DomainEscape {
                            t: self.state.t,
                            last_good_t: self.state.t,
                        };
                        self.aborted = Some(err.clone());
                        return Err(err);
                    }
                }
            }
            let next_target = pending.peek().copied().unwrap_or(t_final).min(t_final);
            let remaining = next_target - self.state.t;
            let h = if remaining <= dt * (1.0 + 1e-9) {
                remaining
            } else {
                dt
            };
            if let Err(err) = solver.step(&mut self.state, h) {
                self.aborted = Some(err.clone());
                return Err(err);
            }
            if h == remaining {
                self.state.t = next_target;
            }
            self.steps += 1;
            let mut hit = false;
            while let Some(&t) = pending.peek() {
                if t > self.state.t + slack {
                    break;
                }
                hit = true;
                pending.next();
            }
            if hit {
                self.snapshots.push(self.state.clone());
            }
            let done = self.state.t >= t_final - slack;
            if self.steps.is_multiple_of(self.config.sample_stride) || done {
                self.sample(&solver)?;
                let distance = self.rows.last().map_or(0.0, |r| r.orbital_distance);
                if let Some(ratio) = self.config.stop_ratio {
                    if !done && distance >= ratio * self.reference_norm {
                        self.stopped_early = true;
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> RunSummary {
        let cfg = &self.config;
        let d0 = self.rows.first().map_or(f64::NAN, |r| r.orbital_distance);
        let d_max = self
            .rows
            .iter()
            .fold(0.0f64, |acc, r| acc.max(r.orbital_distance));
        let threshold = cfg.growth_factor * d0.max(MIN_REFERENCE_DISTANCE);
        let crossing_time = self
            .rows
            .iter()
            .find(|r| r.orbital_distance >= threshold)
            .map(|r| r.t);
        let drift = |get: fn(&DiagnosticsRow) -> f64| -> f64 {
            match self.rows.first() {
                Some(first) => {
                    let q0 = get(first);
                    let denom = q0.abs().max(1.0);
                    self.rows
                        .iter()
                        .fold(0.0f64, |acc, r| acc.max((get(r) - q0).abs() / denom))
                }
                None => f64::NAN,
            }
        };
        RunSummary {
            model: cfg.model.label().to_string(),
            v_star: cfg.params.v_star,
            u_star: cfg.params.u_star,
            c: cfg.params.c,
            half_length: cfg.half_length,
            n: cfg.n,
            dt: self.dt0,
            steps: self.steps,
            t_reached: self.state.t,
            t_final: cfg.t_final,
            perturbation_amplitude: cfg.perturbation.amplitude,
            perturbation_width: cfg.perturbation.width.unwrap_or(cfg.half_length / 20.0),
            seam_mismatch: self.seam_mismatch,
            d0,
            d_max,
            growth_threshold: threshold,
            crossing_time,
            growth: if crossing_time.is_some() {
                "crossed"
            } else {
                "none"
            }
            .to_string(),
            mass_drift: drift(|r| r.mass),
            momentum_drift: drift(|r| r.momentum),
            hamiltonian_drift: drift(|r| r.hamiltonian),
            fitted_speed: fitted_speed(&self.rows),
            reference_norm: self.reference_norm,
            stopped_early: self.stopped_early,
            aborted: self.aborted.as_ref().map(|e| e.to_string()),
            last_good_time: self.aborted.as_ref().and_then(Error::last_good_time),
        }
    }
}

/// −slope of the least-squares line through (t, σ(t)).
pub fn fitted_speed(rows: &[DiagnosticsRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as f64;
    let tm = rows.iter().map(|r| r.t).sum::<f64>() / n;
    let sm = rows.iter().map(|r| r.shift).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for r in rows {
        num += (r.t - tm) * (r.shift - sm);
        den += (r.t - tm) * (r.t - tm);
    }
    if den > 0.0 {
        Some(-num / den)
    } else {
        None
    }
}

/// Diagnostics, snapshots and summary of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<DiagnosticsRow>,
    pub snapshots: Vec<EvolutionState>,
    pub summary: RunSummary,
}

/// Evolves the (perturbed) wave of `config` and reports orbital-distance growth.
pub fn run_instability_experiment(config: ExperimentConfig) -> Result<ExperimentOutput> {
    let mut experiment = Experiment::new(config)?;
    experiment.run()?;
    Ok(ExperimentOutput {
        summary: experiment.summary(),
        rows: experiment.rows,
        snapshots: experiment.snapshots,
    })
}
