//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs sequentially (no libtest harness) so the wall-clock checks are not
//! distorted by other tests sharing the machine.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ekwave::{
    moment, moment_direct, moment_prime, moment_report, moment_second, moment_second_standing,
    periodize, reconstruct_profile, run_instability_experiment, stable_time_step, Direction,
    EvolutionState, ExperimentConfig, ModelSpec, MomentOptions, Perturbation, ProfileOptions,
    Solver, Verdict, WaveParameters,
};

type Outcome = Result<String, String>;

fn bs(q: u32) -> ModelSpec {
    ModelSpec::bona_sachs(q).unwrap()
}

fn gp(alpha: f64, beta: f64) -> ModelSpec {
    ModelSpec::gross_pitaevskii(alpha, beta).unwrap()
}

fn opts() -> MomentOptions {
    MomentOptions::default()
}

fn check(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("{what} took {elapsed:.2?}, limit {limit:?}"),
    )
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let model = bs(2);
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let c = 0.1 * i as f64;
        let m = moment(&model, &WaveParameters::new(0.0, c), &opts()).map_err(err)?;
        let exact = 1.2 * (1.0 - c * c).powf(2.5);
        worst = worst.max((m - exact).abs() / exact);
    }
    check(worst < 1e-6, format!("m(c) relative error {worst:e}"))?;
    let m2_0 = moment_second(&model, &WaveParameters::new(0.0, 0.0), &opts())
        .map_err(err)?
        .value;
    check((m2_0 + 6.0).abs() < 1e-6, format!("m''(0) = {m2_0}"))?;
    let m2_half = moment_second(&model, &WaveParameters::new(0.0, 0.5), &opts())
        .map_err(err)?
        .value;
    check(m2_half.abs() < 1e-5, format!("m''(0.5) = {m2_half:e}"))?;
    let mut changes = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..50 {
        let c = 0.02 * i as f64;
        let m2 = moment_second(&model, &WaveParameters::new(0.0, c), &opts())
            .map_err(err)?
            .value;
        if let Some((c0, m0)) = prev {
            if m0.signum() != m2.signum() {
                changes.push((c0, c));
            }
        }
        prev = Some((c, m2));
    }
    check(
        changes.len() == 1 && changes[0].0 < 0.5 + 1e-12 && changes[0].1 > 0.5 - 1e-12,
        format!("sign changes of m'' on (0, 1): {changes:?}"),
    )?;
    within(start.elapsed(), Duration::from_secs(1), "criterion 1")?;
    Ok(format!(
        "max rel err m {worst:.1e}, m''(0) = {m2_0:.12}, m''(0.5) = {m2_half:.1e}, one sign change in {:?}, {:.2?}",
        changes[0],
        start.elapsed()
    ))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let model = gp(1.0, 1.0);
    let report = moment_report(&model, &WaveParameters::new(2.0, 0.0), &opts()).map_err(err)?;
    check(
        (report.v_m - 1.0).abs() < 1e-12 && report.direction == Direction::Depression,
        format!("v_m(0) = {} ({:?})", report.v_m, report.direction),
    )?;
    let m_err = (report.m - (4.0 - PI) / 16.0).abs();
    check(m_err < 1e-8, format!("m(0) error {m_err:e}"))?;
    let m2_err = (report.m_second + 2.0 * (PI - 2.0)).abs();
    check(m2_err < 1e-6, format!("m''(0) error {m2_err:e}"))?;
    within(start.elapsed(), Duration::from_secs(1), "criterion 2")?;
    Ok(format!(
        "v_m = {} depression, |m - (4-pi)/16| = {m_err:.1e}, |m'' + 2(pi-2)| = {m2_err:.1e}, {:.2?}",
        report.v_m,
        start.elapsed()
    ))
}

fn fd_pairs() -> Vec<(ModelSpec, WaveParameters)> {
    vec![
        (bs(2), WaveParameters::new(0.0, 0.1)),
        (bs(2), WaveParameters::new(0.0, 0.3)),
        (bs(2), WaveParameters::new(0.0, 0.7)),
        (bs(3), WaveParameters::new(0.0, 0.2)),
        (bs(3), WaveParameters::new(0.0, 0.6)),
        (bs(4), WaveParameters::new(0.0, 0.4)),
        (bs(5), WaveParameters::new(0.0, 0.8)),
        (gp(1.0, 1.0), WaveParameters::new(2.0, 0.05)),
        (gp(1.0, 1.0), WaveParameters::new(2.0, 0.15)),
        (gp(2.0, 1.0), WaveParameters::new(1.5, 0.3)),
    ]
}

fn criterion_3() -> Outcome {
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for (model, params) in fd_pairs() {
        let at = |dc: f64| params.with_speed(params.c + dc);
        let h1 = 1e-4;
        let fd1 = (moment(&model, &at(h1), &opts()).map_err(err)?
            - moment(&model, &at(-h1), &opts()).map_err(err)?)
            / (2.0 * h1);
        let mp = moment_prime(&model, &params, &opts()).map_err(err)?;
        let e1 = (mp - fd1).abs() / fd1.abs();
        let h2 = 1e-3;
        let fd2 = (moment_prime(&model, &at(h2), &opts()).map_err(err)?
            - moment_prime(&model, &at(-h2), &opts()).map_err(err)?)
            / (2.0 * h2);
        let m2 = moment_second(&model, &params, &opts()).map_err(err)?.value;
        let e2 = (m2 - fd2).abs() / fd2.abs();
        check(
            e1 < 1e-5 && e2 < 1e-4,
            format!(
                "{} c = {}: m' rel {e1:e}, m'' rel {e2:e}",
                model.label(),
                params.c
            ),
        )?;
        worst1 = worst1.max(e1);
        worst2 = worst2.max(e2);
    }
    Ok(format!(
        "10 pairs, worst m' rel err {worst1:.1e}, worst m'' rel err {worst2:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let mut configs = fd_pairs();
    configs.extend([
        (bs(2), WaveParameters::new(0.0, 0.0)),
        (bs(2), WaveParameters::new(0.0, 0.5)),
        (bs(3), WaveParameters::new(0.0, 0.0)),
        (gp(1.0, 1.0), WaveParameters::new(2.0, 0.0)),
        (gp(1.0, 1.0), WaveParameters::new(2.0, 0.1)),
    ]);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for (model, params) in &configs {
        let profile =
            reconstruct_profile(model, params, &ProfileOptions::default()).map_err(err)?;
        let direct = moment_direct(&profile, model).map_err(err)?;
        let quad = moment(model, params, &opts()).map_err(err)?;
        let rel = (direct - quad).abs() / quad.abs();
        check(
            rel < 1e-6 && profile.first_integral_residual < 1e-8,
            format!(
                "{} c = {}: rel {rel:e}, residual {:e}",
                model.label(),
                params.c,
                profile.first_integral_residual
            ),
        )?;
        worst = worst.max(rel);
        worst_residual = worst_residual.max(profile.first_integral_residual);
    }
    Ok(format!(
        "{} configurations, worst rel diff {worst:.1e}, worst first-integral residual {worst_residual:.1e}",
        configs.len()
    ))
}

fn criterion_5() -> Outcome {
    let mut cases: Vec<(ModelSpec, f64)> = (2..=5).map(|q| (bs(q), 0.0)).collect();
    for alpha in [0.5, 1.0, 2.0] {
        for beta in [0.5, 1.0, 2.0] {
            cases.push((gp(alpha, beta), 3.0 * beta / alpha));
        }
    }
    let mut largest = f64::NEG_INFINITY;
    for (model, v_star) in &cases {
        let m2 = moment_second_standing(model, *v_star, &opts()).map_err(err)?;
        let report =
            moment_report(model, &WaveParameters::new(*v_star, 0.0), &opts()).map_err(err)?;
        check(
            m2 < 0.0 && report.verdict == Verdict::UnstableStanding,
            format!(
                "{} v* = {v_star}: m''(0) = {m2}, verdict {:?}",
                model.label(),
                report.verdict
            ),
        )?;
        largest = largest.max(m2);
    }
    Ok(format!(
        "{} models, all UnstableStanding, largest m''(0) = {largest:.4}",
        cases.len()
    ))
}

fn criterion_6() -> Outcome {
    let model = bs(2);
    let mut worst: f64 = 0.0;
    for c in [0.0, 0.5] {
        let profile = reconstruct_profile(
            &model,
            &WaveParameters::new(0.0, c),
            &ProfileOptions::default(),
        )
        .map_err(err)?;
        let s = 1.0 - c * c;
        for (xi, v) in profile.xi.iter().zip(&profile.v) {
            let exact = 1.5 * s / (0.5 * s.sqrt() * xi).cosh().powi(2);
            worst = worst.max((v - exact).abs());
        }
    }
    check(worst < 1e-6, format!("sup error {worst:e}"))?;
    Ok(format!("sup norm error {worst:.1e} for c in {{0, 0.5}}"))
}

fn rk4_ratio() -> Result<f64, String> {
    // a perturbed wave on a coarse grid, so the time error dominates roundoff
    let model = bs(2);
    let params = WaveParameters::new(0.0, 0.0);
    let profile = reconstruct_profile(&model, &params, &ProfileOptions::default()).map_err(err)?;
    let mut s0 = periodize(&profile, &model, 40.0, 256).map_err(err)?.state;
    let bump = Perturbation::bump(0.05).sample(&s0.y, 40.0);
    s0.v.iter_mut().zip(&bump).for_each(|(v, b)| *v += b);
    let t = 1.0;
    let dt = stable_time_step(0.5, s0.dy(), 1.0);
    let dt = t / (t / dt).ceil();
    let run = |h: f64| -> Result<EvolutionState, String> {
        let mut solver = Solver::new(&model, 40.0, 256).map_err(err)?;
        let mut s = s0.clone();
        for _ in 0..(t / h).round() as usize {
            solver.step(&mut s, h).map_err(err)?;
        }
        Ok(s)
    };
    let diff = |a: &EvolutionState, b: &EvolutionState| {
        a.v.iter()
            .zip(&b.v)
            .chain(a.u.iter().zip(&b.u))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let reference = run(dt / 16.0)?;
    let e1 = diff(&run(dt)?, &reference);
    let e2 = diff(&run(dt / 2.0)?, &reference);
    Ok(e1 / e2)
}

fn criterion_7() -> Outcome {
    let model = bs(2);
    let mut config = ExperimentConfig::new(model.clone(), WaveParameters::new(0.0, 0.0));
    config.half_length = 40.0;
    config.n = 1024;
    config.t_final = 20.0;
    let out = run_instability_experiment(config).map_err(err)?;
    let s = &out.summary;
    check(s.d_max < 1e-4, format!("unperturbed d_max = {:e}", s.d_max))?;
    check(
        s.mass_drift < 1e-10 && s.momentum_drift < 1e-10,
        format!(
            "mass drift {:e}, momentum drift {:e}",
            s.mass_drift, s.momentum_drift
        ),
    )?;
    check(
        s.hamiltonian_drift < 1e-8,
        format!("hamiltonian drift {:e}", s.hamiltonian_drift),
    )?;
    let ratio = rk4_ratio()?;
    check(
        (ratio - 16.0).abs() <= 0.2 * 16.0,
        format!("RK4 ratio {ratio}"),
    )?;

    let mut travel = ExperimentConfig::new(model, WaveParameters::new(0.0, 0.3));
    travel.t_final = 10.0;
    let out = run_instability_experiment(travel).map_err(err)?;
    let speed = out.summary.fitted_speed.ok_or("no speed fit")?;
    check(
        (speed - 0.3).abs() <= 0.02 * 0.3,
        format!("measured speed {speed}"),
    )?;
    Ok(format!(
        "d_max {:.1e}, drift mass {:.1e} momentum {:.1e} H {:.1e}, RK4 ratio {ratio:.2}, speed {speed:.6}",
        s.d_max, s.mass_drift, s.momentum_drift, s.hamiltonian_drift
    ))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut config = ExperimentConfig::new(bs(2), WaveParameters::new(0.0, 0.0));
    config.t_final = 100.0;
    config.perturbation = Perturbation::bump(1e-3);
    let out = run_instability_experiment(config).map_err(err)?;
    let s = &out.summary;
    let crossing = s.crossing_time.ok_or_else(|| {
        format!(
            "no crossing of 10 d0 = {:e}; d_max = {:e}",
            s.growth_threshold, s.d_max
        )
    })?;
    check(crossing < 100.0, format!("crossing at {crossing}"))?;
    within(start.elapsed(), Duration::from_secs(60), "criterion 8")?;
    Ok(format!(
        "d0 = {:.3e}, crossed 10 d0 at t = {crossing:.3}, run ended at t = {:.2}, {:.1?}",
        s.d0,
        s.t_reached,
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 Bona-Sachs closed forms", criterion_1),
        ("2 Gross-Pitaevskii closed forms", criterion_2),
        ("3 derivative consistency", criterion_3),
        ("4 oracle equivalence", criterion_4),
        ("5 standing waves unstable", criterion_5),
        ("6 profile accuracy", criterion_6),
        ("7 evolution sanity", criterion_7),
        ("8 instability demonstration", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({detail})");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 8 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
