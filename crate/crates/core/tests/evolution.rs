use ekwave::{
    conserved, diagnostics_csv, orbital_distance, periodize, reconstruct_profile, rhs,
    run_instability_experiment, stable_time_step, step_rk4, Error, EvolutionState,
    ExperimentConfig, ModelSpec, Perturbation, ProfileOptions, Solver, WaveParameters,
};

fn bs2() -> ModelSpec {
    ModelSpec::bona_sachs(2).unwrap()
}

fn wave(model: &ModelSpec, params: WaveParameters, l: f64, n: usize) -> EvolutionState {
    let profile = reconstruct_profile(model, &params, &ProfileOptions::default()).unwrap();
    periodize(&profile, model, l, n).unwrap().state
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn constant_profile_periodizes_exactly() {
    let model = bs2();
    let params = WaveParameters::new(0.25, 0.0).with_u_star(-0.5);
    let xi: Vec<f64> = (-50..=50).map(|k| 0.5 * k as f64).collect();
    let profile =
        ekwave::Profile::from_samples(params, xi, vec![0.25; 101], vec![0.0; 101], 1.0).unwrap();
    let p = periodize(&profile, &model, 20.0, 64).unwrap();
    assert_eq!(p.seam_mismatch, 0.0);
    assert!(p.state.v.iter().all(|&v| v == 0.25));
    assert!(p.state.u.iter().all(|&u| u == -0.5));
}

#[test]
fn traveling_wave_rhs_is_a_translation() {
    let model = bs2();
    let c = 0.3;
    let state = wave(&model, WaveParameters::new(0.0, c), 40.0, 1024);
    let (dv, du) = rhs(&state, &model).unwrap();
    // V(y − ct): V_t = −c V_y, U_t = −c U_y, with U = −c V
    let reference = state.shifted(1e-6);
    let back = state.shifted(-1e-6);
    let mut worst: f64 = 0.0;
    for j in 0..state.n() {
        let v_y = (reference.v[j] - back.v[j]) / 2e-6;
        let u_y = (reference.u[j] - back.u[j]) / 2e-6;
        worst = worst
            .max((dv[j] + c * v_y).abs())
            .max((du[j] + c * u_y).abs());
    }
    assert!(worst < 1e-7, "{worst:e}");
}

#[test]
fn standing_rhs_converges_under_refinement() {
    let model = bs2();
    let params = WaveParameters::new(0.0, 0.0);
    let coarse = rhs(&wave(&model, params, 40.0, 256), &model).unwrap();
    let fine = rhs(&wave(&model, params, 40.0, 512), &model).unwrap();
    let e_coarse = max_abs(&coarse.0).max(max_abs(&coarse.1));
    let e_fine = max_abs(&fine.0).max(max_abs(&fine.1));
    assert!(e_coarse / e_fine >= 16.0, "{e_coarse:e} -> {e_fine:e}");
}

#[test]
fn gross_pitaevskii_depression_wave_is_steady() {
    let model = ModelSpec::gross_pitaevskii(1.0, 1.0).unwrap();
    let state = wave(&model, WaveParameters::new(2.0, 0.0), 40.0, 1024);
    assert!(state
        .v
        .iter()
        .all(|&v| v <= 2.0 + 1e-15 && v >= 1.0 - 1e-12));
    let (dv, du) = rhs(&state, &model).unwrap();
    assert!(max_abs(&dv).max(max_abs(&du)) < 1e-8);
}

#[test]
fn leaving_the_domain_aborts() {
    let model = ModelSpec::gross_pitaevskii(1.0, 1.0).unwrap();
    let mut state = EvolutionState::constant(10.0, 64, 2.0, 0.0).unwrap();
    state.v[7] = -0.1;
    assert!(matches!(
        rhs(&state, &model),
        Err(Error::DomainEscape { .. })
    ));
    let err = step_rk4(&state, &model, 1e-3).unwrap_err();
    assert_eq!(err.last_good_time(), Some(0.0));
}

#[test]
fn oversized_step_diverges_quickly() {
    let model = bs2();
    let state = wave(&model, WaveParameters::new(0.0, 0.0), 40.0, 1024);
    let dt = 10.0 * stable_time_step(0.5, state.dy(), 1.0);
    let mut solver = Solver::new(&model, 40.0, 1024).unwrap();
    let mut s = state.clone();
    let mut failed = None;
    for k in 0..100 {
        if let Err(e) = solver.step(&mut s, dt) {
            failed = Some((k, e));
            break;
        }
    }
    let (k, e) = failed.expect("divergence within 100 steps");
    assert!(k < 100);
    assert!(matches!(
        e,
        Error::Diverged { .. } | Error::DomainEscape { .. }
    ));
}

#[test]
fn standing_wave_energy_equals_moment() {
    // at c = 0 the energy density f(v) − f(0) equals ½v′², so H = ∫v′² = m(0) = 6/5
    let model = bs2();
    let state = wave(&model, WaveParameters::new(0.0, 0.0), 40.0, 1024);
    let a = conserved(&state, &model, 0.0, 0.0).unwrap();
    let b = conserved(&state, &model, 0.0, 0.0).unwrap();
    assert_eq!(a, b);
    assert!((a.hamiltonian - 1.2).abs() < 1e-9, "{}", a.hamiltonian);
    assert!((a.mass - 6.0).abs() < 1e-9, "{}", a.mass);
    assert_eq!(a.momentum, 0.0);
}

#[test]
fn perturbed_run_conserves_invariants() {
    let model = bs2();
    let mut config = ExperimentConfig::new(model, WaveParameters::new(0.0, 0.0));
    config.n = 512;
    config.t_final = 2.0;
    config.perturbation = Perturbation::bump(1e-2);
    config.sample_stride = 200;
    let out = run_instability_experiment(config).unwrap();
    let s = &out.summary;
    assert!(s.mass_drift < 1e-10);
    assert!(s.momentum_drift < 1e-10);
    assert!(s.hamiltonian_drift < 1e-8, "{:e}", s.hamiltonian_drift);
    assert!(s.d0 > 0.0 && s.d_max >= s.d0);
    assert_eq!(out.rows.first().unwrap().t, 0.0);
    assert_eq!(out.rows.last().unwrap().t, 2.0);
}

#[test]
fn unperturbed_run_reports_no_growth() {
    let mut config = ExperimentConfig::new(bs2(), WaveParameters::new(0.0, 0.0));
    config.n = 512;
    config.t_final = 1.0;
    config.snapshot_times = vec![0.0, 0.25, 1.0];
    let out = run_instability_experiment(config).unwrap();
    assert_eq!(out.summary.growth, "none");
    assert!(out.summary.crossing_time.is_none());
    assert!(out.summary.d_max < 1e-6);
    let times: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(times, vec![0.0, 0.25, 1.0]);
    assert!(out.snapshots[1].to_csv().starts_with("y,V,U\n"));
    let csv = diagnostics_csv(&out.rows);
    assert!(csv.starts_with("t,orbital_distance,mass,momentum,hamiltonian\n"));
    assert_eq!(csv.lines().count(), out.rows.len() + 1);
}

#[test]
fn experiment_rejects_small_domain() {
    let mut config = ExperimentConfig::new(bs2(), WaveParameters::new(0.0, 0.0));
    config.half_length = 10.0;
    config.n = 256;
    assert!(matches!(
        run_instability_experiment(config),
        Err(Error::DomainTooSmall { .. })
    ));
}

#[test]
fn distance_is_invariant_under_circular_shifts() {
    let model = bs2();
    let reference = wave(&model, WaveParameters::new(0.0, 0.0), 40.0, 512);
    let mut state = reference.clone();
    let bump = Perturbation::bump(1e-2).sample(&state.y, 40.0);
    state.v.iter_mut().zip(&bump).for_each(|(v, b)| *v += b);
    let base = orbital_distance(&state, &reference).unwrap().distance;
    for k in [1usize, 17, 200] {
        let mut rolled = state.clone();
        rolled.v.rotate_left(k);
        rolled.u.rotate_left(k);
        let d = orbital_distance(&rolled, &reference).unwrap().distance;
        assert!((d - base).abs() < 1e-12, "shift {k}: {d} vs {base}");
    }
}
