use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ekwave::{
    periodize, reconstruct_profile, ModelSpec, OrbitalMetric, Perturbation, ProfileOptions, Solver,
    WaveParameters,
};

fn spectral(c: &mut Criterion) {
    let model = ModelSpec::bona_sachs(2).unwrap();
    let profile = reconstruct_profile(
        &model,
        &WaveParameters::new(0.0, 0.0),
        &ProfileOptions::default(),
    )
    .unwrap();
    let reference = periodize(&profile, &model, 40.0, 1024).unwrap().state;
    let mut perturbed = reference.clone();
    let bump = Perturbation::bump(1e-3).sample(&perturbed.y, 40.0);
    perturbed.v.iter_mut().zip(&bump).for_each(|(v, b)| *v += b);

    let mut solver = Solver::new(&model, 40.0, 1024).unwrap();
    c.bench_function("solver/rhs n=1024", |b| {
        b.iter(|| solver.rhs(black_box(&perturbed)).unwrap())
    });
    c.bench_function("solver/rk4 step n=1024", |b| {
        b.iter_batched_ref(
            || perturbed.clone(),
            |s| solver.step(s, 1e-3).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    let metric = OrbitalMetric::new(&reference).unwrap();
    let moved = perturbed.shifted(3.7);
    c.bench_function("orbital_distance n=1024", |b| {
        b.iter(|| metric.distance(black_box(&moved)).unwrap())
    });
}

criterion_group!(benches, spectral);
criterion_main!(benches);
