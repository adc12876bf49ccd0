use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use popgen_core::rng::generation_stream;
use popgen_core::stats::chi_square_sf;
use popgen_core::{
    chi_square_hwe, run_trajectory, shuffle_pair_mating, wright_fisher_step, AlleleFrequencies, ExperimentKind,
    GametePool, GenotypeCounts, SimulationParams,
};

fn mating(c: &mut Criterion) {
    let mut group = c.benchmark_group("shuffle_pair_mating");
    for tokens in [100u64, 1_000, 10_000] {
        let pool = GametePool::new(tokens / 2, tokens / 2);
        let mut rng = generation_stream(1, 1);
        group.bench_with_input(BenchmarkId::from_parameter(tokens), &pool, |b, pool| {
            b.iter(|| shuffle_pair_mating(black_box(pool), &mut rng).unwrap())
        });
    }
    group.finish();
}

fn wright_fisher(c: &mut Criterion) {
    let mut group = c.benchmark_group("wright_fisher_step");
    let freqs = AlleleFrequencies::from_p(0.3).unwrap();
    for n in [50u64, 500, 5_000] {
        let mut rng = generation_stream(2, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| wright_fisher_step(black_box(&freqs), n, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn chi_square(c: &mut Criterion) {
    let counts = GenotypeCounts::new(30, 40, 30);
    c.bench_function("chi_square_hwe", |b| {
        b.iter(|| chi_square_hwe(black_box(&counts)).unwrap())
    });
    c.bench_function("chi_square_sf_df1", |b| b.iter(|| chi_square_sf(black_box(3.84), 1)));
}

fn trajectory(c: &mut Criterion) {
    let parental = GenotypeCounts::new(12, 26, 12);
    let mut group = c.benchmark_group("run_trajectory_100_generations");
    for kind in [
        ExperimentKind::IdealSqrt,
        ExperimentKind::Drift,
        ExperimentKind::Selection,
    ] {
        let params = SimulationParams::new(kind).with_seed(7).with_generations(100);
        group.bench_with_input(BenchmarkId::from_parameter(kind.as_str()), &params, |b, params| {
            b.iter(|| run_trajectory(black_box(&parental), params).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, mating, wright_fisher, chi_square, trajectory);
criterion_main!(benches);
