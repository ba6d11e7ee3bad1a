use std::hint::black_box;

use brownian_ray::sampler::{generate_batch, Execution, GaussianPathSampler, McConfig, TimeGrid};
use brownian_ray::RayParams;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn executions() -> Vec<(&'static str, Execution)> {
    let mut v = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    v.push(("parallel", Execution::Parallel));
    v
}

fn batch_by_execution(c: &mut Criterion) {
    let kernel = RayParams::new(1.0, 1.5, 1.0).unwrap().kernel();
    let sampler = GaussianPathSampler::ray(kernel, TimeGrid::uniform(1.0, 250).unwrap()).unwrap();
    let mut group = c.benchmark_group("ray_paths_20000x250");
    group.sample_size(10);
    for (name, exec) in executions() {
        let mc = McConfig::new(20_000, 1).with_execution(exec);
        group.bench_function(name, |b| b.iter(|| black_box(generate_batch(&sampler, &mc).unwrap())));
    }
    group.finish();
}

fn markov_vs_dense(c: &mut Criterion) {
    let kernel = RayParams::new(1.0, 1.5, 1.0).unwrap().kernel();
    let mut group = c.benchmark_group("factor");
    group.sample_size(10);
    for n in [50, 200] {
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let markov = GaussianPathSampler::ray(kernel, grid.clone()).unwrap();
        let dense = GaussianPathSampler::ray_dense(kernel, grid).unwrap();
        let mc = McConfig::new(2_000, 2).with_execution(Execution::Sequential);
        group.bench_with_input(BenchmarkId::new("markov", n), &n, |b, _| {
            b.iter(|| black_box(generate_batch(&markov, &mc).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("dense", n), &n, |b, _| {
            b.iter(|| black_box(generate_batch(&dense, &mc).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, batch_by_execution, markov_vs_dense);
criterion_main!(benches);
