use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::f64::consts::TAU;
use std::hint::black_box;

use kl_core::analysis::{geometric_grid, slope_profile_with};
use kl_core::counterexample::{build_rings, CexField};
use kl_core::zoo::Quad;
use kl_core::{Exec, Point};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn hausdorff(c: &mut Criterion) {
    let bodies = build_rings(12).unwrap();
    let (a, b) = (bodies.body(20), bodies.body(21));
    let mut group = c.benchmark_group("hausdorff");
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new(name, 4096), &exec, |bench, &exec| {
            bench.iter(|| kl_core::geometry::hausdorff_dist_with(black_box(a), black_box(b), 4096, exec))
        });
    }
    group.finish();
}

fn slope_profile(c: &mut Criterion) {
    let field = Quad::new(1.0, 0.0, 100.0).unwrap();
    let grid = geometric_grid(0.5, 16, 0.5).unwrap();
    let mut group = c.benchmark_group("slope_profile");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new(name, 256), &exec, |bench, &exec| {
            bench.iter(|| slope_profile_with(&field, black_box(&grid), 256, exec).unwrap())
        });
    }
    group.finish();
}

fn cex_batch(c: &mut Criterion) {
    let field = CexField::standard(10).unwrap();
    let points: Vec<Point> = (0..2000)
        .map(|i| {
            let (r, a) = ((i % 37) as f64 / 37.0, TAU * i as f64 / 2000.0);
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    let mut group = c.benchmark_group("cex_eval");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::new(name, points.len()), &exec, |bench, &exec| {
            bench.iter(|| exec.map_slice(black_box(&points), |p| field.eval_cex(p)))
        });
    }
    group.finish();
}

criterion_group!(benches, hausdorff, slope_profile, cex_batch);
criterion_main!(benches);
