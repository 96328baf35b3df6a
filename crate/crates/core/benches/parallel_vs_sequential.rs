use std::collections::BTreeMap;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use warpcurv::models::{builtin_graph, lookup};
use warpcurv::verify::{check_identity_suite, check_mean_estimate, Region, Settings};
use warpcurv::Exec;

fn strategies() -> Vec<(&'static str, Exec)> {
    let mut out = vec![("sequential", Exec::Sequential)];
    if Exec::parallel_available() {
        out.push(("parallel", Exec::Parallel));
    }
    out
}

fn bench_mean_estimate(c: &mut Criterion) {
    let model = lookup("cosh-hyperbolic", 2).unwrap();
    let params: BTreeMap<String, f64> = [("a".to_string(), 0.3)].into_iter().collect();
    let f = builtin_graph("bump_hyperbolic", &params, 2).unwrap();

    let mut group = c.benchmark_group("mean_estimate");
    group.sample_size(10);
    for grid in [17usize, 33] {
        let region = Region::new(vec![-4.0, 0.05], vec![4.0, 20.0], grid, 1).unwrap();
        for (name, exec) in strategies() {
            let settings = Settings { exec, ..Settings::default() };
            group.bench_with_input(BenchmarkId::new(name, grid), &region, |b, region| {
                b.iter(|| check_mean_estimate(&model.product, &f, region, &settings).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_identity_suite(c: &mut Criterion) {
    let model = lookup("sinh-sphere", 3).unwrap();
    let params: BTreeMap<String, f64> =
        [("a", 0.3), ("b", 1.0), ("c1", 1.5), ("c2", 1.5)].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let f = builtin_graph("bump", &params, 3).unwrap();
    let region = Region::new(vec![0.5, 0.5, -2.0], vec![2.6, 2.6, 2.0], 9, 0).unwrap();

    let mut group = c.benchmark_group("identity_suite");
    group.sample_size(10);
    for n in [100usize, 1000] {
        for (name, exec) in strategies() {
            let settings = Settings { exec, ..Settings::default() };
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| check_identity_suite(&model.product, &f, &region, n, &settings).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_mean_estimate, bench_identity_suite);
criterion_main!(benches);
