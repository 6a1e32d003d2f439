use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wiener_tau::fields::kp_residual;
use wiener_tau::tau::{tau_det, tau_subset_sum};
use wiener_tau::{PhasePoint, SolitonParams};

fn params(n: usize) -> SolitonParams {
    let p = (0..n).map(|i| 0.5 + 0.3 * i as f64).collect();
    let q = (0..n).map(|i| -0.4 - 0.25 * i as f64).collect();
    SolitonParams::new(vec![1.0; n], p, q).unwrap()
}

fn bench(c: &mut Criterion) {
    let x = PhasePoint::new(vec![0.3, -0.2, 0.1]).unwrap();
    let mut g = c.benchmark_group("tau");
    for n in [1, 3, 6] {
        let s = params(n);
        g.bench_with_input(BenchmarkId::new("det", n), &s, |b, s| b.iter(|| tau_det(black_box(s), &x)));
        g.bench_with_input(BenchmarkId::new("subset_sum", n), &s, |b, s| {
            b.iter(|| tau_subset_sum(black_box(s), &x))
        });
        g.bench_with_input(BenchmarkId::new("kp_residual", n), &s, |b, s| {
            b.iter(|| kp_residual(black_box(s), &x))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
