use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use gibbsprep::objective::EntropyEstimator;
use gibbsprep::{Boundary, Hamiltonian, StateVector};
use gibbsprep_bench::{params, problem};

fn gates(c: &mut Criterion) {
    let mut group = c.benchmark_group("gates");
    for q in [8usize, 12, 16] {
        group.bench_with_input(BenchmarkId::new("ry_cnot_rp", q), &q, |b, &q| {
            let mut s = StateVector::zero(q);
            b.iter(|| {
                for k in 0..q {
                    s.apply_ry(k, 0.3).unwrap();
                }
                for k in 0..q - 1 {
                    s.apply_cnot(k, k + 1).unwrap();
                    s.apply_rp(k, k + 1, 0.2, -0.4).unwrap();
                }
                black_box(s.amplitudes()[0])
            });
        });
    }
    group.finish();
}

fn objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective");
    for n in [2usize, 3, 4] {
        let p = problem(n, 1.0);
        let x = params(p.num_params());
        group.bench_with_input(BenchmarkId::new("evaluate_exact", n), &n, |b, _| {
            b.iter(|| black_box(p.evaluate_exact_flat(&x).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("gradient_exact", n), &n, |b, _| {
            b.iter(|| black_box(p.gradient_exact(&x).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("evaluate_shots_1024", n), &n, |b, _| {
            let mut seed = 0;
            b.iter(|| {
                seed += 1;
                black_box(
                    p.evaluate_shots(&x, 1024, EntropyEstimator::PlugIn, seed)
                        .unwrap(),
                )
            })
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("diagonalize");
    group.sample_size(10);
    for n in [4usize, 6, 8, 10] {
        let ham = Hamiltonian::ising(n, 0.5, Boundary::Periodic).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(ham.diagonalize().unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, gates, objective, oracle);
criterion_main!(benches);
