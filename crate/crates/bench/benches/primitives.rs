//! Microbenchmarks for the hot primitives: SQ sampling, the norm
//! estimator, rejection sampling, the layered solver and dense
//! eigensolves at instance sizes used by the checks.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qicsep_core::linalg;
use qicsep_core::qic_algorithms::{estimate_norm_squared, exact_sample, proposal_probability};
use qicsep_core::simon::{exact_solution, make_oracle, sample_solution, SimonMode};
use qicsep_core::sq_core::{
    new_ledger, MaterializedSqMatrix, MaterializedSqVector, SqMatrix, SqVector,
};
use qicsep_core::welded_trees::{dense_b, generate_instance, layered_solve, HardMatrixParams};

fn random_instance(
    dim: usize,
    nnz: usize,
    rng: &mut ChaCha8Rng,
) -> (MaterializedSqMatrix, MaterializedSqVector) {
    use rand::seq::SliceRandom;
    let ledger = new_ledger();
    let mut triplets = Vec::new();
    for i in 0..dim {
        let mut cols: Vec<usize> = (0..dim).collect();
        cols.shuffle(rng);
        for &j in cols.iter().take(nnz) {
            triplets.push((i, j, rng.gen_range(0.5..1.5)));
        }
    }
    let a = MaterializedSqMatrix::from_triplets(dim, dim, &triplets, ledger.clone()).unwrap();
    let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect();
    let yv = MaterializedSqVector::new(y, ledger).unwrap();
    (a, yv)
}

fn bench_sq_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sq_vector_sample");
    for dim in [64usize, 1024, 16384] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ledger = new_ledger();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect();
        let yv = MaterializedSqVector::new(v, ledger).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| yv.sample(&mut rng).unwrap())
        });
    }
    group.finish();
}

fn bench_norm_estimator(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (a, yv) = random_instance(100, 5, &mut rng);
    c.bench_function("estimate_norm_squared_k1000", |b| {
        b.iter(|| estimate_norm_squared(&a, &yv, 1000, 1, &mut rng).unwrap())
    });
}

fn bench_rejection(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (a, yv) = random_instance(64, 4, &mut rng);
    // tightest valid bound: worst target/proposal ratio over the support
    let ay: Vec<f64> = (0..64)
        .map(|i| (0..64).map(|j| a.entry(i, j) * yv.entry(j)).sum::<f64>())
        .collect();
    let n_estimate: f64 = ay.iter().map(|x| x * x).sum();
    let mut m_bound = 0.0f64;
    for (i, &ay_i) in ay.iter().enumerate() {
        let p = proposal_probability(&a, &yv, i);
        if p > 0.0 {
            m_bound = m_bound.max(ay_i * ay_i / n_estimate / p);
        }
    }
    c.bench_function("exact_sample_64", |b| {
        b.iter(|| exact_sample(&a, &yv, m_bound, n_estimate, 1_000_000, &mut rng).unwrap())
    });
}

fn bench_layered_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("layered_solve");
    for n in [8usize, 16, 30] {
        let params = HardMatrixParams::new(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| layered_solve(&params).unwrap())
        });
    }
    group.finish();
}

fn bench_dense_spectrum(c: &mut Criterion) {
    let n = 6;
    let params = HardMatrixParams::new(n).unwrap();
    let instance = generate_instance(n, 11).unwrap();
    let b_mat = dense_b(&instance, &params);
    c.bench_function("symmetric_eigenvalues_254", |bch| {
        bch.iter(|| linalg::symmetric_eigenvalues(&b_mat))
    });
}

fn bench_simon(c: &mut Criterion) {
    let oracle = make_oracle(4, SimonMode::TwoToOne(9), 5).unwrap();
    c.bench_function("simon_exact_solution_n4", |b| {
        b.iter(|| exact_solution(&oracle).unwrap())
    });
    let solution = exact_solution(&oracle).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    c.bench_function("simon_sample_solution_n4", |b| {
        b.iter(|| sample_solution(&solution, &mut rng))
    });
}

criterion_group!(
    benches,
    bench_sq_sampling,
    bench_norm_estimator,
    bench_rejection,
    bench_layered_solver,
    bench_dense_spectrum,
    bench_simon
);
criterion_main!(benches);
