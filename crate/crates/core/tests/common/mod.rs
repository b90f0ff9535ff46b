#![allow(dead_code)]

use kltext::ga::{fitness, Chromosome, ClassProblem, GaConfig};
use kltext::kl::IterationConfig;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Budget generous enough that power iteration settles on any input with
/// a 1% relative eigen-gap.
pub fn tight() -> IterationConfig {
    IterationConfig {
        max_iterations: 10_000,
        tolerance: 1e-12,
    }
}

pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Eigenvalues of the row Gram matrix, descending, from a dense solver.
pub fn gram_eigenvalues(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let g = DMatrix::<f64>::from_fn(n, n, |i, j| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum());
    let mut e: Vec<f64> = SymmetricEigen::new(g).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.total_cmp(a));
    e
}

/// Smallest gap between consecutive eigenvalues relative to the largest.
pub fn min_relative_gap(eigs: &[f64]) -> f64 {
    eigs.windows(2)
        .map(|w| (w[0] - w[1]) / eigs[0])
        .fold(f64::INFINITY, f64::min)
}

/// Seeded random matrices with n in 3..=10 and d in 4..=16 (n ≤ d), kept
/// only when their Gram spectrum has a relative gap of at least `min_gap`.
pub fn separated_matrices(count: usize, seed: u64, min_gap: f64) -> Vec<Vec<Vec<f64>>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = r.gen_range(3..=10);
        let d = r.gen_range(n.max(4)..=16);
        let rows = random_rows(&mut r, n, d);
        if min_relative_gap(&gram_eigenvalues(&rows)) >= min_gap {
            out.push(rows);
        }
    }
    out
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// A small class problem: non-negative unit documents built from a class
/// signal block plus noise, and competing unit centroids.
pub fn random_problem(r: &mut ChaCha8Rng, len: usize) -> ClassProblem {
    let docs_n = r.gen_range(4..=10);
    let signal = r.gen_range(1..=len.min(4));
    let docs: Vec<Vec<f64>> = (0..docs_n)
        .map(|_| {
            let mut d = vec![0.0; len];
            for (i, x) in d.iter_mut().enumerate() {
                let p = if i < signal { 0.9 } else { 0.35 };
                if r.gen_bool(p) {
                    *x = r.gen_range(1..=4) as f64;
                }
            }
            if d.iter().all(|&x| x == 0.0) {
                d[0] = 1.0;
            }
            unit(&d)
        })
        .collect();
    let mut sum = vec![0.0; len];
    for d in &docs {
        sum.iter_mut().zip(d).for_each(|(s, x)| *s += x);
    }
    let own = unit(&sum);
    let others = (0..r.gen_range(1..=3))
        .map(|_| {
            (0..len)
                .map(|i| {
                    if i >= signal && r.gen_bool(0.5) {
                        r.gen_range(0.0..0.5)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    ClassProblem::new(docs, own, others).unwrap()
}

/// Best fitness over all 2^L masks.
pub fn exhaustive_best(problem: &ClassProblem, cfg: &GaConfig) -> f64 {
    let len = problem.dim();
    (0u32..1 << len)
        .map(|bits| {
            let genes = (0..len).map(|i| bits >> i & 1 == 1).collect();
            fitness(&Chromosome::new(genes), problem, cfg).unwrap().fitness
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
