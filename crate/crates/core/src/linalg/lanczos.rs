//! Lanczos iteration with full reorthogonalization for extremal
//! eigenvalue estimates. Diagnostic only: never used to count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sturm::kth_eigenvalue;
use crate::operator::SymmetricOperator;

/// Ritz values after at most `steps` iterations, increasing.
pub fn ritz_values(op: &SymmetricOperator, steps: usize, seed: u64) -> Vec<f64> {
    let n = op.dim();
    if n == 0 {
        return Vec::new();
    }
    let steps = steps.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut q);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let mut w = vec![0.0; n];
    for j in 0..steps {
        op.apply(&q, &mut w);
        let a = dot(&w, &q);
        alpha.push(a);
        basis.push(q);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm(&w);
        if j + 1 == steps || b <= 1e-12 * alpha.iter().fold(1.0f64, |m, x| m.max(x.abs())) {
            break;
        }
        beta.push(b);
        q = w.iter().map(|x| x / b).collect();
    }
    let k = alpha.len();
    let off = &beta[..k - 1];
    (0..k).map(|i| kth_eigenvalue(&alpha, off, i, 1e-13)).collect()
}

/// Estimate of the smallest eigenvalue.
pub fn smallest_eigenvalue(op: &SymmetricOperator, steps: usize, seed: u64) -> f64 {
    ritz_values(op, steps, seed).first().copied().unwrap_or(f64::NAN)
}

/// Estimates of the `count` largest eigenvalues, decreasing.
pub fn largest_eigenvalues(op: &SymmetricOperator, count: usize, steps: usize, seed: u64) -> Vec<f64> {
    let mut r = ritz_values(op, steps, seed);
    r.reverse();
    r.truncate(count);
    r
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub(crate) fn normalize(a: &mut [f64]) -> f64 {
    let s = norm(a);
    if s > 0.0 {
        a.iter_mut().for_each(|x| *x /= s);
    }
    s
}
