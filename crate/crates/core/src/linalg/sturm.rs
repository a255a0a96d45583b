//! Sturm sequence counts for symmetric tridiagonal matrices.

use super::Inertia;

/// Inertia of `T − shift·I` for the tridiagonal `T` with diagonal `d` and
/// off-diagonal `e`, via the pivots of its `LDLᵀ` recurrence.
///
/// A pivot with `|q| < tol` is counted as tiny and replaced by `±tol`
/// (keeping its sign, `+` for an exact zero) before the recurrence goes on.
pub fn sturm_inertia(d: &[f64], e: &[f64], shift: f64, tol: f64) -> Inertia {
    assert!(e.len() + 1 >= d.len() && e.len() <= d.len());
    let mut inertia = Inertia::default();
    let mut q = 1.0f64;
    for (i, &di) in d.iter().enumerate() {
        let coupling = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = (di - shift) - coupling;
        if q.abs() < tol || q.is_nan() {
            inertia.tiny += 1;
            q = if q < 0.0 { -tol } else { tol };
        } else if q < 0.0 {
            inertia.negative += 1;
        } else {
            inertia.positive += 1;
        }
    }
    inertia
}

/// Eigenvalues strictly below `shift`, ignoring the dead zone (used by
/// bisection, where the exact boundary does not matter).
pub fn sturm_count(d: &[f64], e: &[f64], shift: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for (i, &di) in d.iter().enumerate() {
        let coupling = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = (di - shift) - coupling;
        if q == 0.0 {
            q = f64::MIN_POSITIVE;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing every eigenvalue.
pub fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &di) in d.iter().enumerate() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |v| v.abs());
        lo = lo.min(di - r);
        hi = hi.max(di + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection to absolute
/// tolerance `tol`.
pub fn kth_eigenvalue(d: &[f64], e: &[f64], k: usize, tol: f64) -> f64 {
    assert!(k < d.len());
    let (mut lo, mut hi) = gershgorin(d, e);
    let pad = tol.max(f64::EPSILON * lo.abs().max(hi.abs()));
    lo -= pad;
    hi += pad;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(d: &[f64], e: &[f64]) -> DMatrix<f64> {
        let n = d.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = d[i];
            if i + 1 < n {
                m[(i, i + 1)] = e[i];
                m[(i + 1, i)] = e[i];
            }
        }
        m
    }

    #[test]
    fn matches_dense_eigenvalues() {
        let d = [1.0, -2.0, 0.5, 3.0, -1.0, 0.0];
        let e = [0.7, -1.1, 0.2, 2.0, 0.9];
        let eig = dense(&d, &e).symmetric_eigenvalues();
        for shift in [-3.0, -1.5, -0.2, 0.1, 0.9, 2.5, 5.0] {
            let want = eig.iter().filter(|&&l| l < shift).count();
            assert_eq!(sturm_count(&d, &e, shift), want);
            let inertia = sturm_inertia(&d, &e, shift, 1e-13);
            assert_eq!(inertia.tiny, 0);
            assert_eq!(inertia.negative, want);
        }
        let mut sorted: Vec<f64> = eig.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        for (k, &l) in sorted.iter().enumerate() {
            assert!((kth_eigenvalue(&d, &e, k, 1e-12) - l).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_pivot_is_flagged() {
        // [[0,0],[0,1]] at shift 0 has an exact zero eigenvalue
        let inertia = sturm_inertia(&[0.0, 1.0], &[0.0], 0.0, 1e-12);
        assert_eq!(inertia.tiny, 1);
        assert_eq!(inertia.bounds(), (0, 1));
    }
}
