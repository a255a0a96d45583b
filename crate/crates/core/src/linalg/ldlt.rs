//! Sparse `LDLᵀ` factorization with diagonal pivots (up-looking, elimination
//! tree driven), used for matrix inertia and linear solves.

use super::ordering::{inverse, nested_dissection, Graph};
use super::Inertia;
use crate::operator::SymmetricOperator;

const NONE: usize = usize::MAX;

/// Upper triangle in compressed-column form after symmetric permutation.
struct UpperCsc {
    n: usize,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl UpperCsc {
    fn permuted(op: &SymmetricOperator, perm: &[usize], shift: f64) -> Self {
        let n = op.dim();
        let mut count = vec![0usize; n];
        let mut has_diag = vec![false; n];
        for e in op.entries() {
            let (a, b) = (perm[e.row], perm[e.col]);
            count[a.max(b)] += 1;
            if e.row == e.col {
                has_diag[a] = true;
            }
        }
        if shift != 0.0 {
            for (j, c) in count.iter_mut().enumerate() {
                if !has_diag[j] {
                    *c += 1;
                }
            }
        }
        let mut colptr = vec![0usize; n + 1];
        for j in 0..n {
            colptr[j + 1] = colptr[j] + count[j];
        }
        let mut fill = colptr[..n].to_vec();
        let mut rowind = vec![0usize; colptr[n]];
        let mut values = vec![0.0; colptr[n]];
        for e in op.entries() {
            let (a, b) = (perm[e.row], perm[e.col]);
            let (i, j) = (a.min(b), a.max(b));
            rowind[fill[j]] = i;
            values[fill[j]] = if i == j { e.value - shift } else { e.value };
            fill[j] += 1;
        }
        if shift != 0.0 {
            for j in 0..n {
                if !has_diag[j] {
                    rowind[fill[j]] = j;
                    values[fill[j]] = -shift;
                    fill[j] += 1;
                }
            }
        }
        Self {
            n,
            colptr,
            rowind,
            values,
        }
    }

    /// Elimination tree and the number of subdiagonal nonzeros of each
    /// column of `L`.
    fn etree(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.n;
        let mut parent = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for p in self.colptr[j]..self.colptr[j + 1] {
                let mut i = self.rowind[p];
                while work[i] != j {
                    if parent[i] == NONE {
                        parent[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = parent[i];
                }
            }
        }
        (parent, lnz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdltOptions {
    /// Pivots with `|d| < pivot_tol · scale` are flagged as tiny, where
    /// `scale` is the largest absolute entry of the shifted matrix.
    pub pivot_tol: f64,
    /// Compute a fill-reducing order first.
    pub reorder: bool,
}

impl Default for LdltOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-11,
            reorder: true,
        }
    }
}

/// `P A Pᵀ − shift·I = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    /// `perm[old] = new`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    inertia: Inertia,
    threshold: f64,
}

impl Ldlt {
    pub fn factor(op: &SymmetricOperator, shift: f64, opts: &LdltOptions) -> Self {
        let n = op.dim();
        let perm = if opts.reorder && n > 1 {
            inverse(&nested_dissection(&Graph::from_operator(op)))
        } else {
            (0..n).collect()
        };
        let a = UpperCsc::permuted(op, &perm, shift);
        let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let threshold = opts.pivot_tol * scale;
        let (parent, lnz) = a.etree();

        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let mut li = vec![0usize; lp[n]];
        let mut lx = vec![0.0; lp[n]];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut next_in_col = lp[..n].to_vec();
        let mut y = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut inertia = Inertia::default();

        for k in 0..n {
            let mut nnz_y = 0;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let b = a.rowind[p];
                if b == k {
                    d[k] += a.values[p];
                    continue;
                }
                y[b] += a.values[p];
                if marked[b] {
                    continue;
                }
                marked[b] = true;
                stack[0] = b;
                let mut depth = 1;
                let mut next = parent[b];
                while next != NONE && next < k {
                    if marked[next] {
                        break;
                    }
                    marked[next] = true;
                    stack[depth] = next;
                    depth += 1;
                    next = parent[next];
                }
                while depth > 0 {
                    depth -= 1;
                    y_idx[nnz_y] = stack[depth];
                    nnz_y += 1;
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let end = next_in_col[c];
                let yc = y[c];
                for j in lp[c]..end {
                    y[li[j]] -= lx[j] * yc;
                }
                li[end] = k;
                let l = yc * dinv[c];
                lx[end] = l;
                d[k] -= yc * l;
                next_in_col[c] += 1;
                y[c] = 0.0;
                marked[c] = false;
            }
            let dk = d[k];
            if dk.abs() < threshold || dk.is_nan() {
                inertia.tiny += 1;
                d[k] = if dk < 0.0 { -threshold } else { threshold };
            } else if dk < 0.0 {
                inertia.negative += 1;
            } else {
                inertia.positive += 1;
            }
            dinv[k] = 1.0 / d[k];
        }

        Self {
            n,
            perm,
            lp,
            li,
            lx,
            d,
            inertia,
            threshold,
        }
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Absolute pivot threshold used for the tiny-pivot test.
    pub fn pivot_threshold(&self) -> f64 {
        self.threshold
    }

    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// Solves `(A − shift·I) x = b` with the (guarded) factors.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for (old, &new) in self.perm.iter().enumerate() {
            x[new] = b[old];
        }
        for c in 0..self.n {
            let xc = x[c];
            if xc != 0.0 {
                for j in self.lp[c]..self.lp[c + 1] {
                    x[self.li[j]] -= self.lx[j] * xc;
                }
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for c in (0..self.n).rev() {
            let mut s = x[c];
            for j in self.lp[c]..self.lp[c + 1] {
                s -= self.lx[j] * x[self.li[j]];
            }
            x[c] = s;
        }
        self.perm.iter().map(|&new| x[new]).collect()
    }
}

/// Inertia of `A − shift·I`.
pub fn inertia(op: &SymmetricOperator, shift: f64, opts: &LdltOptions) -> Inertia {
    Ldlt::factor(op, shift, opts).inertia()
}
