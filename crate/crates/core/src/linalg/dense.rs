//! Dense symmetric eigenvalues, used for small problems and as a
//! cross-check of the factorization counts.

use super::Inertia;
use crate::operator::SymmetricOperator;

/// Largest dimension for which the dense path is offered.
pub const DENSE_LIMIT: usize = 2000;

/// Eigenvalues in increasing order.
pub fn eigenvalues(op: &SymmetricOperator) -> Vec<f64> {
    let mut ev: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues with eigenvectors (columns), eigenvalues increasing.
pub fn eigen(op: &SymmetricOperator) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = op.to_dense().symmetric_eigen();
    let mut idx: Vec<usize> = (0..op.dim()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Inertia of `A − shift·I` from the spectrum; eigenvalues within
/// `tol · max(1, ‖A‖)` of the shift are reported as tiny.
pub fn inertia(op: &SymmetricOperator, shift: f64, tol: f64) -> Inertia {
    let ev = eigenvalues(op);
    let scale = ev.iter().fold(1.0f64, |m, l| m.max(l.abs())).max(shift.abs());
    let band = tol * scale;
    let mut inertia = Inertia::default();
    for l in ev {
        if (l - shift).abs() < band {
            inertia.tiny += 1;
        } else if l < shift {
            inertia.negative += 1;
        } else {
            inertia.positive += 1;
        }
    }
    inertia
}
