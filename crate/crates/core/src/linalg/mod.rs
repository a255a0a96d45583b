//! Inertia and eigenvalue kernels for real symmetric matrices.

pub mod dense;
pub mod lanczos;
pub mod ldlt;
pub mod ordering;
pub mod sturm;

use serde::{Deserialize, Serialize};

/// Signs of the pivots of a symmetric factorization. Pivots whose magnitude
/// fell below the tolerance are counted in `tiny` and in neither sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Inertia {
    pub negative: usize,
    pub tiny: usize,
    pub positive: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.negative + self.tiny + self.positive
    }

    /// Lowest and highest count of eigenvalues below the shift consistent
    /// with the pivots.
    pub fn bounds(&self) -> (usize, usize) {
        (self.negative, self.negative + self.tiny)
    }
}
