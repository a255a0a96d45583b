//! Real symmetric sparse operators stored as a sorted list of upper-triangle
//! entries, each unordered index pair appearing once.

use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Truncation;
use crate::model::{ModelParams, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Matrix of the form `b′±`.
    BPrime(Side),
    /// Matrix of the leading part `b″±` (no `κ` terms).
    BDoublePrime(Side),
    /// `I + α₊B′₊ + α₋B′₋`.
    Total,
    /// `X_α = α₊(B′₊ − B″₊) + α₋(B′₋ − B″₋)`.
    Remainder,
    /// Tridiagonal form matrix of the single-oscillator problem.
    OneOscillator,
    /// `K(λ) = −α₊B′₊(λ) − α₋B′₋(λ)`.
    BirmanSchwinger,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub kind: OperatorKind,
    pub params: Option<ModelParams>,
    pub truncation: Option<Truncation>,
    /// Spectral parameter at which the decay rates were evaluated.
    pub energy: Option<f64>,
}

impl OperatorMeta {
    pub fn generic() -> Self {
        Self {
            kind: OperatorKind::Generic,
            params: None,
            truncation: None,
            energy: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    dim: usize,
    entries: Vec<Entry>,
    meta: OperatorMeta,
}

/// Accumulates contributions `(i, j, v)` to a symmetric matrix. Each
/// contribution is added to the single stored copy of the pair `{i, j}`.
#[derive(Debug, Clone)]
pub struct OperatorBuilder {
    dim: usize,
    raw: Vec<Entry>,
}

impl OperatorBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            raw: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Self {
        Self {
            dim,
            raw: Vec::with_capacity(capacity),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        self.raw.push(Entry { row, col, value });
    }

    pub fn build(mut self, meta: OperatorMeta) -> SymmetricOperator {
        self.raw.sort_by_key(|e| (e.row, e.col));
        let mut entries: Vec<Entry> = Vec::with_capacity(self.raw.len());
        for e in self.raw {
            match entries.last_mut() {
                Some(last) if last.row == e.row && last.col == e.col => last.value += e.value,
                _ => entries.push(e),
            }
        }
        entries.retain(|e| e.value != 0.0);
        SymmetricOperator {
            dim: self.dim,
            entries,
            meta,
        }
    }
}

impl SymmetricOperator {
    pub fn zero(dim: usize, meta: OperatorMeta) -> Self {
        Self {
            dim,
            entries: Vec::new(),
            meta,
        }
    }

    pub fn identity(dim: usize, meta: OperatorMeta) -> Self {
        let entries = (0..dim)
            .map(|i| Entry {
                row: i,
                col: i,
                value: 1.0,
            })
            .collect();
        Self { dim, entries, meta }
    }

    /// Builds from arbitrary `(i, j, v)` triples, interpreting each as a
    /// contribution to the pair `{i, j}`.
    pub fn from_triples(
        dim: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut b = OperatorBuilder::new(dim);
        for (i, j, v) in triples {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i.max(j) + 1,
                });
            }
            b.add(i, j, v);
        }
        Ok(b.build(OperatorMeta::generic()))
    }

    /// Upper triangle of a dense symmetric matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let mut b = OperatorBuilder::new(dim);
        for j in 0..dim {
            for i in 0..=j {
                b.add(i, j, m[(i, j)]);
            }
        }
        b.build(OperatorMeta::generic())
    }

    /// Symmetric tridiagonal matrix from its diagonal and off-diagonal.
    pub fn from_tridiagonal(diag: &[f64], off: &[f64], meta: OperatorMeta) -> Self {
        let dim = diag.len();
        let mut b = OperatorBuilder::with_capacity(dim, 2 * dim);
        for (i, &d) in diag.iter().enumerate() {
            b.add(i, i, d);
        }
        for (i, &e) in off.iter().enumerate() {
            b.add(i, i + 1, e);
        }
        b.build(meta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn meta(&self) -> &OperatorMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: OperatorMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn nnz_stored(&self) -> usize {
        self.entries.len()
    }

    /// Nonzeros of the full (both triangles) matrix in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim];
        for e in &self.entries {
            counts[e.row] += 1;
            if e.row != e.col {
                counts[e.col] += 1;
            }
        }
        counts
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (row, col) = if i <= j { (i, j) } else { (j, i) };
        self.entries
            .binary_search_by_key(&(row, col), |e| (e.row, e.col))
            .map(|k| self.entries[k].value)
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for e in self.entries.iter().filter(|e| e.row == e.col) {
            d[e.row] = e.value;
        }
        d
    }

    /// `(diagonal, off-diagonal)` when every entry lies within one band.
    pub fn as_tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.entries.iter().any(|e| e.col - e.row > 1) {
            return None;
        }
        let mut diag = vec![0.0; self.dim];
        let mut off = vec![0.0; self.dim.saturating_sub(1)];
        for e in &self.entries {
            if e.row == e.col {
                diag[e.row] = e.value;
            } else {
                off[e.row] = e.value;
            }
        }
        Some((diag, off))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for e in &self.entries {
            m[(e.row, e.col)] = e.value;
            m[(e.col, e.row)] = e.value;
        }
        m
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.entries {
            y[e.row] += e.value * x[e.col];
            if e.row != e.col {
                y[e.col] += e.value * x[e.row];
            }
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.entries
            .iter()
            .map(|e| {
                let t = e.value * x[e.row] * x[e.col];
                if e.row == e.col {
                    t
                } else {
                    2.0 * t
                }
            })
            .sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.value.abs()))
    }

    /// `‖A‖∞`, the largest absolute row sum.
    pub fn max_abs_row_sum(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for e in &self.entries {
            sums[e.row] += e.value.abs();
            if e.row != e.col {
                sums[e.col] += e.value.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// `Σ cᵢ Aᵢ`; all operands must share the dimension.
    pub fn linear_combination(
        terms: &[(f64, &SymmetricOperator)],
        meta: OperatorMeta,
    ) -> Result<Self> {
        let dim = terms.first().map(|(_, op)| op.dim).unwrap_or(0);
        let cap = terms.iter().map(|(_, op)| op.entries.len()).sum();
        let mut b = OperatorBuilder::with_capacity(dim, cap);
        for (c, op) in terms {
            if op.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.dim,
                });
            }
            if *c == 0.0 {
                continue;
            }
            for e in &op.entries {
                b.add(e.row, e.col, c * e.value);
            }
        }
        Ok(b.build(meta))
    }

    /// Relabels index `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: perm.len(),
            });
        }
        let mut b = OperatorBuilder::with_capacity(self.dim, self.entries.len());
        for e in &self.entries {
            b.add(perm[e.row], perm[e.col], e.value);
        }
        Ok(b.build(self.meta.clone()))
    }

    /// Writes `row col value` lines, one per stored entry, values with 17
    /// significant digits.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# dim {}", self.dim)?;
        for e in &self.entries {
            writeln!(w, "{} {} {:.16e}", e.row, e.col, e.value)?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let bad = |line: &str| Error::Unsupported(format!("malformed dump line `{line}`"));
        let mut dim = None;
        let mut triples = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::Unsupported(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# dim ") {
                dim = Some(rest.trim().parse::<usize>().map_err(|_| bad(line))?);
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(i), Some(j), Some(v), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad(line));
            };
            triples.push((
                i.parse::<usize>().map_err(|_| bad(line))?,
                j.parse::<usize>().map_err(|_| bad(line))?,
                v.parse::<f64>().map_err(|_| bad(line))?,
            ));
        }
        let dim = dim.ok_or_else(|| Error::Unsupported("dump lacks `# dim` header".into()))?;
        Self::from_triples(dim, triples)
    }
}
