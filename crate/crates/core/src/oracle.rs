//! Energy-parameterized cross-check of the counts.
//!
//! For `λ` below the threshold the origin channel is closed and is kept. The
//! number of eigenvalues of the truncated operator below `λ` equals the
//! number of eigenvalues of `K(λ) = −α₊B′₊(λ) − α₋B′₋(λ)` above 1, i.e. the
//! negative inertia of `I − K(λ)`. Scanning `λ` and bisecting each jump
//! locates the eigenvalues one by one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{bs_operator, total_from_table, ChannelTable};
use crate::counting::{converge_with, count_negative, one_oscillator_count_at, ConvergeOptions, Count, CountOptions, CountReport};
use crate::error::{Error, Result};
use crate::expbasis::{basis_pair, derivative_jump, ExpElement};
use crate::lattice::{Lattice, Scheme, Truncation};
use crate::linalg::dense;
use crate::linalg::lanczos::{self, axpy, dot, normalize};
use crate::linalg::ldlt::{Ldlt, LdltOptions};
use crate::model::{ModelParams, Side};
use crate::operator::SymmetricOperator;
use crate::variational::SHIFT_BOUND;


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Distance kept from the threshold, relative to `r₀,₀`.
    pub margin_rel: f64,
    /// Absolute localization tolerance of a crossing, relative to `r₀,₀`.
    pub tol_rel: f64,
    pub count: CountOptions,
    /// Lanczos steps for the top eigenvalue of `K(λ)` above the dense limit.
    pub lanczos_steps: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            margin_rel: 1e-6,
            tol_rel: 1e-10,
            count: CountOptions::default(),
            lanczos_steps: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub count: usize,
    /// Largest eigenvalue of `K(λ)` (Lanczos estimate on large lattices).
    pub top_eigenvalue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lambda: f64,
    /// Count increment across the final bisection cell.
    pub multiplicity: usize,
}

/// A count jump that bisection could not split into unit steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub increment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyScan {
    pub threshold: f64,
    pub margin: f64,
    pub points: Vec<ScanPoint>,
    pub crossings: Vec<Crossing>,
    pub anomalies: Vec<Anomaly>,
}

impl EnergyScan {
    /// Eigenvalues found below the top of the grid, with multiplicity.
    pub fn crossing_count(&self) -> usize {
        self.crossings.iter().map(|c| c.multiplicity).sum()
    }

    /// Count increment over the last grid cell; eigenvalues closer to the
    /// threshold than the margin are invisible to the scan, and this is
    /// the allowance made for them.
    pub fn last_cell_increment(&self) -> usize {
        match self.points.as_slice() {
            [.., a, b] => b.count - a.count,
            _ => 0,
        }
    }
}

/// Geometric grid of `points` energies from `min(r₀,₀ − 5, −k₀ − 1)` up to
/// `r₀,₀ − margin`, denser toward the threshold. No eigenvalue lies below
/// `−k₀`, `k₀ = 27e⁻³/4`.
pub fn default_grid(threshold: f64, margin: f64, points: usize) -> Vec<f64> {
    let top = margin;
    let bottom = 5.0f64.max(threshold + SHIFT_BOUND + 1.0);
    let points = points.max(2);
    let ratio = (bottom / top).ln();
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            let d = if i + 1 == points { top } else { bottom * (-t * ratio).exp() };
            threshold - d
        })
        .collect()
}

/// Scans an energy family with monotone counts. `count` is `N(λ)`, the
/// number of eigenvalues below `λ`; `top` is a diagnostic value per point.
pub fn scan_family<C, T>(grid: &[f64], tol: f64, count: C, top: T) -> Result<EnergyScan>
where
    C: Fn(f64) -> Result<usize> + Sync,
    T: Fn(f64) -> Result<f64> + Sync,
{
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            name: "lambda_grid",
            reason: "energies must be strictly increasing".into(),
        });
    }
    let points: Vec<ScanPoint> = grid
        .par_iter()
        .map(|&lambda| {
            Ok(ScanPoint {
                lambda,
                count: count(lambda)?,
                top_eigenvalue: top(lambda)?,
            })
        })
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = points.iter().map(|p| p.count).collect();
    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::NonMonotone(counts));
    }

    let cells: Vec<(usize, usize)> = (0..points.len().saturating_sub(1))
        .filter(|&i| points[i + 1].count > points[i].count)
        .map(|i| (i, i + 1))
        .collect();
    let refined: Vec<(Vec<Crossing>, Vec<Anomaly>)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let mut crossings = Vec::new();
            let mut anomalies = Vec::new();
            refine(
                (points[i].lambda, points[i].count),
                (points[j].lambda, points[j].count),
                tol,
                &count,
                &mut crossings,
                &mut anomalies,
            )?;
            Ok((crossings, anomalies))
        })
        .collect::<Result<_>>()?;
    let mut crossings = Vec::new();
    let mut anomalies = Vec::new();
    for (c, a) in refined {
        crossings.extend(c);
        anomalies.extend(a);
    }
    Ok(EnergyScan {
        threshold: f64::NAN,
        margin: f64::NAN,
        points,
        crossings,
        anomalies,
    })
}

/// Splits `(lo, hi]` until each piece carries a unit increment located to
/// within `tol`; pieces of width `tol` with larger increments are anomalies.
fn refine<C>(
    lo: (f64, usize),
    hi: (f64, usize),
    tol: f64,
    count: &C,
    crossings: &mut Vec<Crossing>,
    anomalies: &mut Vec<Anomaly>,
) -> Result<()>
where
    C: Fn(f64) -> Result<usize>,
{
    let mut stack = vec![(lo, hi)];
    while let Some(((a, ca), (b, cb))) = stack.pop() {
        if cb == ca {
            continue;
        }
        let mid = 0.5 * (a + b);
        if b - a <= tol || mid <= a || mid >= b {
            let lambda = b;
            crossings.push(Crossing {
                lambda,
                multiplicity: cb - ca,
            });
            if cb - ca > 1 {
                anomalies.push(Anomaly {
                    lambda_low: a,
                    lambda_high: b,
                    increment: cb - ca,
                });
            }
            continue;
        }
        let cm = count(mid)?;
        if cm < ca || cm > cb {
            return Err(Error::NonMonotone(vec![ca, cm, cb]));
        }
        // upper half first so that crossings come out in increasing order
        stack.push(((mid, cm), (b, cb)));
        stack.push(((a, ca), (mid, cm)));
    }
    Ok(())
}

fn margin_of(params: &ModelParams, opts: &ScanOptions) -> f64 {
    opts.margin_rel * params.threshold()
}

/// `N₊(1; K(λ))`, the count of eigenvalues of the truncated operator
/// (origin channel included) below `λ`.
pub fn count_at(params: &ModelParams, trunc: Truncation, lambda: f64, opts: &ScanOptions) -> Result<Count> {
    let margin = margin_of(params, opts);
    check_margin(params, lambda, margin)?;
    let table = ChannelTable::new(params, trunc, lambda)?;
    Ok(count_negative(&total_from_table(params, &table), 0.0, &opts.count))
}

fn check_margin(params: &ModelParams, lambda: f64, margin: f64) -> Result<()> {
    let threshold = params.threshold();
    if !(lambda <= threshold - margin) {
        return Err(Error::MarginViolation {
            lambda,
            threshold,
            margin,
        });
    }
    Ok(())
}

/// Above this dimension the top eigenvalue is a Lanczos estimate.
const DENSE_TOP: usize = 200;

fn top_eigenvalue(op: &SymmetricOperator, steps: usize) -> f64 {
    if op.dim() == 0 {
        return 0.0;
    }
    if op.dim() <= DENSE_TOP {
        *dense::eigenvalues(op).last().expect("non-empty")
    } else {
        lanczos::largest_eigenvalues(op, 1, steps, 0x5eed)[0]
    }
}

/// Count of the truncated operator with the origin channel kept, at
/// `λ = r₀,₀ − margin`, converged along the simplex schedule. Unlike the
/// threshold count it includes the eigenvalue split off by the origin
/// channel, which is the one that exists for every subcritical coupling.
pub fn converge_full_count(params: &ModelParams, opts: &ConvergeOptions, margin_rel: f64) -> Result<CountReport> {
    let lambda = params.threshold() * (1.0 - margin_rel);
    let scan = ScanOptions {
        margin_rel,
        count: opts.count,
        ..ScanOptions::default()
    };
    let mut report = converge_with(params, opts, |t| {
        let t = t.with_origin(true);
        let c = count_at(params, t, lambda, &scan)?.require(lambda)?;
        Ok((c, Lattice::new(t).dim()))
    })?;
    report.truncation = report.truncation.with_origin(true);
    Ok(report)
}

/// Scans `λ` over `grid` (default grid when `None`) on a truncation with the
/// origin channel included, and localizes every crossing.
pub fn scan_and_refine(
    params: &ModelParams,
    trunc: Truncation,
    grid: Option<&[f64]>,
    opts: &ScanOptions,
) -> Result<EnergyScan> {
    params.require_subcritical()?;
    let trunc = trunc.with_origin(true);
    let threshold = params.threshold();
    let margin = margin_of(params, opts);
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = default_grid(threshold, margin, 64);
            &owned
        }
    };
    if let Some(&last) = grid.last() {
        check_margin(params, last, margin)?;
    }
    let mut scan = scan_family(
        grid,
        opts.tol_rel * threshold,
        |l| count_at(params, trunc, l, opts)?.require(l),
        |l| Ok(top_eigenvalue(&bs_operator(params, trunc, l, margin)?, opts.lanczos_steps)),
    )?;
    scan.threshold = threshold;
    scan.margin = margin;
    Ok(scan)
}

/// The same scan for the one-oscillator chain of `size` channels, whose
/// threshold is `ν²/2`. The top eigenvalue reported is that of `−αJ`.
pub fn scan_one_oscillator(
    alpha: f64,
    nu: f64,
    size: usize,
    grid: Option<&[f64]>,
    opts: &ScanOptions,
) -> Result<EnergyScan> {
    let threshold = 0.5 * nu * nu;
    let margin = opts.margin_rel * threshold;
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = default_grid(threshold, margin, 64);
            &owned
        }
    };
    if grid.last().is_some_and(|&l| !(l <= threshold - margin)) {
        return Err(Error::MarginViolation {
            lambda: *grid.last().unwrap(),
            threshold,
            margin,
        });
    }
    let tol = opts.count.pivot_tol;
    let mut scan = scan_family(
        grid,
        opts.tol_rel * threshold,
        |l| one_oscillator_count_at(alpha, nu, l, size, tol).require(l),
        |l| {
            let off = crate::assembly::one_oscillator_offdiagonal(nu, size, l);
            let d = vec![0.0; size];
            let e: Vec<f64> = off.iter().map(|x| -alpha * x).collect();
            Ok(crate::linalg::sturm::kth_eigenvalue(&d, &e, size - 1, 1e-12))
        },
    )?;
    scan.threshold = threshold;
    scan.margin = margin;
    Ok(scan)
}

/// Outcome of checking the matching conditions on a near-null vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub lambda: f64,
    /// Largest matching-condition residual over channels deep inside the
    /// truncation, relative to the largest derivative jump.
    pub max_interior: f64,
    /// The same over every channel, with absent neighbours taken as zero.
    pub max_all: f64,
    /// Interior residuals at `x = +1` and `x = −1` separately.
    pub max_plus: f64,
    pub max_minus: f64,
    /// Ritz value of `I − K(λ)` of the extracted vector.
    pub smallest: f64,
    /// `|θ₂|/|θ₁|` of the two Ritz values nearest zero.
    pub isolation: f64,
    /// Set when the isolation is below 10³.
    pub flagged: bool,
}

fn deep_interior(trunc: &Truncation, m: usize, n: usize) -> bool {
    match trunc.scheme {
        Scheme::Simplex { l } => 2 * (m + n) < l,
        Scheme::Rectangle { m_max, n_max } => 2 * m < m_max && 2 * n < n_max,
    }
}

/// Extracts the near-null vector of `I − K(λ)` by inverse iteration
/// (two-vector block, three steps, fixed seed), rebuilds the channel
/// functions and evaluates the matching conditions at `x = ±1`.
pub fn residual_check(
    params: &ModelParams,
    trunc: Truncation,
    lambda: f64,
    seed: u64,
) -> Result<ResidualReport> {
    let trunc = trunc.with_origin(true);
    let margin = 0.0;
    check_margin(params, lambda, margin)?;
    let table = ChannelTable::new(params, trunc, lambda)?;
    let m = total_from_table(params, &table);
    let (v, smallest, isolation) = near_null_vector(&m, seed);
    let lat = &table.lattice;

    let funcs: Vec<ExpElement> = lat
        .channels()
        .iter()
        .enumerate()
        .map(|(p, _)| {
            let b = basis_pair(table.scalars[p].gamma)?;
            Ok(b.combine(v[Lattice::dof(p, Side::Plus)], v[Lattice::dof(p, Side::Minus)]))
        })
        .collect::<Result<_>>()?;
    let value = |m: usize, n: usize, side: Side| -> f64 {
        lat.position(crate::model::ChannelIndex::new(m, n))
            .map_or(0.0, |q| funcs[q].value_at(side))
    };

    let mut lhs_scale = 0.0f64;
    let mut rows = Vec::with_capacity(lat.len());
    for (p, c) in lat.channels().iter().enumerate() {
        let (m, n) = (c.m, c.n);
        let jp = derivative_jump(&funcs[p], Side::Plus);
        let jm = derivative_jump(&funcs[p], Side::Minus);
        let rp = params.alpha_plus / 2f64.sqrt()
            * ((m as f64 + 1.0).sqrt() * value(m + 1, n, Side::Plus)
                + if m > 0 { (m as f64).sqrt() * value(m - 1, n, Side::Plus) } else { 0.0 });
        let rm = params.alpha_minus / 2f64.sqrt()
            * ((n as f64 + 1.0).sqrt() * value(m, n + 1, Side::Minus)
                + if n > 0 { (n as f64).sqrt() * value(m, n - 1, Side::Minus) } else { 0.0 });
        lhs_scale = lhs_scale.max(jp.abs()).max(jm.abs());
        rows.push(((jp - rp).abs(), (jm - rm).abs(), deep_interior(&trunc, m, n)));
    }
    let scale = if lhs_scale > 0.0 { lhs_scale } else { 1.0 };
    let mut report = ResidualReport {
        lambda,
        max_interior: 0.0,
        max_all: 0.0,
        max_plus: 0.0,
        max_minus: 0.0,
        smallest,
        isolation,
        flagged: isolation < 1e3,
    };
    for (dp, dm, interior) in rows {
        let (dp, dm) = (dp / scale, dm / scale);
        report.max_all = report.max_all.max(dp).max(dm);
        if interior {
            report.max_interior = report.max_interior.max(dp).max(dm);
            report.max_plus = report.max_plus.max(dp);
            report.max_minus = report.max_minus.max(dm);
        }
    }
    Ok(report)
}

/// Block inverse iteration for the eigenvector of `m` with eigenvalue
/// nearest zero. Returns the vector, its Ritz value and the isolation
/// ratio of the two Ritz values of the block.
pub fn near_null_vector(m: &SymmetricOperator, seed: u64) -> (Vec<f64>, f64, f64) {
    let n = m.dim();
    let k = n.min(2);
    let f = Ldlt::factor(
        m,
        0.0,
        &LdltOptions {
            pivot_tol: 1e-300,
            reorder: true,
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    for _ in 0..3 {
        block = block.iter().map(|x| f.solve(x)).collect();
        orthonormalize(&mut block);
    }
    let mut mx = vec![vec![0.0; n]; k];
    for (x, y) in block.iter().zip(mx.iter_mut()) {
        m.apply(x, y);
    }
    let h = nalgebra::DMatrix::from_fn(k, k, |i, j| dot(&block[i], &mx[j]));
    let h = 0.5 * (&h + h.transpose());
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));
    let y = eig.eigenvectors.column(order[0]);
    let mut v = vec![0.0; n];
    for (i, x) in block.iter().enumerate() {
        axpy(y[i], x, &mut v);
    }
    normalize(&mut v);
    let theta1 = eig.eigenvalues[order[0]];
    let isolation = if k < 2 {
        f64::INFINITY
    } else {
        eig.eigenvalues[order[1]].abs() / theta1.abs()
    };
    (v, theta1, isolation)
}

fn orthonormalize(block: &mut [Vec<f64>]) {
    for i in 0..block.len() {
        let (done, rest) = block.split_at_mut(i);
        let x = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c = dot(x, q);
                axpy(-c, q, x);
            }
        }
        normalize(x);
    }
}

/// Crossing of the two-channel system `{(0,0), (1,0)}` coupled on the `+`
/// side: `γ₀₀γ₁₀ = α₊²/8`, i.e. `s(s + ν₊²) = α₊⁴/64` with `s = r₀,₀ − λ`.
pub fn two_channel_crossing(params: &ModelParams) -> f64 {
    let nu2 = params.nu_plus * params.nu_plus;
    let a4 = params.alpha_plus.powi(4);
    let s = 0.5 * ((nu2 * nu2 + a4 / 16.0).sqrt() - nu2);
    params.threshold() - s
}
