//! Eigenvalue counts below the threshold: inertia kernels, the one- and
//! two-oscillator counting identities, truncation convergence and the
//! asymptotic predictor.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::assembly::{
    assemble_remainder, assemble_total, one_oscillator_gamma, one_oscillator_start,
};
use crate::error::{Error, Result};
use crate::lattice::{Scheme, Truncation};
use crate::linalg::dense::{self, DENSE_LIMIT};
use crate::linalg::ldlt::{self, LdltOptions};
use crate::linalg::{lanczos, sturm, Inertia};
use crate::model::{ModelParams, Side};
use crate::operator::SymmetricOperator;

/// `M = 1/(4√2)`.
pub const ASYMPTOTIC_CONSTANT: f64 = 1.0 / (4.0 * SQRT_2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    /// Sturm for tridiagonal matrices, sparse inertia otherwise, with the
    /// fallbacks described at [`count_negative`].
    #[default]
    Auto,
    Sparse,
    Sturm,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountOptions {
    pub method: CountMethod,
    /// Relative pivot magnitude below which a count is flagged.
    pub pivot_tol: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            method: CountMethod::Auto,
            pivot_tol: 1e-11,
        }
    }
}

/// An eigenvalue count, or the range of counts compatible with a
/// factorization that met a pivot inside the dead zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Count {
    Exact(usize),
    Ambiguous { low: usize, high: usize },
}

impl Count {
    fn from_inertia(i: Inertia) -> Self {
        if i.tiny == 0 {
            Count::Exact(i.negative)
        } else {
            let (low, high) = i.bounds();
            Count::Ambiguous { low, high }
        }
    }

    pub fn exact(self) -> Option<usize> {
        match self {
            Count::Exact(c) => Some(c),
            Count::Ambiguous { .. } => None,
        }
    }

    /// The exact count, or an error naming the boundary `at`.
    pub fn require(self, at: f64) -> Result<usize> {
        match self {
            Count::Exact(c) => Ok(c),
            Count::Ambiguous { low, high } => Err(Error::Ambiguous(at, low, high)),
        }
    }

    pub fn low(self) -> usize {
        match self {
            Count::Exact(c) => c,
            Count::Ambiguous { low, .. } => low,
        }
    }
}

/// Number of eigenvalues of `op` strictly below `shift`.
///
/// `Auto` uses the Sturm recurrence on tridiagonal matrices and the sparse
/// factorization otherwise. When the nested-dissection factorization meets
/// a tiny pivot it is repeated in the natural order, and then (for
/// dimension ≤ 2000) settled by the dense spectrum. Only if every attempt
/// is inconclusive is the result flagged.
pub fn count_negative(op: &SymmetricOperator, shift: f64, opts: &CountOptions) -> Count {
    if op.dim() == 0 {
        return Count::Exact(0);
    }
    match opts.method {
        CountMethod::Sturm => match op.as_tridiagonal() {
            Some((d, e)) => Count::from_inertia(sturm_shifted(&d, &e, shift, opts.pivot_tol)),
            None => count_negative(op, shift, &CountOptions { method: CountMethod::Auto, ..*opts }),
        },
        CountMethod::Dense => Count::from_inertia(dense::inertia(op, shift, opts.pivot_tol)),
        CountMethod::Sparse => Count::from_inertia(ldlt::inertia(
            op,
            shift,
            &LdltOptions {
                pivot_tol: opts.pivot_tol,
                reorder: true,
            },
        )),
        CountMethod::Auto => {
            if let Some((d, e)) = op.as_tridiagonal() {
                let c = Count::from_inertia(sturm_shifted(&d, &e, shift, opts.pivot_tol));
                if c.exact().is_some() || op.dim() > DENSE_LIMIT {
                    return c;
                }
                return Count::from_inertia(dense::inertia(op, shift, opts.pivot_tol));
            }
            let mut last = Inertia::default();
            for reorder in [true, false] {
                let i = ldlt::inertia(
                    op,
                    shift,
                    &LdltOptions {
                        pivot_tol: opts.pivot_tol,
                        reorder,
                    },
                );
                if i.tiny == 0 {
                    return Count::Exact(i.negative);
                }
                last = i;
            }
            if op.dim() <= DENSE_LIMIT {
                return Count::from_inertia(dense::inertia(op, shift, opts.pivot_tol));
            }
            Count::from_inertia(last)
        }
    }
}

fn sturm_shifted(d: &[f64], e: &[f64], shift: f64, pivot_tol: f64) -> Inertia {
    let scale = d
        .iter()
        .map(|x| (x - shift).abs())
        .chain(e.iter().map(|x| x.abs()))
        .fold(f64::MIN_POSITIVE, f64::max);
    sturm::sturm_inertia(d, e, shift, pivot_tol * scale)
}

/// One `(L, dimension, count)` step of a truncation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracePoint {
    pub l: usize,
    pub dim: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub params: ModelParams,
    pub count: usize,
    pub truncation: Truncation,
    pub l_used: usize,
    pub dim: usize,
    pub converged: bool,
    /// Counts at the last truncations of the schedule (the stall window).
    pub stall_evidence: Vec<usize>,
    /// Every step of the schedule, for auditing the stall.
    pub trace: Vec<TracePoint>,
    pub prediction: f64,
    /// `count / prediction`, absent when the prediction is zero.
    pub ratio: Option<f64>,
    /// Lanczos estimate of the lowest eigenvalue of the total operator.
    pub extremal_eigenvalue: Option<f64>,
}

/// `M(η₊^{−1/2} + η₋^{−1/2})`; a decoupled side contributes nothing.
pub fn asymptotic_prediction(params: &ModelParams) -> Result<f64> {
    params.require_subcritical()?;
    let term = |s: Side| {
        let eta = params.mu(s) - 1.0;
        if eta.is_infinite() {
            0.0
        } else {
            ASYMPTOTIC_CONSTANT / eta.sqrt()
        }
    };
    Ok(term(Side::Plus) + term(Side::Minus))
}

fn scheme_size(t: &Truncation) -> usize {
    match t.scheme {
        Scheme::Simplex { l } => l,
        Scheme::Rectangle { m_max, n_max } => m_max.max(n_max),
    }
}

/// Negative eigenvalues of `I + α₊B′₊ + α₋B′₋` at the threshold on one
/// truncation, i.e. the count of the reduced operator below `r₀,₀`.
pub fn count_below_threshold(
    params: &ModelParams,
    trunc: Truncation,
    opts: &CountOptions,
) -> Result<CountReport> {
    params.require_subcritical()?;
    let (count, dim) = threshold_count(params, trunc, opts)?;
    let prediction = asymptotic_prediction(params)?;
    Ok(CountReport {
        params: *params,
        count,
        truncation: trunc,
        l_used: scheme_size(&trunc),
        dim,
        converged: false,
        stall_evidence: vec![count],
        trace: vec![TracePoint {
            l: scheme_size(&trunc),
            dim,
            count,
        }],
        prediction,
        ratio: ratio(count, prediction),
        extremal_eigenvalue: None,
    })
}

fn threshold_count(params: &ModelParams, trunc: Truncation, opts: &CountOptions) -> Result<(usize, usize)> {
    let total = assemble_total(params, trunc.with_origin(false), params.threshold())?;
    let count = count_negative(&total, 0.0, opts).require(params.threshold())?;
    Ok((count, total.dim()))
}

fn ratio(count: usize, prediction: f64) -> Option<f64> {
    (prediction > 0.0).then(|| count as f64 / prediction)
}

/// Truncation schedule `L₀, ⌈gL₀⌉, …` capped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub l0: usize,
    pub growth: f64,
    pub window: usize,
    pub cap: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            l0: 32,
            growth: 1.6,
            window: 3,
            cap: 4096,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(Error::InvalidParameter {
                name,
                reason: reason.into(),
            })
        };
        if self.l0 == 0 {
            return bad("l0", "must be at least 1");
        }
        if !(self.growth > 1.0) {
            return bad("growth", "must exceed 1");
        }
        if self.window < 2 {
            return bad("window", "must be at least 2");
        }
        if self.cap < self.l0 {
            return bad("cap", "must be at least l0");
        }
        Ok(())
    }

    fn next(&self, l: usize) -> usize {
        let grown = (self.growth * l as f64).ceil() as usize;
        grown.max(l + 1).min(self.cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergeOptions {
    pub schedule: Schedule,
    pub count: CountOptions,
    /// Lanczos steps for the extremal eigenvalue; zero skips it.
    pub lanczos_steps: usize,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            schedule: Schedule::default(),
            count: CountOptions::default(),
            lanczos_steps: 0,
        }
    }
}

/// Runs the simplex schedule until the count is unchanged over the stall
/// window. Reaching the cap yields `converged = false`, not an error; a
/// count that drops as `L` grows is an error.
pub fn converge_in_truncation(params: &ModelParams, opts: &ConvergeOptions) -> Result<CountReport> {
    converge_with(params, opts, |t| threshold_count(params, t, &opts.count))
}

/// The schedule loop shared by the threshold count and the origin-including
/// count of the oracle; `count_on` maps a simplex truncation to
/// `(count, dimension)`.
pub(crate) fn converge_with(
    params: &ModelParams,
    opts: &ConvergeOptions,
    count_on: impl Fn(Truncation) -> Result<(usize, usize)>,
) -> Result<CountReport> {
    params.require_subcritical()?;
    let s = opts.schedule;
    s.validate()?;
    let prediction = asymptotic_prediction(params)?;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut l = s.l0;
    let converged = loop {
        let (count, dim) = count_on(Truncation::simplex(l)?)?;
        log::debug!("L = {l}: dim {dim}, count {count}");
        trace.push(TracePoint { l, dim, count });
        if trace.windows(2).any(|w| w[1].count < w[0].count) {
            return Err(Error::NonMonotone(trace.iter().map(|t| t.count).collect()));
        }
        let n = trace.len();
        if n >= s.window && trace[n - s.window..].iter().all(|t| t.count == count) {
            break true;
        }
        if l >= s.cap {
            break false;
        }
        l = s.next(l);
    };
    let last = *trace.last().expect("at least one step");
    let extremal_eigenvalue = if opts.lanczos_steps > 0 {
        let total = assemble_total(params, Truncation::simplex(last.l)?, params.threshold())?;
        Some(lanczos::smallest_eigenvalue(&total, opts.lanczos_steps, 0x5eed))
    } else {
        None
    };
    let window = s.window.min(trace.len());
    Ok(CountReport {
        params: *params,
        count: last.count,
        truncation: Truncation::simplex(last.l)?,
        l_used: last.l,
        dim: last.dim,
        converged,
        stall_evidence: trace[trace.len() - window..].iter().map(|t| t.count).collect(),
        trace,
        prediction,
        ratio: ratio(last.count, prediction),
        extremal_eigenvalue,
    })
}

/// Streams the Sturm recurrence of `I + αJ` for the one-oscillator chain
/// starting at its lowest closed channel, calling `at_size(k, negatives)`
/// after each of the first `max_size` channels. Stops early when the
/// callback returns `false`. Pivots in the dead zone are tallied in the
/// returned count of tiny pivots.
fn stream_one_oscillator(
    alpha: f64,
    nu: f64,
    energy: f64,
    max_size: usize,
    pivot_tol: f64,
    mut at_size: impl FnMut(usize, usize) -> bool,
) -> usize {
    let start = one_oscillator_start(nu, energy);
    let mut tiny = 0;
    let mut negatives = 0;
    let mut q = 1.0f64;
    let mut rho_prev = (2.0 * one_oscillator_gamma(nu, start, energy)).sqrt();
    for k in 0..max_size {
        if k > 0 {
            let m = start + k;
            let rho_m = (2.0 * one_oscillator_gamma(nu, m, energy)).sqrt();
            let e = alpha * (0.5 * (2.0 * m as f64).sqrt() / (rho_m * rho_prev));
            rho_prev = rho_m;
            q = 1.0 - e * e / q;
        }
        // diagonal of I + αJ is 1 and |αJ| entries stay below 1 for μ > 1
        if q.abs() < pivot_tol || q.is_nan() {
            tiny += 1;
            q = if q < 0.0 { -pivot_tol } else { pivot_tol };
        } else if q < 0.0 {
            negatives += 1;
        }
        if !at_size(k + 1, negatives) {
            break;
        }
    }
    tiny
}

/// Count of the one-oscillator problem on a fixed number of channels.
pub fn one_oscillator_count_at(alpha: f64, nu: f64, energy: f64, size: usize, pivot_tol: f64) -> Count {
    let mut neg = 0;
    let tiny = stream_one_oscillator(alpha, nu, energy, size, pivot_tol, |_, n| {
        neg = n;
        true
    });
    if tiny == 0 {
        Count::Exact(neg)
    } else {
        Count::Ambiguous {
            low: neg,
            high: neg + tiny,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneOscillatorCount {
    pub count: usize,
    pub size: usize,
    /// `(size, count)` at each doubling.
    pub trace: Vec<(usize, usize)>,
}

pub const ONE_OSCILLATOR_START_SIZE: usize = 64;
pub const ONE_OSCILLATOR_CAP: usize = 1 << 24;

/// Count of `N₋(energy)` for the one-oscillator operator, with the chain
/// length doubled from 64 until three successive counts agree.
pub fn one_oscillator_count(alpha: f64, nu: f64, energy: f64) -> Result<OneOscillatorCount> {
    one_oscillator_count_with(alpha, nu, energy, ONE_OSCILLATOR_CAP, 1e-11)
}

pub fn one_oscillator_count_with(
    alpha: f64,
    nu: f64,
    energy: f64,
    cap: usize,
    pivot_tol: f64,
) -> Result<OneOscillatorCount> {
    if !(nu > 0.0) || !(alpha >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "nu/alpha",
            reason: format!("need nu > 0 and alpha >= 0, got nu = {nu}, alpha = {alpha}"),
        });
    }
    if alpha >= SQRT_2 * nu {
        return Err(Error::Supercritical {
            mu_plus: SQRT_2 * nu / alpha,
            mu_minus: f64::INFINITY,
        });
    }
    if energy.is_nan() || energy > 0.5 * nu * nu {
        return Err(Error::OpenChannel {
            m: 0,
            n: 0,
            energy,
            radicand: 0.5 * nu * nu - energy,
        });
    }
    let mut trace = Vec::new();
    let mut next = ONE_OSCILLATOR_START_SIZE.min(cap);
    let mut stalled = false;
    let tiny = stream_one_oscillator(alpha, nu, energy, cap, pivot_tol, |k, neg| {
        if k == next {
            trace.push((k, neg));
            let n = trace.len();
            if n >= 3 && trace[n - 3..].iter().all(|&(_, c)| c == neg) {
                stalled = true;
                return false;
            }
            next = (2 * next).min(cap).max(k + 1);
        }
        true
    });
    if tiny > 0 {
        let neg = trace.last().map_or(0, |t| t.1);
        return Err(Error::Ambiguous(energy, neg, neg + tiny));
    }
    if !stalled {
        return Err(Error::NotConverged(trace));
    }
    let &(size, count) = trace.last().expect("trace");
    Ok(OneOscillatorCount { count, size, trace })
}

fn require_separable(params: &ModelParams) -> Result<()> {
    if params.alpha_minus != 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha_minus",
            reason: "the separable decomposition needs alpha_minus = 0".into(),
        });
    }
    params.require_subcritical()
}

/// `Σ_n N₋(ν₊²/2 − ν₋²n)` of the one-oscillator problem on the chains of a
/// rectangle `m ≤ M, n ≤ N` (the `n = 0` chain starts at `m = 1`). Equal as
/// an integer to the two-dimensional count on the same rectangle.
pub fn separable_count(params: &ModelParams, trunc: Truncation, pivot_tol: f64) -> Result<usize> {
    require_separable(params)?;
    let Scheme::Rectangle { m_max, n_max } = trunc.scheme else {
        return Err(Error::Unsupported(
            "separable counts are defined on rectangle truncations".into(),
        ));
    };
    let (a, nu_p, nu_m) = (params.alpha_plus, params.nu_plus, params.nu_minus);
    let mut total = 0;
    for n in 0..=n_max {
        let energy = 0.5 * nu_p * nu_p - nu_m * nu_m * n as f64;
        let start = one_oscillator_start(nu_p, energy);
        let size = (m_max + 1).saturating_sub(start);
        if size == 0 {
            continue;
        }
        total += one_oscillator_count_at(a, nu_p, energy, size, pivot_tol).require(energy)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableCount {
    pub count: usize,
    /// Converged count of each term `n = 0, 1, …` that was evaluated.
    pub terms: Vec<usize>,
}

/// The separable sum with each term converged in chain length; terms stop
/// at the first `n` whose energy is at most `−10ν₊²` and whose count is 0.
pub fn separable_count_converged(params: &ModelParams) -> Result<SeparableCount> {
    require_separable(params)?;
    let (a, nu_p, nu_m) = (params.alpha_plus, params.nu_plus, params.nu_minus);
    let mut terms = Vec::new();
    for n in 0.. {
        let energy = 0.5 * nu_p * nu_p - nu_m * nu_m * n as f64;
        let c = one_oscillator_count(a, nu_p, energy)?.count;
        terms.push(c);
        if energy <= -10.0 * nu_p * nu_p && c == 0 {
            break;
        }
    }
    Ok(SeparableCount {
        count: terms.iter().sum(),
        terms,
    })
}

/// Number of eigenvalues of the remainder `X` with `|λ| > eps` on a
/// truncation at the threshold.
pub fn remainder_tail_count(
    params: &ModelParams,
    trunc: Truncation,
    eps: f64,
    opts: &CountOptions,
) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be positive, got {eps}"),
        });
    }
    let x = assemble_remainder(params, trunc.with_origin(false), params.threshold())?;
    remainder_tail_count_of(&x, eps, opts)
}

/// `#{|λ| > eps}` for a given symmetric matrix, via two inertia counts.
pub fn remainder_tail_count_of(x: &SymmetricOperator, eps: f64, opts: &CountOptions) -> Result<usize> {
    let below = count_negative(x, -eps, opts).require(-eps)?;
    let not_above = count_negative(x, eps, opts).require(eps)?;
    Ok(below + (x.dim() - not_above))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_one_oscillator;

    #[test]
    fn trivial_counts() {
        let id = SymmetricOperator::from_triples(4, (0..4).map(|i| (i, i, 1.0))).unwrap();
        for m in [CountMethod::Auto, CountMethod::Sparse, CountMethod::Dense, CountMethod::Sturm] {
            let o = CountOptions { method: m, ..Default::default() };
            assert_eq!(count_negative(&id, 0.0, &o), Count::Exact(0));
        }
        let d = SymmetricOperator::from_triples(3, [(0, 0, -1.0), (1, 1, 2.0), (2, 2, -3.0)]).unwrap();
        assert_eq!(count_negative(&d, 0.0, &CountOptions::default()), Count::Exact(2));
    }

    #[test]
    fn prediction_values() {
        let p = ModelParams::from_eta(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((asymptotic_prediction(&p).unwrap() - 0.3535534).abs() < 1e-7);
        let p = ModelParams::from_eta(1e-4, 1e-4, 1.0, 1.0).unwrap();
        assert!((asymptotic_prediction(&p).unwrap() - 35.355339).abs() < 1e-5);
        let p = ModelParams::from_eta(1e-4, f64::INFINITY, 1.0, 1.0).unwrap();
        let single = ASYMPTOTIC_CONSTANT / (SQRT_2 / p.alpha_plus - 1.0).sqrt();
        assert!((asymptotic_prediction(&p).unwrap() - single).abs() < 1e-12);
        let crit = ModelParams::new(SQRT_2, 1.0, 1.0, 1.0).unwrap();
        assert!(asymptotic_prediction(&crit).is_err());
    }

    #[test]
    fn streamed_chain_matches_assembled_matrix() {
        for (alpha, energy, size) in [(1.2, 0.5, 300), (1.35, -0.7, 257), (0.4, 0.5, 1)] {
            let j = assemble_one_oscillator(alpha, 1.0, size, energy).unwrap();
            let (d, e) = j.as_tridiagonal().unwrap();
            let d1: Vec<f64> = d.iter().map(|x| 1.0 + alpha * x).collect();
            let e1: Vec<f64> = e.iter().map(|x| alpha * x).collect();
            let want = sturm::sturm_count(&d1, &e1, 0.0);
            assert_eq!(one_oscillator_count_at(alpha, 1.0, energy, size, 1e-11), Count::Exact(want));
            let dense = count_negative(
                &SymmetricOperator::from_tridiagonal(&d1, &e1, j.meta().clone()),
                0.0,
                &CountOptions { method: CountMethod::Dense, ..Default::default() },
            );
            assert_eq!(dense, Count::Exact(want));
        }
    }

    #[test]
    fn one_oscillator_far_below_threshold_is_empty() {
        let alpha = SQRT_2 / 1.5;
        assert_eq!(one_oscillator_count(alpha, 1.0, 0.5 - 10.0).unwrap().count, 0);
        assert!(one_oscillator_count(SQRT_2, 1.0, 0.5).is_err());
        assert!(one_oscillator_count(1.0, 1.0, 0.6).is_err());
    }

    #[test]
    fn separable_needs_decoupled_minus_side() {
        let p = ModelParams::new(1.0, 0.5, 1.0, 1.0).unwrap();
        assert!(separable_count(&p, Truncation::rectangle(4, 4), 1e-11).is_err());
        let p = ModelParams::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(separable_count(&p, Truncation::rectangle(10, 10), 1e-11).unwrap(), 0);
    }

    #[test]
    fn schedule_steps() {
        let s = Schedule::default();
        assert_eq!(s.next(32), 52);
        assert_eq!(s.next(4000), 4096);
        assert!(Schedule { growth: 1.0, ..s }.validate().is_err());
    }
}
