//! Closed-form evaluation of the quadratic form on a few explicit trial
//! families, plus the numerical side of the shift-constant argument.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::ChannelTable;
use crate::error::{Error, Result};
use crate::expbasis::{basis_pair, ExpElement};
use crate::lattice::{CoefficientVector, Lattice};
use crate::model::{channel_energy, ChannelIndex, ModelParams, Side};

/// `27e⁻³/4 = max_t 2t³e⁻²ᵗ`, the smallest shift for which every
/// `C(m,n,k) ≤ 1`.
pub const SHIFT_BOUND: f64 = 27.0 * 0.049_787_068_367_863_944 / 4.0;

/// One channel function. Every shape has finite `H¹` norm in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelShape {
    /// `h·min(1, e^{−(ε|x|−1)})`: flat on `|x| ≤ 1/ε`, then decaying at rate `ε`.
    Plateau { height: f64, eps: f64 },
    /// `h·e^{−rate·|x − x₀|}` with `x₀ = ±1`.
    Peak { height: f64, center: Side, rate: f64 },
    /// An element of `F_γ`.
    Exp(ExpElement),
}

fn point(side: Side) -> f64 {
    match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    }
}

impl ChannelShape {
    /// `∫|u′|²`.
    pub fn dirichlet(&self) -> f64 {
        match *self {
            Self::Plateau { height, eps } => height * height * eps,
            Self::Peak { height, rate, .. } => height * height * rate,
            Self::Exp(e) => e.dirichlet_integral(),
        }
    }

    /// `∫|u|²`.
    pub fn mass(&self) -> f64 {
        match *self {
            Self::Plateau { height, eps } => 3.0 * height * height / eps,
            Self::Peak { height, rate, .. } => height * height / rate,
            Self::Exp(e) => e.mass_integral(),
        }
    }

    pub fn value_at(&self, side: Side) -> f64 {
        match *self {
            Self::Plateau { height, eps } => {
                if eps <= 1.0 {
                    height
                } else {
                    height * (-(eps - 1.0)).exp()
                }
            }
            Self::Peak { height, center, rate } => {
                height * (-rate * (point(side) - point(center)).abs()).exp()
            }
            Self::Exp(e) => e.value_at(side),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Plateau { height, eps } => height.is_finite() && eps.is_finite() && eps > 0.0,
            Self::Peak { height, rate, .. } => height.is_finite() && rate.is_finite() && rate > 0.0,
            Self::Exp(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "channel_shape",
                reason: format!("{self:?} is not a finite-energy shape"),
            })
        }
    }
}

/// A trial element with finitely many nonzero channels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiniteElementState {
    channels: BTreeMap<ChannelIndex, ChannelShape>,
}

impl FiniteElementState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: ChannelIndex, shape: ChannelShape) -> Result<()> {
        shape.validate()?;
        self.channels.insert(c, shape);
        Ok(())
    }

    pub fn get(&self, c: ChannelIndex) -> Option<&ChannelShape> {
        self.channels.get(&c)
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ChannelIndex, &ChannelShape)> {
        self.channels.iter()
    }

    fn value(&self, m: usize, n: usize, side: Side) -> f64 {
        self.channels
            .get(&ChannelIndex::new(m, n))
            .map_or(0.0, |s| s.value_at(side))
    }

    /// `‖U‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.channels.values().map(ChannelShape::mass).sum()
    }

    /// The trial element used to show the spectrum below the threshold is
    /// non-empty: a plateau of height `−ε^{−1/2}` in the origin channel and
    /// unit peaks at `+1` in `(1,0)` and at `−1` in `(0,1)`.
    pub fn negative_energy_trial(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("{eps} is outside (0, 1)"),
            });
        }
        let mut s = Self::new();
        s.insert(
            ChannelIndex::ORIGIN,
            ChannelShape::Plateau {
                height: -eps.powf(-0.5),
                eps,
            },
        )?;
        s.insert(
            ChannelIndex::new(1, 0),
            ChannelShape::Peak {
                height: 1.0,
                center: Side::Plus,
                rate: 1.0,
            },
        )?;
        s.insert(
            ChannelIndex::new(0, 1),
            ChannelShape::Peak {
                height: 1.0,
                center: Side::Minus,
                rate: 1.0,
            },
        )?;
        Ok(s)
    }

    /// The element whose channel `P` is `C⁺_P v⁺ + C⁻_P v⁻` at the decay
    /// rates of `table`.
    pub fn from_coefficients(table: &ChannelTable, coeffs: &CoefficientVector) -> Result<Self> {
        let lat = &table.lattice;
        if coeffs.values.len() != lat.dim() {
            return Err(Error::DimensionMismatch {
                expected: lat.dim(),
                got: coeffs.values.len(),
            });
        }
        let mut s = Self::new();
        for (p, &c) in lat.channels().iter().enumerate() {
            let b = basis_pair(table.scalars[p].gamma)?;
            let e = b.combine(
                coeffs.values[Lattice::dof(p, Side::Plus)],
                coeffs.values[Lattice::dof(p, Side::Minus)],
            );
            s.insert(c, ChannelShape::Exp(e))?;
        }
        Ok(s)
    }
}

/// The coupling part `α₊𝔟₊[U] + α₋𝔟₋[U]`.
fn coupling(state: &FiniteElementState, params: &ModelParams) -> f64 {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (c, shape) in state.iter() {
        if c.m > 0 {
            plus += (2.0 * c.m as f64).sqrt() * shape.value_at(Side::Plus) * state.value(c.m - 1, c.n, Side::Plus);
        }
        if c.n > 0 {
            minus += (2.0 * c.n as f64).sqrt() * shape.value_at(Side::Minus) * state.value(c.m, c.n - 1, Side::Minus);
        }
    }
    params.alpha_plus * plus + params.alpha_minus * minus
}

/// `𝔞[U] + α₊𝔟₊[U] + α₋𝔟₋[U]`.
pub fn full_form_value(state: &FiniteElementState, params: &ModelParams) -> f64 {
    let a: f64 = state
        .iter()
        .map(|(&c, s)| s.dirichlet() + channel_energy(c.m, c.n, params) * s.mass())
        .sum();
    a + coupling(state, params)
}

/// The form minus `energy·‖U‖²`, with `r_P − energy` formed per channel so
/// that the large masses of slowly decaying channels do not cancel.
pub fn form_excess_at(state: &FiniteElementState, params: &ModelParams, energy: f64) -> f64 {
    let threshold = params.threshold();
    let a: f64 = state
        .iter()
        .map(|(&c, s)| {
            let offset = params.nu_plus * params.nu_plus * c.m as f64
                + params.nu_minus * params.nu_minus * c.n as f64
                + (threshold - energy);
            s.dirichlet() + offset * s.mass()
        })
        .sum();
    a + coupling(state, params)
}

/// The form minus `r₀,₀‖U‖²`.
pub fn form_excess(state: &FiniteElementState, params: &ModelParams) -> f64 {
    form_excess_at(state, params, params.threshold())
}

/// Closed form of [`form_excess`] on the trial element:
/// `3 + ν₊² + ν₋² − ε^{−1/2}√2(α₊ + α₋)`.
pub fn trial_excess_closed_form(params: &ModelParams, eps: f64) -> f64 {
    3.0 + params.nu_plus * params.nu_plus + params.nu_minus * params.nu_minus
        - eps.powf(-0.5) * 2f64.sqrt() * (params.alpha_plus + params.alpha_minus)
}

/// The trial element is below the threshold iff `ε` is smaller than
/// `2(α₊+α₋)²/(3+ν₊²+ν₋²)²`. Subcritical parameters keep this below 2/3.
pub fn negativity_threshold(params: &ModelParams) -> f64 {
    let s = 3.0 + params.nu_plus * params.nu_plus + params.nu_minus * params.nu_minus;
    let a = params.alpha_plus + params.alpha_minus;
    2.0 * a * a / (s * s)
}

/// Sign change of the trial excess in `ε ∈ (0, 1)`, located by bisection
/// to `tol`. `None` when the excess has one sign on the whole interval.
pub fn negativity_threshold_by_bisection(params: &ModelParams, tol: f64) -> Result<Option<f64>> {
    let f = |eps: f64| -> Result<f64> {
        Ok(form_excess(&FiniteElementState::negative_energy_trial(eps)?, params))
    };
    let (mut lo, mut hi) = (1e-300f64, 1.0 - f64::EPSILON);
    if f(lo)? >= 0.0 || f(hi)? < 0.0 {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// `f_k(t) = (1 − k/t²)^{1/2}(1 + e^{−2t})` for `t ≥ √k`.
pub fn f_k(k: f64, t: f64) -> f64 {
    let r = k.sqrt();
    ((t - r).max(0.0) * (t + r)).sqrt() / t * (1.0 + (-2.0 * t).exp())
}

/// `C(m,n,k) = (γ(0)/γ(k))(1 + e^{−2γ(k)})` with `γ(k) = √(r_{m,n} + k)`.
pub fn shift_constant(params: &ModelParams, c: ChannelIndex, k: f64) -> f64 {
    let r = channel_energy(c.m, c.n, params);
    let g = (r + k).sqrt();
    (r.sqrt() / g) * (1.0 + (-2.0 * g).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub worst: f64,
    pub at: ChannelIndex,
    pub channels: usize,
}

/// Largest `C(m,n,k)` over `m + n ≤ max_sum`.
pub fn shift_constant_check(params: &ModelParams, k: f64, max_sum: usize) -> Result<ShiftCheck> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("{k} must be positive"),
        });
    }
    let (worst, at) = (0..=max_sum)
        .into_par_iter()
        .map(|s| {
            (0..=s)
                .map(|m| {
                    let c = ChannelIndex::new(m, s - m);
                    (shift_constant(params, c, k), c)
                })
                .fold((f64::NEG_INFINITY, ChannelIndex::ORIGIN), pick)
        })
        .reduce(|| (f64::NEG_INFINITY, ChannelIndex::ORIGIN), pick);
    Ok(ShiftCheck {
        worst,
        at,
        channels: (max_sum + 1) * (max_sum + 2) / 2,
    })
}

// ties resolve to the lexicographically smaller channel, so the result does
// not depend on how rayon splits the work
fn pick(a: (f64, ChannelIndex), b: (f64, ChannelIndex)) -> (f64, ChannelIndex) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Minimum over `t_grid` of the central difference of `f_k` with step
/// `10⁻⁶t`.
pub fn fk_monotonicity(k: f64, t_grid: &[f64]) -> Result<f64> {
    if let Some(&t) = t_grid.iter().find(|&&t| !(t * t > k)) {
        return Err(Error::InvalidParameter {
            name: "t_grid",
            reason: format!("{t} is not above sqrt(k) = {}", k.sqrt()),
        });
    }
    Ok(t_grid
        .par_iter()
        .map(|&t| {
            let h = 1e-6 * t;
            (f_k(k, t + h) - f_k(k, t - h)) / (2.0 * h)
        })
        .reduce(|| f64::INFINITY, f64::min))
}

/// `count` evenly spaced points on `[a, b]`.
pub fn linear_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count)
            .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
