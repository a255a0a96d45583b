//! Matrices of the lattice forms `b′±`, `b″±`, the remainder, the total
//! operator and the one-oscillator Jacobi matrix.
//!
//! Convention: a form term `c·Re(x ȳ)` with `x ≠ y` contributes `c/2` to the
//! symmetric matrix entry, so that `𝒞ᵀB𝒞` reproduces the form.

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Truncation};
use crate::model::{ChannelIndex, ChannelScalars, ModelParams, Side};
use crate::operator::{OperatorBuilder, OperatorKind, OperatorMeta, SymmetricOperator};

/// Per-channel scalars of a lattice at one spectral parameter, in lattice
/// order.
#[derive(Debug, Clone)]
pub struct ChannelTable {
    pub lattice: Lattice,
    pub energy: f64,
    pub scalars: Vec<ChannelScalars>,
}

impl ChannelTable {
    pub fn new(params: &ModelParams, trunc: Truncation, energy: f64) -> Result<Self> {
        let lattice = Lattice::new(trunc);
        let scalars = lattice
            .channels()
            .iter()
            .map(|&c| ChannelScalars::at(c, params, energy))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lattice,
            energy,
            scalars,
        })
    }

    pub fn get(&self, c: ChannelIndex) -> Option<&ChannelScalars> {
        self.lattice.position(c).map(|p| &self.scalars[p])
    }

    /// Largest `|κ|` over the lattice.
    pub fn max_abs_kappa(&self) -> f64 {
        self.scalars.iter().fold(0.0, |m, s| m.max(s.kappa.abs()))
    }
}

/// Form coefficient `√(2k)/(ρ̂_P ρ̂_Q)` of the coupling between channel `P`
/// and its lower neighbour `Q` along `side`.
fn coupling_coefficient(along: usize, sp: &ChannelScalars, sq: &ChannelScalars) -> f64 {
    (2.0 * along as f64).sqrt() / (sp.rho_hat * sq.rho_hat)
}

fn for_each_coupling(
    table: &ChannelTable,
    side: Side,
    mut f: impl FnMut(usize, usize, f64, &ChannelScalars, &ChannelScalars),
) {
    let lat = &table.lattice;
    for (p, &c) in lat.channels().iter().enumerate() {
        let Some(lower) = c.lower(side) else { continue };
        let Some(q) = lat.position(lower) else { continue };
        let (sp, sq) = (&table.scalars[p], &table.scalars[q]);
        f(p, q, coupling_coefficient(c.along(side), sp, sq), sp, sq);
    }
}

fn meta(kind: OperatorKind, params: &ModelParams, trunc: Truncation, energy: f64) -> OperatorMeta {
    OperatorMeta {
        kind,
        params: Some(*params),
        truncation: Some(trunc),
        energy: Some(energy),
    }
}

fn check_energy(params: &ModelParams, energy: f64) -> Result<()> {
    if energy.is_nan() || energy > params.threshold() {
        return Err(Error::InvalidParameter {
            name: "energy",
            reason: format!(
                "{energy} lies above the threshold r00 = {}",
                params.threshold()
            ),
        });
    }
    Ok(())
}

pub fn b_prime_from_table(table: &ChannelTable, side: Side) -> SymmetricOperator {
    let own = side;
    let other = side.flipped();
    let mut b = OperatorBuilder::with_capacity(table.lattice.dim(), 4 * table.lattice.len());
    for_each_coupling(table, side, |p, q, c, sp, sq| {
        let h = 0.5 * c;
        b.add(Lattice::dof(p, own), Lattice::dof(q, own), h);
        b.add(Lattice::dof(p, own), Lattice::dof(q, other), -sq.kappa * h);
        b.add(Lattice::dof(p, other), Lattice::dof(q, own), -sp.kappa * h);
        b.add(Lattice::dof(p, other), Lattice::dof(q, other), sp.kappa * sq.kappa * h);
    });
    b.build(OperatorMeta {
        kind: OperatorKind::BPrime(side),
        params: None,
        truncation: Some(*table.lattice.truncation()),
        energy: Some(table.energy),
    })
}

pub fn b_doubleprime_from_table(table: &ChannelTable, side: Side) -> SymmetricOperator {
    let mut b = OperatorBuilder::with_capacity(table.lattice.dim(), table.lattice.len());
    for_each_coupling(table, side, |p, q, c, _, _| {
        b.add(Lattice::dof(p, side), Lattice::dof(q, side), 0.5 * c);
    });
    b.build(OperatorMeta {
        kind: OperatorKind::BDoublePrime(side),
        params: None,
        truncation: Some(*table.lattice.truncation()),
        energy: Some(table.energy),
    })
}

/// Matrix of `b′_side` with decay rates `γ = √(r − energy)`.
pub fn assemble_b_prime(
    params: &ModelParams,
    trunc: Truncation,
    side: Side,
    energy: f64,
) -> Result<SymmetricOperator> {
    check_energy(params, energy)?;
    let table = ChannelTable::new(params, trunc, energy)?;
    Ok(b_prime_from_table(&table, side)
        .with_meta(meta(OperatorKind::BPrime(side), params, trunc, energy)))
}

/// Matrix of `b″_side`: the `b′_side` couplings with every `κ` term removed.
pub fn assemble_b_doubleprime(
    params: &ModelParams,
    trunc: Truncation,
    side: Side,
    energy: f64,
) -> Result<SymmetricOperator> {
    check_energy(params, energy)?;
    let table = ChannelTable::new(params, trunc, energy)?;
    Ok(b_doubleprime_from_table(&table, side)
        .with_meta(meta(OperatorKind::BDoublePrime(side), params, trunc, energy)))
}

/// `I + α₊B′₊ + α₋B′₋` built from an existing channel table.
pub fn total_from_table(params: &ModelParams, table: &ChannelTable) -> SymmetricOperator {
    let dim = table.lattice.dim();
    let mut b = OperatorBuilder::with_capacity(dim, dim + 8 * table.lattice.len());
    for i in 0..dim {
        b.add(i, i, 1.0);
    }
    for side in [Side::Plus, Side::Minus] {
        let alpha = params.alpha(side);
        if alpha == 0.0 {
            continue;
        }
        for e in b_prime_from_table(table, side).entries() {
            b.add(e.row, e.col, alpha * e.value);
        }
    }
    let trunc = *table.lattice.truncation();
    b.build(meta(OperatorKind::Total, params, trunc, table.energy))
}

/// `I + α₊B′₊ + α₋B′₋` at spectral parameter `energy`.
pub fn assemble_total(
    params: &ModelParams,
    trunc: Truncation,
    energy: f64,
) -> Result<SymmetricOperator> {
    check_energy(params, energy)?;
    let table = ChannelTable::new(params, trunc, energy)?;
    Ok(total_from_table(params, &table))
}

/// `X = α₊(B′₊ − B″₊) + α₋(B′₋ − B″₋)`.
pub fn assemble_remainder(
    params: &ModelParams,
    trunc: Truncation,
    energy: f64,
) -> Result<SymmetricOperator> {
    check_energy(params, energy)?;
    let table = ChannelTable::new(params, trunc, energy)?;
    let parts: Vec<(f64, SymmetricOperator)> = [Side::Plus, Side::Minus]
        .into_iter()
        .flat_map(|s| {
            let a = params.alpha(s);
            [
                (a, b_prime_from_table(&table, s)),
                (-a, b_doubleprime_from_table(&table, s)),
            ]
        })
        .collect();
    let terms: Vec<(f64, &SymmetricOperator)> = parts.iter().map(|(a, op)| (*a, op)).collect();
    SymmetricOperator::linear_combination(
        &terms,
        meta(OperatorKind::Remainder, params, trunc, energy),
    )
}

/// `K(λ) = −α₊B′₊(λ) − α₋B′₋(λ)`; `λ` must stay `margin` below the
/// threshold so that the origin channel, if present, is closed.
pub fn bs_operator(
    params: &ModelParams,
    trunc: Truncation,
    lambda: f64,
    margin: f64,
) -> Result<SymmetricOperator> {
    let threshold = params.threshold();
    if !(lambda <= threshold - margin) {
        return Err(Error::MarginViolation {
            lambda,
            threshold,
            margin,
        });
    }
    let table = ChannelTable::new(params, trunc, lambda)?;
    let plus = b_prime_from_table(&table, Side::Plus);
    let minus = b_prime_from_table(&table, Side::Minus);
    SymmetricOperator::linear_combination(
        &[(-params.alpha_plus, &plus), (-params.alpha_minus, &minus)],
        meta(OperatorKind::BirmanSchwinger, params, trunc, lambda),
    )
}

/// Lowest index of the one-oscillator lattice at `energy`: the ground
/// channel is closed, and therefore kept, strictly below `ν²/2`.
pub fn one_oscillator_start(nu: f64, energy: f64) -> usize {
    if nu * nu * 0.5 - energy > 0.0 {
        0
    } else {
        1
    }
}

/// One-oscillator decay rate `γ_m = √(ν²m + (ν²/2 − energy))`.
pub fn one_oscillator_gamma(nu: f64, m: usize, energy: f64) -> f64 {
    (nu * nu * m as f64 + (nu * nu * 0.5 - energy)).sqrt()
}

/// Off-diagonal entries `c_m/2` with `c_m = √(2m)/(ρ_m ρ_{m−1})` and
/// `ρ_m = √(2γ_m)`, for `m = start+1, …, start+size−1`.
pub fn one_oscillator_offdiagonal(nu: f64, size: usize, energy: f64) -> Vec<f64> {
    let start = one_oscillator_start(nu, energy);
    let mut off = Vec::with_capacity(size.saturating_sub(1));
    let mut rho_prev = (2.0 * one_oscillator_gamma(nu, start, energy)).sqrt();
    for m in start + 1..start + size {
        let rho_m = (2.0 * one_oscillator_gamma(nu, m, energy)).sqrt();
        off.push(0.5 * (2.0 * m as f64).sqrt() / (rho_m * rho_prev));
        rho_prev = rho_m;
    }
    off
}

/// Tridiagonal matrix `J` of the single-oscillator coupling form on `size`
/// channels. The count of interest is the number of negative eigenvalues
/// of `I + αJ`; `alpha` only enters through the metadata here.
pub fn assemble_one_oscillator(
    alpha: f64,
    nu: f64,
    size: usize,
    energy: f64,
) -> Result<SymmetricOperator> {
    if !(nu > 0.0) || !(alpha >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "nu/alpha",
            reason: format!("need nu > 0 and alpha >= 0, got nu = {nu}, alpha = {alpha}"),
        });
    }
    if size == 0 {
        return Err(Error::InvalidParameter {
            name: "size",
            reason: "one-oscillator lattice needs at least one channel".into(),
        });
    }
    if energy.is_nan() || energy > nu * nu * 0.5 {
        return Err(Error::OpenChannel {
            m: 0,
            n: 0,
            energy,
            radicand: nu * nu * 0.5 - energy,
        });
    }
    let off = one_oscillator_offdiagonal(nu, size, energy);
    let diag = vec![0.0; size];
    let params = ModelParams {
        alpha_plus: alpha,
        alpha_minus: 0.0,
        nu_plus: nu,
        nu_minus: nu,
    };
    Ok(SymmetricOperator::from_tridiagonal(
        &diag,
        &off,
        OperatorMeta {
            kind: OperatorKind::OneOscillator,
            params: Some(params),
            truncation: None,
            energy: Some(energy),
        },
    ))
}

/// `max |κ|` together with `max` form coefficient over the lattice couplings
/// of both sides; used by remainder bounds.
pub fn remainder_scales(table: &ChannelTable) -> (f64, f64) {
    let mut max_coef = 0.0f64;
    for side in [Side::Plus, Side::Minus] {
        for_each_coupling(table, side, |_, _, c, _, _| max_coef = max_coef.max(c));
    }
    (table.max_abs_kappa(), max_coef)
}
