//! Model parameters and per-channel scalars.
//!
//! A channel `(m, n)` is one component of the double Hermite expansion of
//! the wave function. Each channel carries an energy offset
//! `r = ν₊²(m+½) + ν₋²(n+½)`; at a spectral parameter `λ` below it the
//! channel solutions decay like `exp(-γ|x ∓ 1|)` with `γ = √(r − λ)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};

/// Above this decay rate `exp(4γ)` is no longer safely representable and the
/// mixing constant switches to its asymptotic series.
pub const KAPPA_SERIES_SWITCH: f64 = 150.0;

/// Which oscillator (attached at `x = +1` or `x = -1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }

    pub fn flipped(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Coupling strengths `α±` and oscillator frequencies `ν±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
}

/// `μ± = √2 ν± / α±` and `η± = μ± − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criticality {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
}

impl ModelParams {
    pub fn new(alpha_plus: f64, alpha_minus: f64, nu_plus: f64, nu_minus: f64) -> Result<Self> {
        for (name, a) in [("alpha_plus", alpha_plus), ("alpha_minus", alpha_minus)] {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("coupling must be finite and non-negative, got {a}"),
                });
            }
        }
        for (name, nu) in [("nu_plus", nu_plus), ("nu_minus", nu_minus)] {
            if !nu.is_finite() || nu <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("frequency must be finite and positive, got {nu}"),
                });
            }
        }
        Ok(Self {
            alpha_plus,
            alpha_minus,
            nu_plus,
            nu_minus,
        })
    }

    /// Builds parameters from `η±` via `α± = √2 ν± / (1 + η±)`.
    /// An infinite `η` gives a decoupled oscillator (`α = 0`).
    pub fn from_eta(eta_plus: f64, eta_minus: f64, nu_plus: f64, nu_minus: f64) -> Result<Self> {
        let alpha = |name: &'static str, eta: f64, nu: f64| -> Result<f64> {
            if eta.is_nan() || eta <= -1.0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("eta must exceed -1, got {eta}"),
                });
            }
            if eta.is_infinite() {
                return Ok(0.0);
            }
            Ok(SQRT_2 * nu / (1.0 + eta))
        };
        Self::new(
            alpha("eta_plus", eta_plus, nu_plus)?,
            alpha("eta_minus", eta_minus, nu_minus)?,
            nu_plus,
            nu_minus,
        )
    }

    pub fn alpha(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.alpha_plus,
            Side::Minus => self.alpha_minus,
        }
    }

    pub fn nu(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.nu_plus,
            Side::Minus => self.nu_minus,
        }
    }

    /// Exchanges the roles of the two oscillators.
    pub fn swapped(&self) -> Self {
        Self {
            alpha_plus: self.alpha_minus,
            alpha_minus: self.alpha_plus,
            nu_plus: self.nu_minus,
            nu_minus: self.nu_plus,
        }
    }

    /// Bottom of the continuous spectrum, `r₀,₀ = (ν₊² + ν₋²)/2`.
    pub fn threshold(&self) -> f64 {
        channel_energy(0, 0, self)
    }

    /// `μ` for one side; infinite when that oscillator is decoupled.
    pub fn mu(&self, side: Side) -> f64 {
        let a = self.alpha(side);
        if a == 0.0 {
            f64::INFINITY
        } else {
            SQRT_2 * self.nu(side) / a
        }
    }

    pub fn is_subcritical(&self) -> bool {
        self.mu(Side::Plus) > 1.0 && self.mu(Side::Minus) > 1.0
    }

    pub fn require_subcritical(&self) -> Result<()> {
        if self.is_subcritical() {
            Ok(())
        } else {
            Err(Error::Supercritical {
                mu_plus: self.mu(Side::Plus),
                mu_minus: self.mu(Side::Minus),
            })
        }
    }
}

/// Index of an oscillator channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChannelIndex {
    pub m: usize,
    pub n: usize,
}

impl ChannelIndex {
    pub const ORIGIN: ChannelIndex = ChannelIndex { m: 0, n: 0 };

    pub fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }

    pub fn mirrored(self) -> Self {
        Self { m: self.n, n: self.m }
    }

    /// Neighbour one step down along the given oscillator's quantum number.
    pub fn lower(self, side: Side) -> Option<Self> {
        match side {
            Side::Plus => self.m.checked_sub(1).map(|m| Self { m, n: self.n }),
            Side::Minus => self.n.checked_sub(1).map(|n| Self { m: self.m, n }),
        }
    }

    pub fn upper(self, side: Side) -> Self {
        match side {
            Side::Plus => Self { m: self.m + 1, n: self.n },
            Side::Minus => Self { m: self.m, n: self.n + 1 },
        }
    }

    /// Quantum number along the given side.
    pub fn along(self, side: Side) -> usize {
        match side {
            Side::Plus => self.m,
            Side::Minus => self.n,
        }
    }
}

/// `r_{m,n} = ν₊²(m+½) + ν₋²(n+½)`.
pub fn channel_energy(m: usize, n: usize, params: &ModelParams) -> f64 {
    params.nu_plus.powi(2) * (m as f64 + 0.5) + params.nu_minus.powi(2) * (n as f64 + 0.5)
}

/// Radicand of the decay rate at spectral parameter `energy`.
///
/// Evaluated as `ν₊²m + ν₋²n + (r₀,₀ − energy)` so that the threshold case
/// `energy = r₀,₀` gives exactly `ν₊²m + ν₋²n`.
pub fn gamma_radicand(m: usize, n: usize, params: &ModelParams, energy: f64) -> f64 {
    let excitation = params.nu_plus.powi(2) * m as f64 + params.nu_minus.powi(2) * n as f64;
    excitation + (params.threshold() - energy)
}

/// `γ_{m,n}(k) = √(r_{m,n} + k)`.
pub fn channel_gamma(m: usize, n: usize, params: &ModelParams, shift: f64) -> Result<f64> {
    let excitation = params.nu_plus.powi(2) * m as f64 + params.nu_minus.powi(2) * n as f64;
    let radicand = excitation + (params.threshold() + shift);
    if radicand < 0.0 || radicand.is_nan() {
        return Err(Error::OpenChannel {
            m,
            n,
            energy: -shift,
            radicand,
        });
    }
    Ok(radicand.sqrt())
}

/// Decay rate of channel `(m, n)` at spectral parameter `energy`; the
/// channel must be closed (`γ > 0`).
pub fn closed_gamma(m: usize, n: usize, params: &ModelParams, energy: f64) -> Result<f64> {
    let radicand = gamma_radicand(m, n, params, energy);
    if radicand > 0.0 {
        Ok(radicand.sqrt())
    } else {
        Err(Error::OpenChannel {
            m,
            n,
            energy,
            radicand,
        })
    }
}

/// Root in `(−1, 0]` of `κ² + 2e^{2γ}κ + 1 = 0`.
///
/// Evaluated as `−1/(e^{2γ} + √(e^{4γ} − 1))`, which has neither the
/// cancellation of the textbook root nor its overflow.
pub fn kappa(gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "kappa needs gamma >= 0, got {gamma}");
    if gamma < KAPPA_SERIES_SWITCH {
        -1.0 / ((2.0 * gamma).exp() + (4.0 * gamma).exp_m1().sqrt())
    } else {
        let x = (-2.0 * gamma).exp();
        -0.5 * x * (1.0 + 0.25 * x * x)
    }
}

/// `ρ = ‖u± + κu∓‖_γ`.
pub fn rho(gamma: f64) -> Result<f64> {
    Ok(rho_hat(gamma)? * (-(-4.0 * gamma).exp_m1()).sqrt())
}

/// `ρ̂ = ρ (1 − e^{−4γ})^{−1/2}`.
///
/// Uses the identity `ρ̂² = 2γ(1 + κ²)`, which follows from the quadratic
/// for `κ` and avoids the cancellation in `1 + κ² + 2κe^{−2γ}` at small `γ`.
pub fn rho_hat(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::DegenerateChannel(gamma));
    }
    let k = kappa(gamma);
    Ok((2.0 * gamma * (1.0 + k * k)).sqrt())
}

pub fn mu_eta(params: &ModelParams) -> Result<Criticality> {
    if params.alpha_plus == 0.0 {
        return Err(Error::DecoupledOscillator { side: "plus" });
    }
    if params.alpha_minus == 0.0 {
        return Err(Error::DecoupledOscillator { side: "minus" });
    }
    let mu_plus = params.mu(Side::Plus);
    let mu_minus = params.mu(Side::Minus);
    Ok(Criticality {
        mu_plus,
        mu_minus,
        eta_plus: mu_plus - 1.0,
        eta_minus: mu_minus - 1.0,
    })
}

/// Scalars attached to one channel at one spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScalars {
    pub r: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub rho: f64,
    pub rho_hat: f64,
}

impl ChannelScalars {
    pub fn at(index: ChannelIndex, params: &ModelParams, energy: f64) -> Result<Self> {
        let gamma = closed_gamma(index.m, index.n, params, energy)?;
        Ok(Self {
            r: channel_energy(index.m, index.n, params),
            gamma,
            kappa: kappa(gamma),
            rho: rho(gamma)?,
            rho_hat: rho_hat(gamma)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    /// Root of the quadratic by bisection on (-1, 0).
    fn kappa_oracle(gamma: f64) -> f64 {
        let f = |k: f64| k * k + 2.0 * (2.0 * gamma).exp() * k + 1.0;
        let (mut lo, mut hi) = (-1.0_f64, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn channel_energy_examples() {
        assert_eq!(channel_energy(0, 0, &unit()), 1.0);
        let p = ModelParams::new(1.0, 1.0, 1.0, 2.0).unwrap();
        assert_eq!(channel_energy(1, 2, &p), 11.5);
        let nu = 1.7;
        let p = ModelParams::new(1.0, 1.0, nu, nu).unwrap();
        assert!((channel_energy(0, 0, &p) - nu * nu).abs() < 1e-15);
    }

    #[test]
    fn channel_gamma_examples() {
        let p = unit();
        assert_eq!(channel_gamma(0, 0, &p, -p.threshold()).unwrap(), 0.0);
        assert_eq!(channel_gamma(1, 0, &p, -p.threshold()).unwrap(), 1.0);
        let q = ModelParams::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let g = channel_gamma(1, 1, &q, -q.threshold()).unwrap();
        assert!((g - 5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            channel_gamma(0, 0, &p, -2.0),
            Err(Error::OpenChannel { .. })
        ));
    }

    #[test]
    fn gamma_squared_recovers_energy() {
        let p = ModelParams::new(0.3, 0.9, 1.3, 0.7).unwrap();
        for m in 0..40 {
            for n in 0..40 {
                let g = channel_gamma(m, n, &p, -p.threshold()).unwrap();
                let r = channel_energy(m, n, &p);
                assert!(((g * g + p.threshold()) - r).abs() <= 1e-14 * r);
            }
        }
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(0.0), -1.0);
        assert!((kappa(1.0) - kappa_oracle(1.0)).abs() < 1e-12);
        assert!((kappa(1.0) + 0.0679804).abs() < 5e-8);
        assert!((kappa(5.0) - kappa_oracle(5.0)).abs() < 1e-9);
        assert!((kappa(5.0) + 2.2700e-5).abs() < 1e-8);
        assert!((kappa(5.0) + (-10f64).exp() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn kappa_solves_quadratic_and_is_monotone() {
        let mut prev = -1.0 - 1e-300;
        let mut g = 0.0;
        while g < 40.0 {
            let k = kappa(g);
            assert!(k > -1.0 - 1e-15 && k <= 0.0, "kappa({g}) = {k}");
            assert!(k >= prev, "kappa not monotone at {g}");
            prev = k;
            let e = (2.0 * g).exp();
            let residual = (k * k + 2.0 * e * k + 1.0).abs();
            assert!(residual <= 1e-12 * (1.0 + (2.0 * e * k).abs()), "residual {residual} at {g}");
            g += 0.01;
        }
    }

    #[test]
    fn kappa_asymptotics_and_series_switch() {
        let mut g = 1.0;
        while g < 60.0 {
            let k = kappa(g);
            let lead = -(-2.0 * g).exp() / 2.0;
            // the rounding of κ itself dominates e^{-6γ} beyond γ ≈ 6
            assert!((k - lead).abs() <= (-6.0 * g).exp() + 4.0 * f64::EPSILON * k.abs());
            g += 0.05;
        }
        let g = KAPPA_SERIES_SWITCH;
        let closed = -1.0 / ((2.0 * g).exp() + (4.0 * g).exp_m1().sqrt());
        assert!(((closed - kappa(g)) / closed).abs() < 1e-14);
        assert_eq!(kappa(1e6), -0.0);
        assert!(!kappa(800.0).is_nan());
    }

    #[test]
    fn rho_hat_examples() {
        let k = kappa_oracle(1.0);
        let rho2 = 2.0 * (1.0 + k * k + 2.0 * k * (-2.0f64).exp());
        assert!((rho2 - 1.9724421).abs() < 1e-6);
        assert!((rho(1.0).unwrap().powi(2) - rho2).abs() < 1e-12);
        assert!((rho_hat(1.0).unwrap() - 1.4174775).abs() < 1e-6);
        let r20 = rho_hat(20.0).unwrap();
        assert!((r20 / 40f64.sqrt() - 1.0).abs() < 1e-12);
        let g = 0.5;
        let rh2 = rho_hat(g).unwrap().powi(2);
        let bracket = 2.0 * g * (1.0 - (-2.0 * g).exp()) / (1.0 - (-4.0 * g).exp());
        assert!(rh2 > bracket && rh2.is_finite());
        assert!(matches!(rho_hat(0.0), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn rho_hat_matches_literal_formula() {
        let mut g = 0.05;
        while g < 30.0 {
            let k = kappa(g);
            let literal = (2.0 * g * (1.0 + k * k + 2.0 * k * (-2.0 * g).exp())).sqrt()
                / (1.0 - (-4.0 * g).exp()).sqrt();
            let ours = rho_hat(g).unwrap();
            assert!((literal - ours).abs() <= 1e-9 * ours, "gamma {g}");
            if g >= 1.0 {
                let dev = (ours * ours / (2.0 * g) - 1.0).abs();
                assert!(dev <= 10.0 * (-2.0 * g).exp() + 4.0 * f64::EPSILON);
            }
            g += 0.05;
        }
    }

    #[test]
    fn mu_eta_examples() {
        let p = ModelParams::new(SQRT_2, 1.0, 1.0, 1.0).unwrap();
        assert!((mu_eta(&p).unwrap().mu_plus - 1.0).abs() < 1e-15);
        let c = mu_eta(&unit()).unwrap();
        assert!((c.mu_plus - 1.4142136).abs() < 1e-7);
        assert!((c.eta_plus - 0.4142136).abs() < 1e-7);
        let p = ModelParams::new(SQRT_2 / 1.01, 1.0, 1.0, 1.0).unwrap();
        assert!((mu_eta(&p).unwrap().eta_plus - 0.01).abs() < 1e-14);
        let p = ModelParams::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(mu_eta(&p), Err(Error::DecoupledOscillator { side: "plus" })));
    }

    #[test]
    fn swap_maps_channel_scalars() {
        let p = ModelParams::new(0.4, 1.1, 1.3, 0.8).unwrap();
        let q = p.swapped();
        for m in 0..12 {
            for n in 0..12 {
                if m + n == 0 {
                    continue;
                }
                let a = ChannelScalars::at(ChannelIndex::new(m, n), &p, p.threshold()).unwrap();
                let b = ChannelScalars::at(ChannelIndex::new(n, m), &q, q.threshold()).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn construction_validates() {
        assert!(ModelParams::new(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        let p = ModelParams::from_eta(0.1, f64::INFINITY, 1.0, 2.0).unwrap();
        assert_eq!(p.alpha_minus, 0.0);
        assert!((p.mu(Side::Plus) - 1.1).abs() < 1e-14);
        assert!(p.is_subcritical());
        assert!(ModelParams::new(SQRT_2, 1.0, 1.0, 1.0).unwrap().require_subcritical().is_err());
    }
}
