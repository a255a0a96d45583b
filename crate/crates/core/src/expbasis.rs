//! Closed-form calculus on the two-dimensional space `F_γ` of functions
//! solving `−v″ + γ²v = 0` away from the interaction points `x = ±1`.
//!
//! Every element is a combination `a₊ e^{−γ|x−1|} + a₋ e^{−γ|x+1|}`, so inner
//! products, traces and derivative jumps are all explicit. The `H¹_γ` inner
//! product is `(u, w)_γ = ∫ u′w′ + γ² u w dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{kappa, rho, rho_hat, Side};

/// `a₊ e^{−γ|x−1|} + a₋ e^{−γ|x+1|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpElement {
    pub gamma: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

/// Boundary values `u(+1)`, `u(−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceData {
    pub value_plus: f64,
    pub value_minus: f64,
}

impl TraceData {
    pub fn new(value_plus: f64, value_minus: f64) -> Self {
        Self {
            value_plus,
            value_minus,
        }
    }

    pub fn at(&self, p: Side) -> f64 {
        match p {
            Side::Plus => self.value_plus,
            Side::Minus => self.value_minus,
        }
    }
}

impl ExpElement {
    pub fn new(gamma: f64, a_plus: f64, a_minus: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::DegenerateChannel(gamma));
        }
        Ok(Self {
            gamma,
            a_plus,
            a_minus,
        })
    }

    /// `u⁺ = e^{−γ|x−1|}`.
    pub fn u_plus(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0, 0.0)
    }

    /// `u⁻ = e^{−γ|x+1|}`.
    pub fn u_minus(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, 1.0)
    }

    pub fn zero(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0, 0.0)
    }

    fn overlap(&self) -> f64 {
        (-2.0 * self.gamma).exp()
    }

    pub fn value_at(&self, p: Side) -> f64 {
        let q = self.overlap();
        match p {
            Side::Plus => self.a_plus + self.a_minus * q,
            Side::Minus => self.a_minus + self.a_plus * q,
        }
    }

    pub fn traces(&self) -> TraceData {
        TraceData::new(self.value_at(Side::Plus), self.value_at(Side::Minus))
    }

    /// Pointwise value, used by quadrature-based checks.
    pub fn eval(&self, x: f64) -> f64 {
        self.a_plus * (-self.gamma * (x - 1.0).abs()).exp()
            + self.a_minus * (-self.gamma * (x + 1.0).abs()).exp()
    }

    /// Pointwise derivative away from `±1`.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let g = self.gamma;
        -g * self.a_plus * (x - 1.0).signum() * (-g * (x - 1.0).abs()).exp()
            - g * self.a_minus * (x + 1.0).signum() * (-g * (x + 1.0).abs()).exp()
    }

    /// `∫ |u′|² dx`.
    pub fn dirichlet_integral(&self) -> f64 {
        let g = self.gamma;
        let q = self.overlap();
        g * (self.a_plus * self.a_plus + self.a_minus * self.a_minus)
            + 2.0 * self.a_plus * self.a_minus * q * (g - 2.0 * g * g)
    }

    /// `∫ |u|² dx`.
    pub fn mass_integral(&self) -> f64 {
        let g = self.gamma;
        let q = self.overlap();
        (self.a_plus * self.a_plus + self.a_minus * self.a_minus) / g
            + 2.0 * self.a_plus * self.a_minus * q * (2.0 + 1.0 / g)
    }

    pub fn norm_sq(&self) -> f64 {
        let g = self.gamma;
        let q = self.overlap();
        2.0 * g
            * (self.a_plus * self.a_plus
                + self.a_minus * self.a_minus
                + 2.0 * self.a_plus * self.a_minus * q)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            gamma: self.gamma,
            a_plus: s * self.a_plus,
            a_minus: s * self.a_minus,
        }
    }

    pub fn add(&self, other: &ExpElement) -> Result<Self> {
        check_gamma(self.gamma, other.gamma)?;
        Ok(Self {
            gamma: self.gamma,
            a_plus: self.a_plus + other.a_plus,
            a_minus: self.a_minus + other.a_minus,
        })
    }
}

fn check_gamma(g1: f64, g2: f64) -> Result<()> {
    if g1 == g2 {
        Ok(())
    } else {
        Err(Error::MismatchedGamma(g1, g2))
    }
}

/// `(e1, e2)_γ` from `‖u±‖²_γ = 2γ` and `(u⁺, u⁻)_γ = 2γe^{−2γ}`.
pub fn h1_inner(e1: &ExpElement, e2: &ExpElement) -> Result<f64> {
    check_gamma(e1.gamma, e2.gamma)?;
    let g = e1.gamma;
    let q = (-2.0 * g).exp();
    Ok(2.0
        * g
        * (e1.a_plus * e2.a_plus
            + e1.a_minus * e2.a_minus
            + (e1.a_plus * e2.a_minus + e1.a_minus * e2.a_plus) * q))
}

/// `[v′](p) = v′(p+0) − v′(p−0)` from the boundary values of `v`.
pub fn derivative_jump(e: &ExpElement, p: Side) -> f64 {
    let g = e.gamma;
    let q = (-2.0 * g).exp();
    let scale = -2.0 * g / (-(-4.0 * g).exp_m1());
    scale * (e.value_at(p) - q * e.value_at(p.flipped()))
}

/// Orthogonal projection of `H¹_γ` onto `F_γ`: the unique element of
/// `F_γ` with the prescribed traces.
pub fn project(t: &TraceData, gamma: f64) -> Result<ExpElement> {
    if !(gamma > 0.0) {
        return Err(Error::DegenerateChannel(gamma));
    }
    let q = (-2.0 * gamma).exp();
    let det = -(-4.0 * gamma).exp_m1();
    ExpElement::new(
        gamma,
        (t.value_plus - q * t.value_minus) / det,
        (t.value_minus - q * t.value_plus) / det,
    )
}

/// Slack in `2γ(|u(−1)|² + |u(1)|²) ≤ (1 + e^{−2γ})‖u‖²_γ`, for an element
/// known only through its traces and its norm.
pub fn trace_gap_from_norm(t: &TraceData, gamma: f64, norm_sq: f64) -> f64 {
    let lhs = 2.0 * gamma * (t.value_plus * t.value_plus + t.value_minus * t.value_minus);
    (1.0 + (-2.0 * gamma).exp()) * norm_sq - lhs
}

pub fn trace_gap(e: &ExpElement) -> f64 {
    trace_gap_from_norm(&e.traces(), e.gamma, e.norm_sq())
}

/// The `H¹_γ`-orthonormal pair `v± = (u± + κu∓)/ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisPair {
    pub gamma: f64,
    pub kappa: f64,
    pub rho: f64,
    pub rho_hat: f64,
    /// `v⁺(1) = v⁻(−1) = 1/ρ̂`.
    pub vplus_at_plus1: f64,
    /// `v⁺(−1) = v⁻(1) = −κ/ρ̂`.
    pub vplus_at_minus1: f64,
}

impl BasisPair {
    pub fn v_plus(&self) -> ExpElement {
        ExpElement {
            gamma: self.gamma,
            a_plus: 1.0 / self.rho,
            a_minus: self.kappa / self.rho,
        }
    }

    pub fn v_minus(&self) -> ExpElement {
        ExpElement {
            gamma: self.gamma,
            a_plus: self.kappa / self.rho,
            a_minus: 1.0 / self.rho,
        }
    }

    pub fn vminus_at_minus1(&self) -> f64 {
        self.vplus_at_plus1
    }

    pub fn vminus_at_plus1(&self) -> f64 {
        self.vplus_at_minus1
    }

    /// `C⁺v⁺ + C⁻v⁻` as an explicit element.
    pub fn combine(&self, c_plus: f64, c_minus: f64) -> ExpElement {
        ExpElement {
            gamma: self.gamma,
            a_plus: (c_plus + self.kappa * c_minus) / self.rho,
            a_minus: (c_minus + self.kappa * c_plus) / self.rho,
        }
    }
}

pub fn basis_pair(gamma: f64) -> Result<BasisPair> {
    let rh = rho_hat(gamma)?;
    let k = kappa(gamma);
    Ok(BasisPair {
        gamma,
        kappa: k,
        rho: rho(gamma)?,
        rho_hat: rh,
        vplus_at_plus1: 1.0 / rh,
        vplus_at_minus1: -k / rh,
    })
}

/// Norm of `e^{−γ|x|}` in `H¹_γ` for the one-point (single oscillator)
/// geometry: `√(2γ)`.
pub fn one_point_norm(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::DegenerateChannel(gamma));
    }
    Ok((2.0 * gamma).sqrt())
}
