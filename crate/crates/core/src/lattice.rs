//! Channel lattices and coefficient vectors.
//!
//! Channels are ordered lexicographically by `(m + n, m)`; each channel owns
//! two consecutive coordinates, `C⁺` then `C⁻`. This ordering is part of the
//! public contract: entry lists and vector dumps depend on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelIndex, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum Scheme {
    /// `m + n ≤ l`.
    Simplex { l: usize },
    /// `m ≤ m_max`, `n ≤ n_max`.
    Rectangle { m_max: usize, n_max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub scheme: Scheme,
    /// Keep channel `(0, 0)`. Only meaningful below the threshold.
    pub include_origin: bool,
}

impl Truncation {
    pub fn simplex(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: "simplex cutoff must be at least 1".into(),
            });
        }
        Ok(Self {
            scheme: Scheme::Simplex { l },
            include_origin: false,
        })
    }

    pub fn rectangle(m_max: usize, n_max: usize) -> Self {
        Self {
            scheme: Scheme::Rectangle { m_max, n_max },
            include_origin: false,
        }
    }

    pub fn with_origin(mut self, include: bool) -> Self {
        self.include_origin = include;
        self
    }

    pub fn contains(&self, c: ChannelIndex) -> bool {
        if c == ChannelIndex::ORIGIN && !self.include_origin {
            return false;
        }
        match self.scheme {
            Scheme::Simplex { l } => c.m + c.n <= l,
            Scheme::Rectangle { m_max, n_max } => c.m <= m_max && c.n <= n_max,
        }
    }

    /// The same truncation with the roles of `m` and `n` exchanged.
    pub fn mirrored(&self) -> Self {
        let scheme = match self.scheme {
            Scheme::Simplex { l } => Scheme::Simplex { l },
            Scheme::Rectangle { m_max, n_max } => Scheme::Rectangle {
                m_max: n_max,
                n_max: m_max,
            },
        };
        Self {
            scheme,
            include_origin: self.include_origin,
        }
    }

    /// Largest `m + n` present; used to tell boundary channels apart.
    pub fn size_hint(&self) -> usize {
        match self.scheme {
            Scheme::Simplex { l } => l,
            Scheme::Rectangle { m_max, n_max } => m_max + n_max,
        }
    }

    fn extent(&self) -> (usize, usize) {
        match self.scheme {
            Scheme::Simplex { l } => (l, l),
            Scheme::Rectangle { m_max, n_max } => (m_max, n_max),
        }
    }
}

/// The ordered channel set of a truncation.
#[derive(Debug, Clone)]
pub struct Lattice {
    truncation: Truncation,
    channels: Vec<ChannelIndex>,
    width: usize,
    slots: Vec<u32>,
}

const EMPTY: u32 = u32::MAX;

impl Lattice {
    pub fn new(truncation: Truncation) -> Self {
        let (m_ext, n_ext) = truncation.extent();
        let width = m_ext + 1;
        let mut slots = vec![EMPTY; width * (n_ext + 1)];
        let mut channels = Vec::new();
        for s in 0..=(m_ext + n_ext) {
            for m in 0..=s.min(m_ext) {
                let n = s - m;
                if n > n_ext {
                    continue;
                }
                let c = ChannelIndex::new(m, n);
                if truncation.contains(c) {
                    slots[n * width + m] = channels.len() as u32;
                    channels.push(c);
                }
            }
        }
        Self {
            truncation,
            channels,
            width,
            slots,
        }
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Number of real coordinates, two per channel.
    pub fn dim(&self) -> usize {
        2 * self.channels.len()
    }

    pub fn channels(&self) -> &[ChannelIndex] {
        &self.channels
    }

    pub fn position(&self, c: ChannelIndex) -> Option<usize> {
        if c.m >= self.width {
            return None;
        }
        let slot = *self.slots.get(c.n * self.width + c.m)?;
        (slot != EMPTY).then_some(slot as usize)
    }

    /// Coordinate of component `C^side` of channel number `pos`.
    pub fn dof(pos: usize, component: Side) -> usize {
        match component {
            Side::Plus => 2 * pos,
            Side::Minus => 2 * pos + 1,
        }
    }

    pub fn dof_owner(&self, dof: usize) -> (ChannelIndex, Side) {
        let c = self.channels[dof / 2];
        let comp = if dof % 2 == 0 { Side::Plus } else { Side::Minus };
        (c, comp)
    }

    /// A channel is interior when every neighbour with non-negative indices
    /// belongs to the lattice.
    pub fn is_interior(&self, c: ChannelIndex) -> bool {
        [Side::Plus, Side::Minus].iter().all(|&s| {
            let up = self.position(c.upper(s)).is_some();
            let down = match c.lower(s) {
                Some(d) => self.position(d).is_some() || (d == ChannelIndex::ORIGIN),
                None => true,
            };
            up && down
        })
    }

    /// Permutation sending each coordinate of this lattice to its image
    /// under `(m, n, ±) ↦ (n, m, ∓)` in the mirrored lattice.
    pub fn mirror_permutation(&self) -> Vec<usize> {
        let mirrored = Lattice::new(self.truncation.mirrored());
        let mut perm = vec![0; self.dim()];
        for (pos, c) in self.channels.iter().enumerate() {
            let target = mirrored
                .position(c.mirrored())
                .expect("mirrored lattice contains mirrored channel");
            perm[Self::dof(pos, Side::Plus)] = Self::dof(target, Side::Minus);
            perm[Self::dof(pos, Side::Minus)] = Self::dof(target, Side::Plus);
        }
        perm
    }
}

/// An element `{C⁺_{m,n}, C⁻_{m,n}}` of the coefficient space, laid out in
/// lattice order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub values: Vec<f64>,
}

impl CoefficientVector {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self {
            values: vec![0.0; lattice.dim()],
        }
    }

    pub fn from_values(lattice: &Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    /// `(C⁺, C⁻)` of a channel; zero outside the lattice.
    pub fn pair(&self, lattice: &Lattice, c: ChannelIndex) -> (f64, f64) {
        match lattice.position(c) {
            Some(p) => (self.values[2 * p], self.values[2 * p + 1]),
            None => (0.0, 0.0),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}
