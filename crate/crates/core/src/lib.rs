//! Eigenvalue counting below the continuous-spectrum threshold for a pair of
//! harmonic oscillators coupled to a particle on the line at `x = ±1`.
//!
//! The point spectrum below `r₀,₀ = (ν₊² + ν₋²)/2` is counted through the
//! inertia of lattice operators built in an orthonormal piecewise-exponential
//! basis, channel by channel.

pub mod assembly;
pub mod counting;
pub mod error;
pub mod expbasis;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod variational;

pub use error::{Error, Result};
pub use lattice::{CoefficientVector, Lattice, Scheme, Truncation};
pub use model::{ChannelIndex, ChannelScalars, Criticality, ModelParams, Side};
pub use operator::{OperatorKind, OperatorMeta, SymmetricOperator};
