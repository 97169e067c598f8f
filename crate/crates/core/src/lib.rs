//! Partition functions of the six-vertex model with domain wall boundary
//! conditions and half-turn symmetry.

pub mod asymptotics;
pub mod bigfloat;
pub mod enumerator;
pub mod error;
pub mod hankel;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod series;
pub mod special;
pub mod verify;

pub use bigfloat::BigFloat;
pub use error::{Error, Result};
pub use model::{BoltzmannWeights, PhaseParams, PhaseRegion};
pub use scalar::{Real, Scalar};

pub type Float = BigFloat;
pub type Rational = num_rational::BigRational;
