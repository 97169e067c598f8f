use thiserror::Error;

use crate::model::PhaseRegion;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameters outside the {phase} domain: {violated}")]
    ParameterDomain {
        phase: PhaseRegion,
        violated: String,
    },

    #[error("parameters sit on a phase boundary: |Delta| - 1 = {distance:e} is below tolerance")]
    PhaseBoundary { distance: f64 },

    #[error("weight w{index} must be positive")]
    NonPositiveWeight { index: usize },

    #[error("{what}: requested {requested}, limit is {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("lattice size must be even for the half-turn symmetric model, got {0}")]
    OddLattice(usize),

    #[error("series operands disagree: {0}")]
    SeriesMismatch(&'static str),

    #[error("constant term of the symbol is too close to zero to invert")]
    NearSingularSymbol,

    #[error("estimated precision loss of {loss_bits:.0} bits exceeds half of the {working_bits}-bit working precision")]
    InsufficientPrecision { loss_bits: f64, working_bits: u32 },

    #[error("moment sequence is not positive definite at k = {k}: {reason}")]
    MomentSequenceInvalid { k: usize, reason: String },

    #[error("sequence too short: need {needed} entries, have {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("cannot certify truncation of {what}: {reason}")]
    Truncation { what: &'static str, reason: String },

    #[error("elliptic nome underflows at the requested precision")]
    Underflow,

    #[error("insufficient data for the fit: need {needed} points, have {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("cannot parse {0:?} as a real number")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
