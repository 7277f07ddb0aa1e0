//! Exact small-dimension algebra for single-excitation states.
//!
//! Everything here works in two regimes: the full single-excitation sector
//! (`vacuum + n one-excitation terms`, stored in `O(n)`), and two-qubit
//! reductions of it as 4×4 / 2×2 density matrices.
//!
//! Phase convention: a qubit left alone for standard time `t` picks up the
//! factor `e^{+iωt}` on its `|1⟩` amplitude relative to `|0⟩`. This is the
//! sign that makes the conditional receiver state carry `+2i·sin ωt` in its
//! upper-right entry.

mod concurrence;
mod density;
mod probability;
mod state;

pub use concurrence::{concurrence, x_state_concurrence};
pub use density::{
    conditional_receiver_state, evolve_qubit, evolve_qubit_signed, from_measurement_basis,
    pair_density_computational, to_measurement_basis, Basis, PairDensity, QubitDensity,
};
pub use probability::{outcome_probabilities, pair_correlation, PairOutcomes};
pub use state::{generalized_state, w_state, QubitFrequency, SingleExcitationState};

pub use num_complex::Complex64 as C64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sign of the exponent in the `|1⟩` phase factor `e^{±iωt}`.
pub const EVOLUTION_SIGN: f64 = 1.0;

/// Tolerance for algebraic identities (hermiticity, trace, normalization).
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Floor below which an eigenvalue counts as negative.
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("need at least two qubits, got {0}")]
    TooFewQubits(usize),
    #[error("all amplitudes are zero")]
    ZeroNorm,
    #[error("non-finite amplitude or matrix entry")]
    NonFinite,
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitIndex { index: usize, n: usize },
    #[error("pair indices must differ (both {0})")]
    SameQubit(usize),
    #[error("expected a matrix in the {expected:?} basis, got {found:?}")]
    WrongBasis { expected: Basis, found: Basis },
    #[error("publisher outcome has probability zero; conditional state undefined")]
    ZeroProbability,
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix trace is {0}, expected 1")]
    NotUnitTrace(f64),
    #[error("matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("qubit frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("outcome must be +1 or -1, got {0}")]
    InvalidOutcome(i8),
}

/// `+1` or `−1` measurement result in the `|±⟩` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Self, QuantumError> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(QuantumError::InvalidOutcome(other)),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = QuantumError;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        Self::from_i8(v)
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> Self {
        o.as_i8()
    }
}

/// `e^{±iθ}` with the module's sign convention applied.
pub(crate) fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, EVOLUTION_SIGN * theta)
}
