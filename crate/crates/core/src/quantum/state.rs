use serde::{Deserialize, Serialize};

use super::{QuantumError, ALGEBRA_TOL, C64};

/// Angular frequency `ω` of the `|0⟩ → |1⟩` gap, in radians per unit time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QubitFrequency(f64);

impl QubitFrequency {
    pub fn new(omega: f64) -> Result<Self, QuantumError> {
        if omega.is_finite() && omega > 0.0 {
            Ok(Self(omega))
        } else {
            Err(QuantumError::InvalidFrequency(omega))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QubitFrequency {
    type Error = QuantumError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<QubitFrequency> for f64 {
    fn from(value: QubitFrequency) -> Self {
        value.0
    }
}

/// An `n`-qubit pure state in the span of `|00…0⟩` and the `n` states
/// `|e_k⟩` that have exactly qubit `k` excited.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationState {
    vacuum: C64,
    excitations: Vec<C64>,
}

impl SingleExcitationState {
    pub fn n(&self) -> usize {
        self.excitations.len()
    }

    pub fn vacuum_amp(&self) -> C64 {
        self.vacuum
    }

    pub fn exc_amps(&self) -> &[C64] {
        &self.excitations
    }

    pub fn exc_amp(&self, k: usize) -> C64 {
        self.excitations[k]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vacuum.norm_sqr() + self.excitations.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Returns a copy with qubit `k`'s excitation amplitude multiplied by `e^{iφ}`.
    pub fn with_phase(&self, k: usize, phi: f64) -> Self {
        let mut out = self.clone();
        out.excitations[k] *= C64::from_polar(1.0, phi);
        out
    }

    /// Multiplies each excitation amplitude by `e^{iφ_k}` in place.
    pub fn apply_phases(&mut self, phases: &[f64]) {
        for (a, &phi) in self.excitations.iter_mut().zip(phases) {
            *a *= C64::from_polar(1.0, phi);
        }
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<(), QuantumError> {
        if index < self.n() {
            Ok(())
        } else {
            Err(QuantumError::QubitIndex { index, n: self.n() })
        }
    }
}

/// The symmetric W state `(|10…0⟩ + |01…0⟩ + … + |0…01⟩)/√n`.
pub fn w_state(n: usize) -> Result<SingleExcitationState, QuantumError> {
    if n < 2 {
        return Err(QuantumError::TooFewQubits(n));
    }
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    Ok(SingleExcitationState {
        vacuum: C64::new(0.0, 0.0),
        excitations: vec![amp; n],
    })
}

/// Builds a single-excitation state from arbitrary amplitudes, renormalizing
/// them to unit norm.
pub fn generalized_state(
    vacuum_amp: C64,
    exc_amps: &[C64],
) -> Result<SingleExcitationState, QuantumError> {
    if exc_amps.len() < 2 {
        return Err(QuantumError::TooFewQubits(exc_amps.len()));
    }
    if !vacuum_amp.is_finite() || exc_amps.iter().any(|a| !a.is_finite()) {
        return Err(QuantumError::NonFinite);
    }
    let norm_sqr = vacuum_amp.norm_sqr() + exc_amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if norm_sqr <= 0.0 || !norm_sqr.is_finite() {
        return Err(QuantumError::ZeroNorm);
    }
    let scale = 1.0 / norm_sqr.sqrt();
    let state = SingleExcitationState {
        vacuum: vacuum_amp * scale,
        excitations: exc_amps.iter().map(|a| a * scale).collect(),
    };
    debug_assert!((state.norm_sqr() - 1.0).abs() < ALGEBRA_TOL);
    Ok(state)
}
