use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::{
    pair_density_computational, phase, to_measurement_basis, Outcome, QuantumError, QubitFrequency,
    SingleExcitationState, C64,
};

/// Joint `|±⟩` outcome probabilities for a pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOutcomes {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl PairOutcomes {
    pub fn get(&self, first: Outcome, second: Outcome) -> f64 {
        match (first, second) {
            (Outcome::Plus, Outcome::Plus) => self.pp,
            (Outcome::Plus, Outcome::Minus) => self.pm,
            (Outcome::Minus, Outcome::Plus) => self.mp,
            (Outcome::Minus, Outcome::Minus) => self.mm,
        }
    }

    pub fn agreement(&self) -> f64 {
        self.pp + self.mm
    }

    pub fn first_marginal(&self, s: Outcome) -> f64 {
        self.get(s, Outcome::Plus) + self.get(s, Outcome::Minus)
    }

    pub fn second_marginal(&self, s: Outcome) -> f64 {
        self.get(Outcome::Plus, s) + self.get(Outcome::Minus, s)
    }

    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

/// Receiver outcome probabilities `(P(+), P(−))` for the W state, given the
/// publisher's outcome and an offset `delta` between the two measurements.
pub fn outcome_probabilities(
    n: usize,
    delta: f64,
    omega: QubitFrequency,
    publisher_outcome: Outcome,
) -> Result<(f64, f64), QuantumError> {
    if n < 2 {
        return Err(QuantumError::TooFewQubits(n));
    }
    let swing = (omega.get() * delta).cos() / n as f64;
    let agree = 0.5 + swing;
    let disagree = 0.5 - swing;
    Ok(match publisher_outcome {
        Outcome::Plus => (agree, disagree),
        Outcome::Minus => (disagree, agree),
    })
}

/// Joint outcome distribution when qubit `i` is measured at standard time 0
/// and qubit `j` at standard time `delta`.
///
/// For states without a vacuum component this is
/// `1/4 + (s_i·s_j/2)·Re(a_i·conj(a_j)·e^{−iωΔ})`.
pub fn pair_correlation(
    state: &SingleExcitationState,
    i: usize,
    j: usize,
    delta: f64,
    omega: QubitFrequency,
) -> Result<PairOutcomes, QuantumError> {
    let rho = pair_density_computational(state, i, j)?;
    let one = C64::new(1.0, 0.0);
    let e = phase(omega.get() * delta);
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(one, e, one, e));
    let evolved =
        super::PairDensity::new(d * rho.matrix() * d.adjoint(), super::Basis::Computational)?;
    let m = to_measurement_basis(&evolved)?;
    let diag = |k: usize| m.matrix()[(k, k)].re.max(0.0);
    Ok(PairOutcomes {
        pp: diag(0),
        pm: diag(1),
        mp: diag(2),
        mm: diag(3),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{generalized_state, w_state};
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn w1() -> QubitFrequency {
        QubitFrequency::new(1.0).unwrap()
    }

    #[test]
    fn outcome_probabilities_examples() {
        let (p, m) = outcome_probabilities(2, 0.0, w1(), Outcome::Plus).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && m.abs() < 1e-15);

        let (p, m) = outcome_probabilities(3, PI, w1(), Outcome::Plus).unwrap();
        assert!((p - 1.0 / 6.0).abs() < 1e-15);
        assert!((m - 5.0 / 6.0).abs() < 1e-15);

        let (p, m) = outcome_probabilities(4, FRAC_PI_2, w1(), Outcome::Plus).unwrap();
        assert!((p - 0.5).abs() < 1e-15 && (m - 0.5).abs() < 1e-15);

        let (p, m) = outcome_probabilities(3, PI, w1(), Outcome::Minus).unwrap();
        assert!((p - 5.0 / 6.0).abs() < 1e-15 && (m - 1.0 / 6.0).abs() < 1e-15);
        assert!(outcome_probabilities(1, 0.0, w1(), Outcome::Plus).is_err());
    }

    #[test]
    fn w_state_agreement_law() {
        for n in [2usize, 3, 5, 9] {
            for d in [0.0, 0.3, 1.7, 2.9, -0.8] {
                let j = pair_correlation(&w_state(n).unwrap(), 0, n - 1, d, w1()).unwrap();
                let want = 0.5 + d.cos() / n as f64;
                assert!((j.agreement() - want).abs() < 1e-12);
                assert!((j.total() - 1.0).abs() < 1e-12);
                assert!((j.first_marginal(Outcome::Plus) - 0.5).abs() < 1e-12);
                assert!((j.second_marginal(Outcome::Minus) - 0.5).abs() < 1e-12);
                // conditionals reproduce outcome_probabilities
                let (pp, _) = outcome_probabilities(n, d, w1(), Outcome::Plus).unwrap();
                assert!((j.pp / 0.5 - pp).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_on_receiver_shifts_correlation() {
        let phi = 0.4;
        let omega = QubitFrequency::new(1.3).unwrap();
        let s = w_state(4).unwrap().with_phase(2, phi);
        for d in [0.0, 0.5, 1.1] {
            let j = pair_correlation(&s, 0, 2, d, omega).unwrap();
            let want = 0.5 + (omega.get() * d + phi).cos() / 4.0;
            assert!((j.agreement() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_closed_form_without_vacuum() {
        let amps = [C64::new(0.3, -0.2), C64::new(-0.5, 0.4), C64::new(0.1, 0.7)];
        let s = generalized_state(C64::new(0.0, 0.0), &amps).unwrap();
        let omega = QubitFrequency::new(0.9).unwrap();
        let d = 0.77;
        let j = pair_correlation(&s, 1, 2, d, omega).unwrap();
        let (a, b) = (s.exc_amp(1), s.exc_amp(2));
        let corr = (a * b.conj() * C64::from_polar(1.0, -omega.get() * d)).re;
        assert!((j.pp - (0.25 + corr / 2.0)).abs() < 1e-12);
        assert!((j.pm - (0.25 - corr / 2.0)).abs() < 1e-12);
        assert!((j.mp - (0.25 - corr / 2.0)).abs() < 1e-12);
        assert!((j.mm - (0.25 + corr / 2.0)).abs() < 1e-12);
    }
}
