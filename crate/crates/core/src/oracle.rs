//! Brute-force `2^n` statevector reference for validating the analytic and
//! sector-restricted code paths. Little-endian: bit `k` of an index is
//! qubit `k`.

use nalgebra::Matrix4;

use crate::quantum::{
    phase, Basis, PairDensity, QuantumError, QubitFrequency, SingleExcitationState, C64,
};
use crate::sampler::{JointDistribution, MeasurementSchedule, SamplerError};

pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{n} qubits exceeds the dense limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error(transparent)]
    Schedule(#[from] SamplerError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<C64>,
}

impl DenseState {
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self, OracleError> {
        if n > MAX_DENSE_QUBITS {
            return Err(OracleError::TooLarge {
                n,
                max: MAX_DENSE_QUBITS,
            });
        }
        assert_eq!(amps.len(), 1 << n, "amplitude count must be 2^n");
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Writes a single-excitation state out in the full computational basis.
pub fn embed(state: &SingleExcitationState) -> Result<DenseState, OracleError> {
    let n = state.n();
    if n > MAX_DENSE_QUBITS {
        return Err(OracleError::TooLarge {
            n,
            max: MAX_DENSE_QUBITS,
        });
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[0] = state.vacuum_amp();
    for (k, a) in state.exc_amps().iter().enumerate() {
        amps[1 << k] = *a;
    }
    DenseState::new(n, amps)
}

/// Full joint `|±⟩` distribution: phase each qubit's `|1⟩` component by its
/// own elapsed time, apply a Hadamard to every qubit, square.
pub fn brute_joint_distribution(
    state: &DenseState,
    schedule: &MeasurementSchedule,
    omega: QubitFrequency,
) -> Result<JointDistribution, OracleError> {
    let n = state.n;
    if schedule.len() != n || schedule.entries().iter().any(|e| e.0 >= n) {
        return Err(SamplerError::IncompleteSchedule {
            scheduled: schedule.len(),
            n,
        }
        .into());
    }
    let mut amps = state.amps.clone();
    for &(q, t) in schedule.entries() {
        let ph = phase(omega.get() * t);
        for (idx, a) in amps.iter_mut().enumerate() {
            if idx & (1 << q) != 0 {
                *a *= ph;
            }
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for q in 0..n {
        let bit = 1 << q;
        for idx in 0..amps.len() {
            if idx & bit == 0 {
                let (a0, a1) = (amps[idx], amps[idx | bit]);
                amps[idx] = (a0 + a1) * h;
                amps[idx | bit] = (a0 - a1) * h;
            }
        }
    }
    Ok(JointDistribution::from_probs(
        n,
        amps.iter().map(|a| a.norm_sqr()).collect(),
    ))
}

/// Literal partial trace over every qubit except `i` and `j`. The first
/// label of the 4×4 basis is qubit `i`.
pub fn brute_pair_density(
    state: &DenseState,
    i: usize,
    j: usize,
) -> Result<PairDensity, OracleError> {
    let n = state.n;
    for idx in [i, j] {
        if idx >= n {
            return Err(QuantumError::QubitIndex { index: idx, n }.into());
        }
    }
    if i == j {
        return Err(QuantumError::SameQubit(i).into());
    }
    let mask = (1 << i) | (1 << j);
    let label = |idx: usize| 2 * ((idx >> i) & 1) + ((idx >> j) & 1);
    let mut m = Matrix4::<C64>::zeros();
    for (r, ar) in state.amps.iter().enumerate() {
        for (c, ac) in state.amps.iter().enumerate() {
            if r & !mask == c & !mask {
                m[(label(r), label(c))] += ar * ac.conj();
            }
        }
    }
    Ok(PairDensity::new(m, Basis::Computational)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{generalized_state, pair_density_computational, w_state};
    use crate::sampler::joint_distribution;

    fn w1() -> QubitFrequency {
        QubitFrequency::new(1.0).unwrap()
    }

    #[test]
    fn embed_w2() {
        let d = embed(&w_state(2).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [0.0, h, h, 0.0];
        for (a, w) in d.amps().iter().zip(want) {
            assert!((a - C64::new(w, 0.0)).norm() < 1e-15);
        }
        assert!((d.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_vacuum_and_size_limit() {
        let z = C64::new(0.0, 0.0);
        let d = embed(&generalized_state(C64::new(1.0, 0.0), &[z, z]).unwrap()).unwrap();
        assert_eq!(d.amps()[0], C64::new(1.0, 0.0));
        assert!(matches!(
            embed(&w_state(15).unwrap()),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn uniform_vacuum_gives_uniform_distribution() {
        let z = C64::new(0.0, 0.0);
        let s = generalized_state(C64::new(1.0, 0.0), &[z; 5]).unwrap();
        let sched = MeasurementSchedule::from_times(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let d = brute_joint_distribution(&embed(&s).unwrap(), &sched, w1()).unwrap();
        assert!(d.probs().iter().all(|p| (p - 1.0 / 32.0).abs() < 1e-15));
    }

    #[test]
    fn w4_all_plus_by_projection() {
        // ⟨++++|e_k⟩ = 1/4 for every k, so ⟨++++|W4⟩ = 4·(1/2)·(1/4) = 1/2.
        let sched = MeasurementSchedule::simultaneous(4, 0.0).unwrap();
        let d =
            brute_joint_distribution(&embed(&w_state(4).unwrap()).unwrap(), &sched, w1()).unwrap();
        assert!((d.probs()[0] - 0.25).abs() < 1e-14);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_density_w6() {
        let w = w_state(6).unwrap();
        let a = brute_pair_density(&embed(&w).unwrap(), 0, 3).unwrap();
        let b = pair_density_computational(&w, 0, 3).unwrap();
        let dev = (a.matrix() - b.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12);
        assert!((a.matrix()[(0, 0)].re - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_pair_is_rank_one() {
        let z = C64::new(0.0, 0.0);
        let s = generalized_state(C64::new(1.0, 0.0), &[z; 4]).unwrap();
        let rho = brute_pair_density(&embed(&s).unwrap(), 1, 2).unwrap();
        let ev = rho.eigenvalues();
        assert!((ev[3] - 1.0).abs() < 1e-12);
        assert!(ev[..3].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn matches_sector_enumeration_small() {
        let amps = [C64::new(0.2, 0.5), C64::new(-0.6, 0.1), C64::new(0.3, -0.3)];
        let s = generalized_state(C64::new(0.3, 0.2), &amps).unwrap();
        let omega = QubitFrequency::new(0.8).unwrap();
        let sched = MeasurementSchedule::from_times(&[0.4, -0.9, 1.6]).unwrap();
        let a = joint_distribution(&s, &sched, omega).unwrap();
        let b = brute_joint_distribution(&embed(&s).unwrap(), &sched, omega).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }
}
