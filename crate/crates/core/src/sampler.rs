//! Exact sampling of sequential `|±⟩` measurements on single-excitation
//! states.
//!
//! Projecting qubit `j` of `v|0…0⟩ + Σ a_k|e_k⟩` onto `|s⟩` keeps the state
//! inside the vacuum + single-excitation sector: the vacuum amplitude
//! becomes `v + s·a_j` and every other excitation amplitude is untouched
//! (up to the common normalization). Each measurement therefore costs `O(1)`
//! and a full round `O(n)`.
//!
//! Qubits do not interact, so a qubit's free-evolution phase only has to be
//! applied at the instant it is measured.

use rand::Rng;
use thiserror::Error;

use crate::quantum::{phase, Outcome, QubitFrequency, SingleExcitationState, C64};

/// Largest register [`joint_distribution`] will enumerate.
pub const MAX_ENUMERATED_QUBITS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("qubit {0} was already measured")]
    AlreadyMeasured(usize),
    #[error("qubit {index} does not exist in a {n}-qubit state")]
    UnknownQubit { index: usize, n: usize },
    #[error("qubit {0} appears more than once in the schedule")]
    DuplicateQubit(usize),
    #[error("measurement time for qubit {0} is not finite")]
    NonFiniteTime(usize),
    #[error("schedule covers {scheduled} qubits, state has {n}")]
    IncompleteSchedule { scheduled: usize, n: usize },
    #[error("{n} qubits is too many to enumerate (limit {max})")]
    TooLarge { n: usize, max: usize },
}

/// Ordered list of `(qubit, standard measurement time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSchedule {
    entries: Vec<(usize, f64)>,
}

impl MeasurementSchedule {
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self, SamplerError> {
        let mut seen = vec![false; entries.iter().map(|e| e.0 + 1).max().unwrap_or(0)];
        for &(q, t) in &entries {
            if seen[q] {
                return Err(SamplerError::DuplicateQubit(q));
            }
            seen[q] = true;
            if !t.is_finite() {
                return Err(SamplerError::NonFiniteTime(q));
            }
        }
        Ok(Self { entries })
    }

    /// Qubit `k` measured at `times[k]`, in index order.
    pub fn from_times(times: &[f64]) -> Result<Self, SamplerError> {
        Self::new(times.iter().copied().enumerate().collect())
    }

    pub fn simultaneous(n: usize, t: f64) -> Result<Self, SamplerError> {
        Self::from_times(&vec![t; n])
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same measurement times, applied in the order given by `order`
    /// (indices into the current entry list).
    pub fn reordered(&self, order: &[usize]) -> Result<Self, SamplerError> {
        Self::new(order.iter().map(|&k| self.entries[k]).collect())
    }

    /// Every time shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self, SamplerError> {
        Self::new(self.entries.iter().map(|&(q, t)| (q, t + offset)).collect())
    }

    fn check_covers(&self, n: usize) -> Result<(), SamplerError> {
        if let Some(&(q, _)) = self.entries.iter().find(|e| e.0 >= n) {
            return Err(SamplerError::UnknownQubit { index: q, n });
        }
        if self.entries.len() != n {
            return Err(SamplerError::IncompleteSchedule {
                scheduled: self.entries.len(),
                n,
            });
        }
        Ok(())
    }
}

/// A partially measured single-excitation state.
///
/// Pending amplitudes are stored unnormalized; the physical amplitude of
/// qubit `k` is `scale · pending[k]`.
#[derive(Debug, Clone)]
pub struct SimState {
    vacuum: C64,
    pending: Vec<Option<C64>>,
    scale: f64,
    pending_weight: f64,
    checkpoint_weight: f64,
    omega: QubitFrequency,
}

impl SimState {
    pub fn new(state: &SingleExcitationState, omega: QubitFrequency) -> Self {
        let weight: f64 = state.exc_amps().iter().map(|a| a.norm_sqr()).sum();
        Self {
            vacuum: state.vacuum_amp(),
            pending: state.exc_amps().iter().copied().map(Some).collect(),
            scale: 1.0,
            pending_weight: weight,
            checkpoint_weight: weight,
            omega,
        }
    }

    pub fn n(&self) -> usize {
        self.pending.len()
    }

    pub fn vacuum_amp(&self) -> C64 {
        self.vacuum
    }

    /// Physical amplitude of an unmeasured qubit's excitation, or `None`
    /// once it has been measured.
    pub fn pending_amp(&self, qubit: usize) -> Option<C64> {
        self.pending
            .get(qubit)
            .copied()
            .flatten()
            .map(|a| a * self.scale)
    }

    pub fn remaining(&self) -> usize {
        self.pending.iter().filter(|a| a.is_some()).count()
    }

    pub fn norm_sqr(&self) -> f64 {
        let raw: f64 = self.pending.iter().flatten().map(|a| a.norm_sqr()).sum();
        self.vacuum.norm_sqr() + self.scale * self.scale * raw
    }

    fn evolved_amp(&self, qubit: usize, t: f64) -> Result<(C64, C64), SamplerError> {
        let raw = match self.pending.get(qubit) {
            None => {
                return Err(SamplerError::UnknownQubit {
                    index: qubit,
                    n: self.n(),
                })
            }
            Some(None) => return Err(SamplerError::AlreadyMeasured(qubit)),
            Some(Some(a)) => *a,
        };
        Ok((raw, raw * self.scale * phase(self.omega.get() * t)))
    }

    /// Probability of `+1` if `qubit` is measured at standard time `t`.
    pub fn plus_probability(&self, qubit: usize, t: f64) -> Result<f64, SamplerError> {
        let (raw, a) = self.evolved_amp(qubit, t)?;
        Ok(self.branch_probability(raw, a, 1.0))
    }

    fn branch_probability(&self, raw: C64, a: C64, s: f64) -> f64 {
        let rest = ((self.pending_weight - raw.norm_sqr()) * self.scale * self.scale).max(0.0);
        let p = 0.5 * ((self.vacuum + a * s).norm_sqr() + rest);
        p.clamp(0.0, 1.0)
    }

    /// Projects `qubit` onto `outcome` at time `t` and renormalizes.
    /// Returns the probability the outcome had.
    pub fn collapse(
        &mut self,
        qubit: usize,
        t: f64,
        outcome: Outcome,
    ) -> Result<f64, SamplerError> {
        let (raw, a) = self.evolved_amp(qubit, t)?;
        let s = outcome.sign();
        let p = self.branch_probability(raw, a, s);
        self.apply_collapse(qubit, raw, a, s, p);
        Ok(p)
    }

    /// Measures `qubit` at standard time `t`, drawing the outcome from `rng`.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        t: f64,
        rng: &mut R,
    ) -> Result<Outcome, SamplerError> {
        let (raw, a) = self.evolved_amp(qubit, t)?;
        let p_plus = self.branch_probability(raw, a, 1.0);
        let u: f64 = rng.random();
        let (outcome, p) = if u < p_plus {
            (Outcome::Plus, p_plus)
        } else {
            (Outcome::Minus, 1.0 - p_plus)
        };
        self.apply_collapse(qubit, raw, a, outcome.sign(), p);
        Ok(outcome)
    }

    fn apply_collapse(&mut self, qubit: usize, raw: C64, a: C64, s: f64, p: f64) {
        // p > 0 for any drawn outcome; the guard only matters for `collapse`
        // onto an impossible branch.
        let norm = if p > 0.0 { 1.0 / (2.0 * p).sqrt() } else { 0.0 };
        self.vacuum = (self.vacuum + a * s) * norm;
        self.scale *= norm;
        self.pending[qubit] = None;
        self.pending_weight -= raw.norm_sqr();
        if self.pending_weight < 0.5 * self.checkpoint_weight {
            self.pending_weight = self.pending.iter().flatten().map(|x| x.norm_sqr()).sum();
            self.checkpoint_weight = self.pending_weight;
        }
    }
}

/// Outcome of every qubit in one round, indexed by qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    outcomes: Vec<Outcome>,
}

impl RoundOutcome {
    pub fn get(&self, qubit: usize) -> Outcome {
        self.outcomes[qubit]
    }

    pub fn as_slice(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Bit `k` set when qubit `k` gave `−1`; the same indexing as
    /// [`JointDistribution`].
    pub fn index(&self) -> usize {
        self.outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Outcome::Minus)
            .fold(0, |acc, (k, _)| acc | (1 << k))
    }
}

/// Draws one joint outcome for every qubit of `state`.
pub fn run_round<R: Rng + ?Sized>(
    state: &SingleExcitationState,
    schedule: &MeasurementSchedule,
    omega: QubitFrequency,
    rng: &mut R,
) -> Result<RoundOutcome, SamplerError> {
    schedule.check_covers(state.n())?;
    let mut sim = SimState::new(state, omega);
    let mut outcomes = vec![Outcome::Plus; state.n()];
    for &(q, t) in schedule.entries() {
        outcomes[q] = sim.measure_qubit(q, t, rng)?;
    }
    Ok(RoundOutcome { outcomes })
}

/// Probability table over all `2^n` joint outcomes. Entry `idx` has bit `k`
/// set when qubit `k` reads `−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn from_probs(n: usize, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), 1 << n);
        Self { n, probs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability that `qubit` reads `+1`.
    pub fn marginal_plus(&self, qubit: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & (1 << qubit) == 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Joint distribution of two qubits.
    pub fn pair(&self, i: usize, j: usize) -> crate::quantum::PairOutcomes {
        let mut out = [0.0; 4];
        for (idx, p) in self.probs.iter().enumerate() {
            let bi = (idx >> i) & 1;
            let bj = (idx >> j) & 1;
            out[2 * bi + bj] += p;
        }
        crate::quantum::PairOutcomes {
            pp: out[0],
            pm: out[1],
            mp: out[2],
            mm: out[3],
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact joint outcome distribution by enumerating every branch of the
/// collapse sequence.
///
/// Along a branch the unnormalized vacuum amplitude accumulates
/// `v + Σ s_k·a_k·e^{iωt_k}` and each projection contributes `1/√2`, so a
/// leaf has probability `|v + Σ s_k·a_k·e^{iωt_k}|² / 2^n`.
pub fn joint_distribution(
    state: &SingleExcitationState,
    schedule: &MeasurementSchedule,
    omega: QubitFrequency,
) -> Result<JointDistribution, SamplerError> {
    let n = state.n();
    if n > MAX_ENUMERATED_QUBITS {
        return Err(SamplerError::TooLarge {
            n,
            max: MAX_ENUMERATED_QUBITS,
        });
    }
    schedule.check_covers(n)?;
    let evolved: Vec<(usize, C64)> = schedule
        .entries()
        .iter()
        .map(|&(q, t)| (q, state.exc_amp(q) * phase(omega.get() * t)))
        .collect();
    let mut probs = vec![0.0; 1 << n];
    let weight = 1.0 / (1u64 << n) as f64;

    fn descend(evolved: &[(usize, C64)], acc: C64, idx: usize, weight: f64, probs: &mut [f64]) {
        match evolved.split_first() {
            None => probs[idx] = acc.norm_sqr() * weight,
            Some((&(q, a), rest)) => {
                descend(rest, acc + a, idx, weight, probs);
                descend(rest, acc - a, idx | (1 << q), weight, probs);
            }
        }
    }
    descend(&evolved, state.vacuum_amp(), 0, weight, &mut probs);
    Ok(JointDistribution { n, probs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{generalized_state, w_state};
    use crate::rng::substream;

    fn w1() -> QubitFrequency {
        QubitFrequency::new(1.0).unwrap()
    }

    #[test]
    fn first_measurement_of_w3_is_fair() {
        let sim = SimState::new(&w_state(3).unwrap(), w1());
        assert!((sim.plus_probability(0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((sim.plus_probability(2, 1.3).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn w2_at_equal_times_always_agrees() {
        let w = w_state(2).unwrap();
        let mut rng = substream(11, 0);
        for _ in 0..2000 {
            let mut sim = SimState::new(&w, w1());
            let a = sim.measure_qubit(0, 0.0, &mut rng).unwrap();
            let b = sim.measure_qubit(1, 0.0, &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn vacuum_only_is_fair_and_unchanged() {
        let z = C64::new(0.0, 0.0);
        let s = generalized_state(C64::new(1.0, 0.0), &[z, z, z]).unwrap();
        let mut sim = SimState::new(&s, w1());
        for (q, o) in [(0, Outcome::Plus), (1, Outcome::Minus)] {
            assert!((sim.plus_probability(q, 0.2).unwrap() - 0.5).abs() < 1e-15);
            let p = sim.collapse(q, 0.2, o).unwrap();
            assert!((p - 0.5).abs() < 1e-15);
            assert!((sim.vacuum_amp().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn double_measurement_rejected() {
        let mut sim = SimState::new(&w_state(3).unwrap(), w1());
        let mut rng = substream(1, 1);
        sim.measure_qubit(1, 0.0, &mut rng).unwrap();
        assert_eq!(
            sim.measure_qubit(1, 0.0, &mut rng),
            Err(SamplerError::AlreadyMeasured(1))
        );
        assert_eq!(
            sim.measure_qubit(5, 0.0, &mut rng),
            Err(SamplerError::UnknownQubit { index: 5, n: 3 })
        );
    }

    #[test]
    fn normalization_after_every_collapse() {
        let amps: Vec<C64> = (0..9)
            .map(|k| C64::from_polar(1.0 + k as f64 * 0.1, k as f64))
            .collect();
        let s = generalized_state(C64::new(0.4, 0.1), &amps).unwrap();
        let mut sim = SimState::new(&s, QubitFrequency::new(2.3).unwrap());
        let mut rng = substream(5, 0);
        for q in [4, 0, 8, 2, 1, 7, 3, 6, 5] {
            sim.measure_qubit(q, q as f64 * 0.17, &mut rng).unwrap();
            assert!((sim.norm_sqr() - 1.0).abs() < 1e-9);
        }
        assert_eq!(sim.remaining(), 0);
    }

    #[test]
    fn schedule_validation() {
        assert_eq!(
            MeasurementSchedule::new(vec![(0, 0.0), (0, 1.0)]),
            Err(SamplerError::DuplicateQubit(0))
        );
        assert_eq!(
            MeasurementSchedule::new(vec![(1, f64::NAN)]),
            Err(SamplerError::NonFiniteTime(1))
        );
        let partial = MeasurementSchedule::new(vec![(0, 0.0), (1, 0.0)]).unwrap();
        let mut rng = substream(0, 0);
        assert_eq!(
            run_round(&w_state(3).unwrap(), &partial, w1(), &mut rng),
            Err(SamplerError::IncompleteSchedule { scheduled: 2, n: 3 })
        );
        let too_big = MeasurementSchedule::simultaneous(21, 0.0).unwrap();
        assert_eq!(
            joint_distribution(&w_state(21).unwrap(), &too_big, w1()),
            Err(SamplerError::TooLarge { n: 21, max: 20 })
        );
    }

    #[test]
    fn w2_joint_distribution_at_zero_offset() {
        let sched = MeasurementSchedule::simultaneous(2, 0.0).unwrap();
        let d = joint_distribution(&w_state(2).unwrap(), &sched, w1()).unwrap();
        // index bits: 0 = ++, 1 = (q0 −, q1 +), 2 = (q0 +, q1 −), 3 = −−
        assert!((d.probs()[0] - 0.5).abs() < 1e-15);
        assert!((d.probs()[3] - 0.5).abs() < 1e-15);
        assert!(d.probs()[1].abs() < 1e-15 && d.probs()[2].abs() < 1e-15);
    }

    #[test]
    fn w3_marginals_are_half() {
        let sched = MeasurementSchedule::from_times(&[0.3, -1.2, 2.9]).unwrap();
        let d = joint_distribution(&w_state(3).unwrap(), &sched, w1()).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        for q in 0..3 {
            assert!((d.marginal_plus(q) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_distribution_collapse_consistency() {
        // Chaining `collapse` along one branch gives that leaf's probability.
        let amps = [
            C64::new(0.2, 0.5),
            C64::new(-0.6, 0.1),
            C64::new(0.3, -0.3),
            C64::new(0.1, 0.2),
        ];
        let s = generalized_state(C64::new(0.3, 0.0), &amps).unwrap();
        let omega = QubitFrequency::new(1.7).unwrap();
        let times = [0.1, 0.9, -0.4, 2.2];
        let sched = MeasurementSchedule::from_times(&times).unwrap();
        let d = joint_distribution(&s, &sched, omega).unwrap();
        for idx in 0..16usize {
            let mut sim = SimState::new(&s, omega);
            let mut p = 1.0;
            for (q, &t) in times.iter().enumerate() {
                let o = if idx & (1 << q) == 0 {
                    Outcome::Plus
                } else {
                    Outcome::Minus
                };
                p *= sim.collapse(q, t, o).unwrap();
            }
            assert!((p - d.probs()[idx]).abs() < 1e-12, "idx {idx}");
        }
    }
}
