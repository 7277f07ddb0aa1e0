//! Transport phases and basis misalignment folded into the prepared state.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::config::{ExperimentConfig, PhaseNoise};
use crate::quantum::{w_state, SingleExcitationState};
use crate::rng::substream;

/// Recorded in run metadata next to any result that used misalignment.
pub const MISALIGNMENT_MODEL: &str =
    "basis misalignment modeled as a rotation about the energy axis: \
party k measuring (|0> ± e^{iε_k}|1>)/√2 is equivalent to multiplying its excitation amplitude by \
e^{-iε_k}; exact for such rotations, general SU(2) misalignment is not modeled";

/// Per-qubit phases for one set. Random models draw `n` values from `rng`;
/// deterministic models draw nothing.
pub fn set_phases<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Vec<f64> {
    let n = config.n_parties;
    let mut phases = match &config.noise.transport {
        PhaseNoise::None => vec![0.0; n],
        PhaseNoise::Fixed(v) => v.clone(),
        PhaseNoise::Normal { sigma } => {
            let d = Normal::new(0.0, *sigma).expect("sigma validated");
            (0..n).map(|_| d.sample(rng)).collect()
        }
        PhaseNoise::Uniform { half_width } => {
            if *half_width == 0.0 {
                vec![0.0; n]
            } else {
                let d = Uniform::new(-half_width, *half_width).expect("width validated");
                (0..n).map(|_| d.sample(rng)).collect()
            }
        }
    };
    for (phi, eps) in phases.iter_mut().zip(&config.noise.basis_misalignment) {
        *phi -= eps;
    }
    phases
}

/// The state prepared for one set: the W state with that set's phases.
pub fn noisy_state<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    rng: &mut R,
) -> SingleExcitationState {
    let mut state = w_state(config.n_parties).expect("n validated");
    let phases = set_phases(config, rng);
    state.apply_phases(&phases);
    state
}

/// Every set's prepared state, using the same per-set substreams as the
/// protocol run so the states match those that were measured.
pub fn apply_noise(config: &ExperimentConfig) -> Vec<SingleExcitationState> {
    (0..config.n_sets)
        .map(|set| noisy_state(config, &mut substream(config.seed, set)))
        .collect()
}
