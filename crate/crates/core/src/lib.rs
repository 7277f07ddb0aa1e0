//! Multi-party clock synchronization from shared W-state entanglement.
//!
//! Parties share sets of qubits prepared in `(|10…0⟩ + … + |0…01⟩)/√n`,
//! each measures its qubit of every set in the `|±⟩` basis at its own local
//! zero, and one party (the standard) publishes its outcomes. Any receiver
//! then recovers `|Δ|`, its offset from the standard, from how often its
//! outcomes agree with the published ones: `P(agree) = 1/2 + cos(ωΔ)/n`.
//!
//! * [`quantum`]: exact pair/qubit density matrices, evolution, concurrence.
//! * [`sampler`]: `O(n)` exact sampling of a measurement round.
//! * [`protocol`]: bulletin board, publish/fetch, synchronize.
//! * [`estimation`]: agreement tallies, inversion, error bars, two-frequency
//!   wraparound resolution.
//! * [`harness`]: experiments, Monte Carlo sweeps, validation.
//! * `oracle` (feature `oracle`): dense `2^n` reference used for validation.

pub mod config;
pub mod estimation;
pub mod harness;
pub mod noise;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod sampler;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use config::{ConfigError, ExperimentConfig, FreqTag, NoiseSpec, OffsetWindow, PhaseNoise};
pub use estimation::{AgreementCounts, EstimateReport, EstimationError, Flag, Resolution};
pub use protocol::{Bulletin, BulletinRecord, Party, ProtocolError, SyncResult};
pub use quantum::{Outcome, PairDensity, QubitDensity, QubitFrequency, SingleExcitationState, C64};
pub use sampler::{JointDistribution, MeasurementSchedule, RoundOutcome, SamplerError};
