use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, FreqTag};
use crate::estimation::{estimate, predicted_std_error, Flag};
use crate::protocol::ProtocolError;
use crate::rng::derive_seed;

use super::simulate_tallies;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    /// Number of parties `n`.
    Parties,
    /// Number of sets `M`.
    Sets,
    /// Receiver offset relative to the publisher.
    Delta,
    /// Multiplier applied to the transport phase model.
    PhaseNoiseScale,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Parties => "n",
            SweepAxis::Sets => "M",
            SweepAxis::Delta => "delta",
            SweepAxis::PhaseNoiseScale => "phase_noise_scale",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" | "parties" => Ok(SweepAxis::Parties),
            "M" | "m" | "sets" => Ok(SweepAxis::Sets),
            "delta" => Ok(SweepAxis::Delta),
            "phase_noise_scale" | "phase-noise-scale" => Ok(SweepAxis::PhaseNoiseScale),
            other => Err(format!(
                "unknown sweep axis `{other}` (n, M, delta, phase_noise_scale)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
}

impl SweepSpec {
    pub const DEFAULT_TRIALS: usize = 200;

    pub fn new(axis: SweepAxis, values: Vec<f64>, trials: usize) -> Result<Self, ConfigError> {
        if values.is_empty() {
            return Err(ConfigError::single(
                "values",
                "sweep needs at least one value",
            ));
        }
        if trials == 0 {
            return Err(ConfigError::single("trials", "need at least one trial"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::single("values", "sweep values must be finite"));
        }
        Ok(Self {
            axis,
            values,
            trials,
        })
    }
}

/// Publisher and the receiver a sweep tracks (the lowest-numbered
/// non-publisher).
fn tracked_pair(base: &ExperimentConfig) -> (usize, usize) {
    let receiver = if base.publisher == 0 { 1 } else { 0 };
    (base.publisher, receiver)
}

fn config_at(
    base: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = base.clone();
    let (publisher, receiver) = tracked_pair(base);
    match axis {
        SweepAxis::Parties => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(ConfigError::single(
                    "values",
                    format!("party count {value} is not an integer ≥ 2"),
                ));
            }
            let n = value as usize;
            let fill = base.true_offsets.get(receiver).copied().unwrap_or(0.0);
            cfg.true_offsets = (0..n)
                .map(|k| base.true_offsets.get(k).copied().unwrap_or(fill))
                .collect();
            cfg.n_parties = n;
        }
        SweepAxis::Sets => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(ConfigError::single(
                    "values",
                    format!("set count {value} is not a non-negative integer"),
                ));
            }
            cfg.n_sets = value as u64;
        }
        SweepAxis::Delta => {
            if receiver < cfg.true_offsets.len() && publisher < cfg.true_offsets.len() {
                cfg.true_offsets[receiver] = cfg.true_offsets[publisher] + value;
            }
        }
        SweepAxis::PhaseNoiseScale => {
            cfg.noise.transport = base.noise.transport.scaled(value);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One trial at one sweep point, for one frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub n_parties: usize,
    pub n_sets: u64,
    pub freq: FreqTag,
    pub omega: f64,
    pub true_delta: f64,
    pub c_hat: Option<f64>,
    pub principal_delta: Option<f64>,
    /// `principal_delta` minus the true offset folded into `[0, π/ω]`.
    pub error: Option<f64>,
    /// Delta-method error at the true offset.
    pub predicted_sigma: Option<f64>,
    pub flags: Vec<Flag>,
}

/// Long-format table: one row per (value, trial, frequency), ordered by
/// value, then trial, then frequency tag. Trials run in parallel; each gets
/// its own seed derived from the base seed, the value index and the trial.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &ExperimentConfig,
) -> Result<Vec<SweepRow>, ProtocolError> {
    let configs: Vec<ExperimentConfig> = spec
        .values
        .iter()
        .map(|&v| config_at(base, spec.axis, v))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|vi| (0..spec.trials).map(move |t| (vi, t)))
        .collect();
    let (_, receiver) = tracked_pair(base);
    let chunks: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(vi, trial)| {
            let mut cfg = configs[vi].clone();
            cfg.seed = derive_seed(base.seed, ((vi as u64) << 32) | trial as u64);
            trial_rows(spec.axis, spec.values[vi], trial, &cfg, receiver)
        })
        .collect::<Result<_, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn trial_rows(
    axis: SweepAxis,
    value: f64,
    trial: usize,
    cfg: &ExperimentConfig,
    receiver: usize,
) -> Result<Vec<SweepRow>, ProtocolError> {
    let tallies = simulate_tallies(cfg, &[receiver])?.remove(0);
    let window = cfg.effective_window();
    let true_delta = cfg.true_delta(receiver);
    let n = cfg.n_parties;
    Ok(cfg
        .frequencies()
        .into_iter()
        .map(|(tag, omega)| {
            let w = omega.get();
            let folded = (w * true_delta).cos().clamp(-1.0, 1.0).acos() / w;
            let predicted = predicted_std_error(n, cfg.n_sets.max(1), omega, true_delta).finite();
            let base_row = SweepRow {
                axis,
                value,
                trial,
                seed: cfg.seed,
                n_parties: n,
                n_sets: cfg.n_sets,
                freq: tag.clone(),
                omega: w,
                true_delta,
                c_hat: None,
                principal_delta: None,
                error: None,
                predicted_sigma: predicted,
                flags: vec![Flag::InsufficientData],
            };
            match tallies.get(&tag).map(|c| estimate(c, n, omega, window)) {
                Some(Ok(rep)) => SweepRow {
                    c_hat: Some(rep.c_hat),
                    principal_delta: Some(rep.principal_delta),
                    error: Some(rep.principal_delta - folded),
                    flags: rep.flags,
                    ..base_row
                },
                _ => base_row,
            }
        })
        .collect())
}

/// Aggregate over trials at one sweep point and frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub value: f64,
    pub freq: FreqTag,
    pub trials: usize,
    pub rmse: f64,
    pub mean_error: f64,
    pub predicted_sigma: Option<f64>,
    pub near_singular: usize,
    pub clamped: usize,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut keys: Vec<(f64, FreqTag)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(v, f)| *v == r.value && *f == r.freq) {
            keys.push((r.value, r.freq.clone()));
        }
    }
    keys.into_iter()
        .map(|(value, freq)| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.value == value && r.freq == freq)
                .collect();
            let errs: Vec<f64> = group.iter().filter_map(|r| r.error).collect();
            let m = errs.len().max(1) as f64;
            SweepSummary {
                value,
                freq,
                trials: errs.len(),
                rmse: (errs.iter().map(|e| e * e).sum::<f64>() / m).sqrt(),
                mean_error: errs.iter().sum::<f64>() / m,
                predicted_sigma: group.first().and_then(|r| r.predicted_sigma),
                near_singular: group
                    .iter()
                    .filter(|r| r.flags.contains(&Flag::NearSingular))
                    .count(),
                clamped: group
                    .iter()
                    .filter(|r| r.flags.contains(&Flag::Clamped))
                    .count(),
            }
        })
        .collect()
}
