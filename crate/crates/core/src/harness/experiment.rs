use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, FreqTag, OffsetWindow};
use crate::estimation::{AgreementCounts, EstimationError, Flag, Resolution};
use crate::noise::MISALIGNMENT_MODEL;
use crate::protocol::{
    run_protocol, sample_set, schedule_for, synchronize, Bulletin, ProtocolError,
};
use crate::quantum::QubitFrequency;

/// One receiver's estimate at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub receiver: usize,
    pub freq: FreqTag,
    pub omega: f64,
    /// Known only for simulated runs.
    pub true_delta: Option<f64>,
    pub c_hat: Option<f64>,
    pub principal_delta: Option<f64>,
    pub delta_candidates: Vec<f64>,
    pub std_error: Option<f64>,
    pub n_sets_used: u64,
    pub flags: Vec<Flag>,
    /// Intersected magnitude when two frequencies resolved uniquely.
    pub resolved_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub n_parties: usize,
    pub n_sets: u64,
    pub seed: u64,
    pub publisher: usize,
    pub phase_noise: String,
    pub basis_misalignment: Vec<f64>,
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        let mut notes = Vec::new();
        if !config.noise.basis_misalignment.is_empty() {
            notes.push(MISALIGNMENT_MODEL.to_string());
        }
        notes.push(
            "offset estimates are magnitudes; the sign of the offset is not identifiable".into(),
        );
        Self {
            n_parties: config.n_parties,
            n_sets: config.n_sets,
            seed: config.seed,
            publisher: config.publisher,
            phase_noise: config.noise.transport.to_string(),
            basis_misalignment: config.noise.basis_misalignment.clone(),
            notes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub metadata: RunMetadata,
    pub rows: Vec<ExperimentRow>,
}

/// Full protocol run: sample, publish, then let every receiver synchronize
/// against the publisher's records.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ProtocolError> {
    run_experiment_with_bulletin(config).map(|(result, _)| result)
}

/// As [`run_experiment`], also handing back the bulletin the receivers read.
pub fn run_experiment_with_bulletin(
    config: &ExperimentConfig,
) -> Result<(ExperimentResult, Bulletin), ProtocolError> {
    let board = run_protocol(config)?;
    let receivers: Vec<usize> = config.receivers().collect();
    let mut rows = receiver_rows(
        &board,
        config.n_parties,
        config.publisher,
        &receivers,
        &config.frequencies(),
        config.effective_window(),
    )?;
    for row in &mut rows {
        row.true_delta = Some(config.true_delta(row.receiver));
    }
    Ok((
        ExperimentResult {
            metadata: RunMetadata::for_config(config),
            rows,
        },
        board,
    ))
}

/// Estimates for each receiver from the records on `board`. Receivers with
/// no usable sets get rows flagged `insufficient_data`. `true_delta` is left
/// empty.
pub fn receiver_rows(
    board: &Bulletin,
    n: usize,
    publisher: usize,
    receivers: &[usize],
    freqs: &[(FreqTag, QubitFrequency)],
    window: OffsetWindow,
) -> Result<Vec<ExperimentRow>, ProtocolError> {
    let published = board.fetch(publisher);
    let mut rows = Vec::new();
    for &receiver in receivers {
        let local = board.fetch(receiver);
        match synchronize(&local, &published, n, freqs, window) {
            Ok(sync) => {
                let resolved = match &sync.resolution {
                    Some(Ok(Resolution::Unique(x))) => Some(*x),
                    _ => None,
                };
                for (tag, rep) in &sync.reports {
                    let omega = freqs
                        .iter()
                        .find(|(t, _)| t == tag)
                        .map(|(_, w)| w.get())
                        .unwrap_or(f64::NAN);
                    rows.push(ExperimentRow {
                        receiver,
                        freq: tag.clone(),
                        omega,
                        true_delta: None,
                        c_hat: Some(rep.c_hat),
                        principal_delta: Some(rep.principal_delta),
                        delta_candidates: rep.delta_candidates.clone(),
                        std_error: rep.std_error,
                        n_sets_used: rep.n_sets_used,
                        flags: rep.flags.clone(),
                        resolved_delta: resolved,
                    });
                }
            }
            Err(ProtocolError::Estimation(EstimationError::InsufficientData)) => {
                for (tag, w) in freqs {
                    rows.push(ExperimentRow {
                        receiver,
                        freq: tag.clone(),
                        omega: w.get(),
                        true_delta: None,
                        c_hat: None,
                        principal_delta: None,
                        delta_candidates: Vec::new(),
                        std_error: None,
                        n_sets_used: 0,
                        flags: vec![Flag::InsufficientData],
                        resolved_delta: None,
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Agreement tallies between the publisher and each listed receiver,
/// computed straight from the sampled rounds without building a bulletin.
/// Uses the same per-set streams as [`run_protocol`], so the counts equal
/// those a bulletin-based run would produce.
pub fn simulate_tallies(
    config: &ExperimentConfig,
    receivers: &[usize],
) -> Result<Vec<BTreeMap<FreqTag, AgreementCounts>>, ProtocolError> {
    config.validate()?;
    let schedule = schedule_for(config)?;
    let tags: Vec<FreqTag> = config.frequencies().into_iter().map(|(t, _)| t).collect();
    // per receiver, per frequency: (agree, total)
    let zero = || vec![vec![(0u64, 0u64); tags.len()]; receivers.len()];
    let counts = (0..config.n_sets)
        .into_par_iter()
        .try_fold(zero, |mut acc, set| {
            let (tag, round) = sample_set(config, &schedule, set)?;
            let fi = tags.iter().position(|t| *t == tag).expect("configured tag");
            let p = round.get(config.publisher);
            for (ri, &r) in receivers.iter().enumerate() {
                let c = &mut acc[ri][fi];
                c.1 += 1;
                if round.get(r) == p {
                    c.0 += 1;
                }
            }
            Ok::<_, ProtocolError>(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    x.0 += y.0;
                    x.1 += y.1;
                }
            }
            Ok(a)
        })?;
    Ok(counts
        .into_iter()
        .map(|per_freq| {
            per_freq
                .into_iter()
                .zip(&tags)
                .filter(|((_, total), _)| *total > 0)
                .map(|((agree, total), tag)| {
                    (tag.clone(), AgreementCounts::new(agree, total, tag.clone()))
                })
                .collect()
        })
        .collect())
}
