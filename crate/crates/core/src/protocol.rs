//! Parties, the public bulletin, and the publish/fetch/synchronize steps.
//!
//! Every party measures its qubit of each set at its own local zero, which
//! is standard time `true_offsets[k]`. Records carry set, party, outcome and
//! frequency tag only: nothing on the board says when anything happened.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, FreqTag, OffsetWindow};
use crate::estimation::{
    candidate_spread, estimate, tally_agreement, two_frequency_resolve, EstimateReport,
    EstimationError, Resolution,
};
use crate::noise::noisy_state;
use crate::quantum::{Outcome, QubitFrequency};
use crate::rng::substream;
use crate::sampler::{run_round, MeasurementSchedule, RoundOutcome, SamplerError};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error("conflicting record for set {set}, party {party}")]
    Conflict { set: u64, party: usize },
    #[error("no frequency configured for tag {0}")]
    UnknownFrequency(FreqTag),
    #[error("bulletin line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One participant. `clock_offset` is the standard time at the party's
/// local zero; the standard holder has offset 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Party {
    pub id: usize,
    pub clock_offset: f64,
}

/// One published measurement result. Field order fixes the file layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulletinRecord {
    pub set: u64,
    pub party: usize,
    pub outcome: Outcome,
    pub freq: FreqTag,
}

#[derive(Debug, Default)]
struct Board {
    records: Vec<BulletinRecord>,
    index: HashMap<(u64, usize), usize>,
}

/// Append-only public board, one record per `(set, party)`.
#[derive(Debug, Default)]
pub struct Bulletin {
    board: RwLock<Board>,
}

impl Bulletin {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `records`. Re-publishing an identical record is a no-op; a
    /// record that differs from what is already on the board for its key
    /// rejects the whole batch. Returns how many records were new.
    pub fn publish<I>(&self, records: I) -> Result<usize, ProtocolError>
    where
        I: IntoIterator<Item = BulletinRecord>,
    {
        let mut board = self.board.write().expect("bulletin lock poisoned");
        let mut fresh: Vec<BulletinRecord> = Vec::new();
        let mut fresh_index: HashMap<(u64, usize), usize> = HashMap::new();
        for rec in records {
            let key = (rec.set, rec.party);
            let existing = board
                .index
                .get(&key)
                .map(|&i| &board.records[i])
                .or_else(|| fresh_index.get(&key).map(|&i| &fresh[i]));
            match existing {
                Some(old) if *old == rec => {}
                Some(_) => {
                    return Err(ProtocolError::Conflict {
                        set: rec.set,
                        party: rec.party,
                    })
                }
                None => {
                    fresh_index.insert(key, fresh.len());
                    fresh.push(rec);
                }
            }
        }
        let added = fresh.len();
        for rec in fresh {
            let pos = board.records.len();
            board.index.insert((rec.set, rec.party), pos);
            board.records.push(rec);
        }
        Ok(added)
    }

    /// All of `party`'s records in set order.
    pub fn fetch(&self, party: usize) -> Vec<BulletinRecord> {
        let board = self.board.read().expect("bulletin lock poisoned");
        let mut out: Vec<BulletinRecord> = board
            .records
            .iter()
            .filter(|r| r.party == party)
            .cloned()
            .collect();
        out.sort_by_key(|r| r.set);
        out
    }

    pub fn len(&self) -> usize {
        self.board
            .read()
            .expect("bulletin lock poisoned")
            .records
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every record, sorted by `(set, party)`.
    pub fn sorted_records(&self) -> Vec<BulletinRecord> {
        let board = self.board.read().expect("bulletin lock poisoned");
        let mut out = board.records.clone();
        out.sort_by_key(|r| (r.set, r.party));
        out
    }

    /// Newline-delimited JSON, sorted by `(set, party)`.
    pub fn export<W: Write>(&self, mut w: W) -> Result<(), ProtocolError> {
        for rec in self.sorted_records() {
            serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads newline-delimited records, skipping blank lines.
    pub fn import<R: BufRead>(r: R) -> Result<Self, ProtocolError> {
        let board = Bulletin::new();
        board.import_into(r)?;
        Ok(board)
    }

    /// Publishes every record read from `r` onto this board.
    pub fn import_into<R: BufRead>(&self, r: R) -> Result<usize, ProtocolError> {
        let mut recs = Vec::new();
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: BulletinRecord =
                serde_json::from_str(&line).map_err(|source| ProtocolError::Parse {
                    line: k + 1,
                    source,
                })?;
            recs.push(rec);
        }
        self.publish(recs)
    }
}

/// The parties described by a config.
pub fn parties(config: &ExperimentConfig) -> Vec<Party> {
    config
        .true_offsets
        .iter()
        .enumerate()
        .map(|(id, &clock_offset)| Party { id, clock_offset })
        .collect()
}

/// Prepares and measures set `set_id`. All randomness comes from the set's
/// own substream, so results do not depend on which thread runs the set.
pub fn sample_set(
    config: &ExperimentConfig,
    schedule: &MeasurementSchedule,
    set_id: u64,
) -> Result<(FreqTag, RoundOutcome), SamplerError> {
    let mut rng = substream(config.seed, set_id);
    let state = noisy_state(config, &mut rng);
    let (tag, omega) = config.frequency_of(set_id);
    let round = run_round(&state, schedule, omega, &mut rng)?;
    Ok((tag, round))
}

/// Measurement schedule implied by the parties' clock offsets.
pub fn schedule_for(config: &ExperimentConfig) -> Result<MeasurementSchedule, SamplerError> {
    MeasurementSchedule::from_times(&config.true_offsets)
}

/// Runs every set and publishes every party's results.
pub fn run_protocol(config: &ExperimentConfig) -> Result<Bulletin, ProtocolError> {
    config.validate()?;
    let schedule = schedule_for(config)?;
    let rounds: Vec<(FreqTag, RoundOutcome)> = (0..config.n_sets)
        .into_par_iter()
        .map(|set| sample_set(config, &schedule, set))
        .collect::<Result<_, _>>()?;
    let board = Bulletin::new();
    let records = rounds
        .into_iter()
        .enumerate()
        .flat_map(|(set, (tag, round))| {
            round
                .as_slice()
                .iter()
                .enumerate()
                .map(|(party, &outcome)| BulletinRecord {
                    set: set as u64,
                    party,
                    outcome,
                    freq: tag.clone(),
                })
                .collect::<Vec<_>>()
        });
    board.publish(records)?;
    Ok(board)
}

/// Per-frequency estimates and, with two frequencies, the intersected
/// offset magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncResult {
    pub reports: BTreeMap<FreqTag, EstimateReport>,
    pub resolution: Option<Result<Resolution, EstimationError>>,
}

impl SyncResult {
    /// Report for the first frequency tag present.
    pub fn primary(&self) -> &EstimateReport {
        self.reports.values().next().expect("at least one report")
    }
}

/// Receiver-side estimate of its offset from the publisher.
///
/// `frequencies` maps tags to `ω`. When two tags have data, their candidate
/// sets are intersected with a tolerance of four combined standard errors.
pub fn synchronize(
    local: &[BulletinRecord],
    published: &[BulletinRecord],
    n: usize,
    frequencies: &[(FreqTag, QubitFrequency)],
    window: OffsetWindow,
) -> Result<SyncResult, ProtocolError> {
    let tallies = tally_agreement(published, local)?;
    let omega_of = |tag: &FreqTag| {
        frequencies
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, w)| *w)
            .ok_or_else(|| ProtocolError::UnknownFrequency(tag.clone()))
    };
    let mut reports = BTreeMap::new();
    for (tag, counts) in &tallies {
        reports.insert(tag.clone(), estimate(counts, n, omega_of(tag)?, window)?);
    }
    let resolution = if reports.len() == 2 {
        let mut it = reports.iter();
        let (t1, r1) = it.next().expect("two reports");
        let (t2, r2) = it.next().expect("two reports");
        let (w1, w2) = (omega_of(t1)?, omega_of(t2)?);
        let s1 = candidate_spread(r1, n, w1);
        let s2 = candidate_spread(r2, n, w2);
        let tol = 4.0 * (s1 * s1 + s2 * s2).sqrt();
        Some(two_frequency_resolve(r1, r2, w1, w2, window, tol))
    } else {
        None
    };
    Ok(SyncResult {
        reports,
        resolution,
    })
}
