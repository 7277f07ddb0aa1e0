//! Offset estimation from published and local outcomes.
//!
//! For the W state the publisher and a receiver agree with probability
//! `p = 1/2 + cos(ωΔ)/n`, whichever outcome the publisher saw. Agreement
//! is pooled over both publisher outcomes, giving `ĉ = n·(f − 1/2)` as the
//! estimate of `cos ωΔ`.
//!
//! Only `|Δ|` is identifiable: the cosine is even, and within `|ωΔ| < 2π`
//! both `θ` and `2π − θ` also match. Candidates are therefore reported as
//! magnitudes, and the sign is left to the operator.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{FreqTag, OffsetWindow};
use crate::protocol::BulletinRecord;
use crate::quantum::QubitFrequency;

/// `|sin ωΔ̂|` below this makes the delta-method error unbounded.
pub const SINGULAR_SIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("insufficient data: no sets in common")]
    InsufficientData,
    #[error("set {set} carries frequency tag {a} in one list and {b} in the other")]
    FrequencyMismatch { set: u64, a: FreqTag, b: FreqTag },
    #[error("two-frequency resolution needs distinct frequencies")]
    SameFrequency,
    #[error("candidate sets do not intersect within {tol}; check noise or party count")]
    Inconsistent { tol: f64 },
    #[error("invalid window: {0}")]
    Window(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// `n·(f − 1/2)` fell outside `[−1, 1]` and was clamped.
    Clamped,
    /// `|sin ωΔ̂|` is effectively zero; the error bar is unbounded.
    NearSingular,
    /// No usable sets.
    InsufficientData,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Clamped => "clamped",
            Flag::NearSingular => "near_singular",
            Flag::InsufficientData => "insufficient_data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementCounts {
    pub n_agree: u64,
    pub n_total: u64,
    pub freq: FreqTag,
}

impl AgreementCounts {
    pub fn new(n_agree: u64, n_total: u64, freq: FreqTag) -> Self {
        assert!(n_agree <= n_total, "agreements cannot exceed total");
        Self {
            n_agree,
            n_total,
            freq,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.n_agree as f64 / self.n_total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Estimate of `cos ωΔ`, clamped into `[−1, 1]`.
    pub c_hat: f64,
    /// Offset magnitudes consistent with `c_hat` inside the window.
    pub delta_candidates: Vec<f64>,
    /// `arccos(c_hat)/ω`, in `[0, π/ω]`.
    pub principal_delta: f64,
    /// Delta-method standard error; `None` when unbounded.
    pub std_error: Option<f64>,
    pub n_sets_used: u64,
    pub flags: Vec<Flag>,
}

impl EstimateReport {
    pub fn has_flag(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }
}

/// Counts matching outcomes over the sets both lists contain, separately per
/// frequency tag.
pub fn tally_agreement(
    published: &[BulletinRecord],
    local: &[BulletinRecord],
) -> Result<BTreeMap<FreqTag, AgreementCounts>, EstimationError> {
    let by_set: BTreeMap<u64, &BulletinRecord> = published.iter().map(|r| (r.set, r)).collect();
    let mut out: BTreeMap<FreqTag, AgreementCounts> = BTreeMap::new();
    for rec in local {
        let Some(pubr) = by_set.get(&rec.set) else {
            continue;
        };
        if pubr.freq != rec.freq {
            return Err(EstimationError::FrequencyMismatch {
                set: rec.set,
                a: pubr.freq.clone(),
                b: rec.freq.clone(),
            });
        }
        let entry = out
            .entry(rec.freq.clone())
            .or_insert_with(|| AgreementCounts::new(0, 0, rec.freq.clone()));
        entry.n_total += 1;
        if pubr.outcome == rec.outcome {
            entry.n_agree += 1;
        }
    }
    if out.is_empty() {
        return Err(EstimationError::InsufficientData);
    }
    Ok(out)
}

/// `ĉ = n·(f − 1/2)` clamped into `[−1, 1]`; the flag reports clamping.
pub fn estimate_cos(counts: &AgreementCounts, n: usize) -> Result<(f64, bool), EstimationError> {
    if counts.n_total == 0 {
        return Err(EstimationError::InsufficientData);
    }
    let raw = n as f64 * (counts.frequency() - 0.5);
    let clamped = raw.clamp(-1.0, 1.0);
    Ok((clamped, clamped != raw))
}

/// Principal offset `arccos(ĉ)/ω` and every magnitude `|±θ/ω + 2πk/ω|`
/// landing in `window`, ascending.
pub fn invert_to_offset(
    c_hat: f64,
    omega: QubitFrequency,
    window: OffsetWindow,
) -> (f64, Vec<f64>) {
    let w = omega.get();
    let principal = c_hat.clamp(-1.0, 1.0).acos() / w;
    let period = TAU / w;
    let k_lo = ((window.lo - principal) / period).floor() as i64 - 1;
    let k_hi = ((window.hi + principal) / period).ceil() as i64 + 1;
    let mut cands: Vec<f64> = (k_lo..=k_hi)
        .flat_map(|k| {
            let base = k as f64 * period;
            [base + principal, base - principal]
        })
        .filter(|x| window.contains(*x))
        .map(f64::abs)
        .collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    (principal, cands)
}

/// Delta-method error bar and whether it is unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedError {
    pub sigma: f64,
    pub near_singular: bool,
}

impl PredictedError {
    pub fn finite(&self) -> Option<f64> {
        (!self.near_singular).then_some(self.sigma)
    }
}

/// `σ_Δ = n·√(p(1−p)/M) / (ω·|sin ωΔ̂|)` with `p = 1/2 + cos(ωΔ̂)/n`.
pub fn predicted_std_error(
    n: usize,
    m: u64,
    omega: QubitFrequency,
    delta_hat: f64,
) -> PredictedError {
    let w = omega.get();
    let (s, c) = (w * delta_hat).sin_cos();
    let p = 0.5 + c / n as f64;
    let sigma_c = n as f64 * (p * (1.0 - p) / m as f64).sqrt();
    if s.abs() < SINGULAR_SIN {
        return PredictedError {
            sigma: f64::INFINITY,
            near_singular: true,
        };
    }
    PredictedError {
        sigma: sigma_c / (w * s.abs()),
        near_singular: false,
    }
}

/// Spread of an offset estimate that stays finite near `ωΔ = 0, π`, where
/// the cosine is flat and `δΔ ≈ √(2·δc)/ω`.
pub fn candidate_spread(report: &EstimateReport, n: usize, omega: QubitFrequency) -> f64 {
    let w = omega.get();
    let m = report.n_sets_used.max(1) as f64;
    let p = (0.5 + report.c_hat / n as f64).clamp(0.0, 1.0);
    let sigma_c = (n as f64 * (p * (1.0 - p) / m).sqrt()).max(n as f64 / (2.0 * m));
    let flat = (2.0 * sigma_c).sqrt() / w;
    report.std_error.map_or(flat, |s| s.min(flat))
}

/// Full report for one frequency's tally.
pub fn estimate(
    counts: &AgreementCounts,
    n: usize,
    omega: QubitFrequency,
    window: OffsetWindow,
) -> Result<EstimateReport, EstimationError> {
    let (c_hat, clamped) = estimate_cos(counts, n)?;
    let (principal, candidates) = invert_to_offset(c_hat, omega, window);
    let err = predicted_std_error(n, counts.n_total, omega, principal);
    let mut flags = Vec::new();
    if clamped {
        flags.push(Flag::Clamped);
    }
    if err.near_singular {
        flags.push(Flag::NearSingular);
    }
    Ok(EstimateReport {
        c_hat,
        delta_candidates: candidates,
        principal_delta: principal,
        std_error: err.finite(),
        n_sets_used: counts.n_total,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "delta")]
pub enum Resolution {
    Unique(f64),
    Ambiguous(Vec<f64>),
}

/// Intersects the candidate magnitudes implied by two frequencies.
pub fn two_frequency_resolve(
    report_1: &EstimateReport,
    report_2: &EstimateReport,
    omega_1: QubitFrequency,
    omega_2: QubitFrequency,
    window: OffsetWindow,
    tol: f64,
) -> Result<Resolution, EstimationError> {
    if omega_1 == omega_2 {
        return Err(EstimationError::SameFrequency);
    }
    let (_, c1) = invert_to_offset(report_1.c_hat, omega_1, window);
    let (_, c2) = invert_to_offset(report_2.c_hat, omega_2, window);
    let mut matches: Vec<f64> = c1
        .iter()
        .flat_map(|a| {
            c2.iter()
                .filter(move |b| (*a - **b).abs() <= tol)
                .map(move |b| 0.5 * (a + b))
        })
        .collect();
    matches.sort_by(f64::total_cmp);
    matches.dedup_by(|a, b| (*a - *b).abs() <= tol);
    match matches.len() {
        0 => Err(EstimationError::Inconsistent { tol }),
        1 => Ok(Resolution::Unique(matches[0])),
        _ => Ok(Resolution::Ambiguous(matches)),
    }
}
