//! Description of a simulated run and its validation.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::quantum::QubitFrequency;

/// Label tying a published record to the qubit frequency of its set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreqTag(Arc<str>);

impl FreqTag {
    pub fn new(tag: &str) -> Self {
        Self(Arc::from(tag))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Tag of the `idx`-th configured frequency: `w1`, `w2`.
    pub fn indexed(idx: usize) -> Self {
        Self::new(&format!("w{}", idx + 1))
    }
}

impl fmt::Display for FreqTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for FreqTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for FreqTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Self(Arc::from(s)))
    }
}

/// Half-open interval `[lo, hi)` of offsets considered when inverting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetWindow {
    pub lo: f64,
    pub hi: f64,
}

impl OffsetWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self, String> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(format!("window [{lo}, {hi}) is empty or not finite"));
        }
        Ok(Self { lo, hi })
    }

    /// `[0, 2π/ω)`, the default for a single frequency `ω`.
    pub fn one_period(omega: QubitFrequency) -> Self {
        Self {
            lo: 0.0,
            hi: std::f64::consts::TAU / omega.get(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}

/// Transport phase model: phases `φ_k` multiplying each excitation amplitude
/// by `e^{iφ_k}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PhaseNoise {
    #[default]
    None,
    /// The same per-qubit phases on every set.
    Fixed(Vec<f64>),
    /// Independent `N(0, σ²)` phase per qubit per set.
    Normal { sigma: f64 },
    /// Independent `U(−w, w)` phase per qubit per set.
    Uniform { half_width: f64 },
}

impl PhaseNoise {
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            PhaseNoise::None => PhaseNoise::None,
            PhaseNoise::Fixed(v) => PhaseNoise::Fixed(v.iter().map(|x| x * factor).collect()),
            PhaseNoise::Normal { sigma } => PhaseNoise::Normal {
                sigma: sigma * factor,
            },
            PhaseNoise::Uniform { half_width } => PhaseNoise::Uniform {
                half_width: half_width * factor,
            },
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, PhaseNoise::Normal { .. } | PhaseNoise::Uniform { .. })
    }
}

impl fmt::Display for PhaseNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseNoise::None => write!(f, "none"),
            PhaseNoise::Fixed(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "fixed:{}", parts.join(","))
            }
            PhaseNoise::Normal { sigma } => write!(f, "normal:{sigma}"),
            PhaseNoise::Uniform { half_width } => write!(f, "uniform:{half_width}"),
        }
    }
}

impl FromStr for PhaseNoise {
    type Err = String;

    /// `none`, `fixed:φ0,φ1,…`, `normal:σ` or `uniform:w`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(PhaseNoise::None);
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            format!("phase noise `{s}`: expected none, fixed:LIST, normal:SIGMA or uniform:W")
        })?;
        let num = |a: &str| {
            a.trim()
                .parse::<f64>()
                .map_err(|e| format!("phase noise `{s}`: {e}"))
        };
        match kind {
            "fixed" => Ok(PhaseNoise::Fixed(parse_list(arg)?)),
            "normal" => Ok(PhaseNoise::Normal { sigma: num(arg)? }),
            "uniform" => Ok(PhaseNoise::Uniform {
                half_width: num(arg)?,
            }),
            other => Err(format!("unknown phase noise kind `{other}`")),
        }
    }
}

impl Serialize for PhaseNoise {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhaseNoise {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Comma-separated list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub transport: PhaseNoise,
    /// Per-party rotation of the measurement basis about the energy axis.
    /// Empty means no misalignment.
    pub basis_misalignment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_parties: usize,
    pub n_sets: u64,
    /// One or two qubit frequencies.
    pub omegas: Vec<QubitFrequency>,
    /// Fraction of sets prepared at the second frequency.
    pub freq_split: f64,
    /// Standard time at each party's local zero; party `k` measures at
    /// standard time `true_offsets[k]`.
    pub true_offsets: Vec<f64>,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Inversion window; defaults to `[0, 2π/ω_min)`.
    pub window: Option<OffsetWindow>,
    /// Party whose clock is the standard.
    pub publisher: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_parties: 2,
            n_sets: 10_000,
            omegas: vec![QubitFrequency::new(1.0).expect("positive")],
            freq_split: 0.5,
            true_offsets: vec![0.0, 0.0],
            noise: NoiseSpec::default(),
            seed: 0,
            window: None,
            publisher: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldProblem {
    pub field: &'static str,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid configuration: {}", .problems.iter().map(|p| format!("{}: {}", p.field, p.message)).collect::<Vec<_>>().join("; "))]
pub struct ConfigError {
    pub problems: Vec<FieldProblem>,
}

impl ConfigError {
    pub fn single(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            problems: vec![FieldProblem {
                field,
                message: message.into(),
            }],
        }
    }
}

impl ExperimentConfig {
    /// W-state run with the given offsets and one frequency.
    pub fn simple(offsets: Vec<f64>, n_sets: u64, omega: f64, seed: u64) -> Self {
        Self {
            n_parties: offsets.len(),
            n_sets,
            omegas: vec![QubitFrequency::new(omega).expect("omega must be positive")],
            true_offsets: offsets,
            seed,
            ..Self::default()
        }
    }

    /// Collects every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        let mut bad =
            |field: &'static str, message: String| problems.push(FieldProblem { field, message });
        let n = self.n_parties;
        if n < 2 {
            bad("parties", format!("need at least 2 parties, got {n}"));
        }
        if self.omegas.is_empty() || self.omegas.len() > 2 {
            bad(
                "omega",
                format!("need one or two frequencies, got {}", self.omegas.len()),
            );
        }
        if self.omegas.len() == 2 && self.omegas[0] == self.omegas[1] {
            bad(
                "omega2",
                "second frequency must differ from the first".into(),
            );
        }
        if !(0.0..=1.0).contains(&self.freq_split) {
            bad(
                "freq-split",
                format!("must lie in [0, 1], got {}", self.freq_split),
            );
        }
        if self.true_offsets.len() != n {
            bad(
                "offsets",
                format!("expected {n} offsets, got {}", self.true_offsets.len()),
            );
        }
        if self.true_offsets.iter().any(|x| !x.is_finite()) {
            bad("offsets", "offsets must be finite".into());
        }
        match &self.noise.transport {
            PhaseNoise::Fixed(v) if v.len() != n => bad(
                "phase-noise",
                format!("fixed phase list needs {n} entries, got {}", v.len()),
            ),
            PhaseNoise::Fixed(v) if v.iter().any(|x| !x.is_finite()) => {
                bad("phase-noise", "phases must be finite".into())
            }
            PhaseNoise::Normal { sigma: w } | PhaseNoise::Uniform { half_width: w }
                if !(w.is_finite() && *w >= 0.0) =>
            {
                bad(
                    "phase-noise",
                    format!("spread must be finite and non-negative, got {w}"),
                )
            }
            _ => {}
        }
        let mis = &self.noise.basis_misalignment;
        if !mis.is_empty() && mis.len() != n {
            bad(
                "basis-misalign",
                format!("expected {n} angles, got {}", mis.len()),
            );
        }
        if mis.iter().any(|x| !x.is_finite()) {
            bad("basis-misalign", "angles must be finite".into());
        }
        if n >= 2 && self.publisher >= n {
            bad(
                "publisher",
                format!("publisher {} out of range for {n} parties", self.publisher),
            );
        }
        if let Some(w) = self.window {
            if OffsetWindow::new(w.lo, w.hi).is_err() {
                bad(
                    "window",
                    format!("[{}, {}) is empty or not finite", w.lo, w.hi),
                );
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    /// Frequency tag and value of set `set_id`. With two frequencies the
    /// sets are interleaved so that a fraction `freq_split` uses the second.
    pub fn frequency_of(&self, set_id: u64) -> (FreqTag, QubitFrequency) {
        let idx = if self.omegas.len() == 2 {
            let r = self.freq_split;
            let here = ((set_id + 1) as f64 * r).floor() - (set_id as f64 * r).floor();
            usize::from(here >= 1.0)
        } else {
            0
        };
        (FreqTag::indexed(idx), self.omegas[idx])
    }

    pub fn frequencies(&self) -> Vec<(FreqTag, QubitFrequency)> {
        self.omegas
            .iter()
            .enumerate()
            .map(|(k, w)| (FreqTag::indexed(k), *w))
            .collect()
    }

    pub fn effective_window(&self) -> OffsetWindow {
        self.window.unwrap_or_else(|| {
            let slowest = self
                .omegas
                .iter()
                .copied()
                .fold(f64::INFINITY, |a, w| a.min(w.get()));
            OffsetWindow {
                lo: 0.0,
                hi: std::f64::consts::TAU / slowest,
            }
        })
    }

    /// Offset of `receiver` relative to the publisher.
    pub fn true_delta(&self, receiver: usize) -> f64 {
        self.true_offsets[receiver] - self.true_offsets[self.publisher]
    }

    pub fn receivers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_parties).filter(move |&k| k != self.publisher)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_noise_parse_round_trip() {
        for s in ["none", "fixed:0,0.3,-1.5", "normal:0.25", "uniform:0.1"] {
            let p: PhaseNoise = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<PhaseNoise>().unwrap(), p);
        }
        assert!("gauss:1".parse::<PhaseNoise>().is_err());
        assert!("normal:x".parse::<PhaseNoise>().is_err());
        assert_eq!("".parse::<PhaseNoise>().unwrap(), PhaseNoise::None);
    }

    #[test]
    fn validation_lists_every_field() {
        let cfg = ExperimentConfig {
            n_parties: 3,
            omegas: vec![],
            freq_split: 2.0,
            true_offsets: vec![0.0, f64::NAN],
            publisher: 7,
            ..ExperimentConfig::default()
        };
        let err = cfg.validate().unwrap_err();
        let fields: Vec<&str> = err.problems.iter().map(|p| p.field).collect();
        for f in ["omega", "freq-split", "offsets", "publisher"] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
        assert!(ExperimentConfig::simple(vec![0.0, 0.7], 0, 1.0, 1)
            .validate()
            .is_ok());
    }

    #[test]
    fn frequency_split_interleaves() {
        let mut cfg = ExperimentConfig::simple(vec![0.0, 0.0], 100, 1.0, 0);
        cfg.omegas.push(QubitFrequency::new(0.7).unwrap());
        cfg.freq_split = 0.25;
        let second = (0..100)
            .filter(|&s| cfg.frequency_of(s).0.as_str() == "w2")
            .count();
        assert_eq!(second, 25);
        cfg.freq_split = 0.0;
        assert!((0..100).all(|s| cfg.frequency_of(s).0.as_str() == "w1"));
        cfg.freq_split = 1.0;
        assert!((0..100).all(|s| cfg.frequency_of(s).0.as_str() == "w2"));
    }

    #[test]
    fn default_window_uses_slowest_frequency() {
        let mut cfg = ExperimentConfig::simple(vec![0.0, 0.0], 1, 1.0, 0);
        cfg.omegas.push(QubitFrequency::new(0.5).unwrap());
        let w = cfg.effective_window();
        assert_eq!(w.lo, 0.0);
        assert!((w.hi - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
