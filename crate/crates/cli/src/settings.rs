//! Layered settings: built-in defaults, then a flat JSON config file, then
//! command-line flags. File keys are the long flag names.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use qsync_core::config::parse_list;
use qsync_core::quantum::QubitFrequency;
use qsync_core::{ConfigError, ExperimentConfig, OffsetWindow, PhaseNoise, ProtocolError};

pub const KEYS: &[&str] = &[
    "parties",
    "sets",
    "omega",
    "omega2",
    "freq-split",
    "offsets",
    "seed",
    "phase-noise",
    "basis-misalign",
    "window",
    "publisher",
    "axis",
    "values",
    "trials",
    "bulletin",
    "receiver",
];

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or input files. Exit status 2.
    Config(String),
    /// Anything that went wrong after the configuration was accepted.
    Failed(String),
}

impl CliError {
    pub fn field(field: &str, message: impl fmt::Display) -> Self {
        CliError::Config(format!("{field}: {message}"))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "bad configuration: {m}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        let parts: Vec<String> = e
            .problems
            .iter()
            .map(|p| format!("{}: {}", p.field, p.message))
            .collect();
        CliError::Config(parts.join("; "))
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Config(c) => c.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn scalar_text(key: &str, v: &serde_json::Value) -> Result<Option<String>, CliError> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => None,
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let mut parts = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Value::Array(_) | Value::Object(_) => {
                        return Err(CliError::field(
                            key,
                            "nested lists and objects are not allowed",
                        ))
                    }
                    other => parts.extend(scalar_text(key, other)?),
                }
            }
            Some(parts.join(","))
        }
        Value::Object(_) => return Err(CliError::field(key, "expected a value, found an object")),
    })
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::field("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::field("config", e))?;
        let serde_json::Value::Object(map) = value else {
            return Err(CliError::field("config", "expected a JSON object"));
        };
        let mut values = BTreeMap::new();
        for (key, v) in &map {
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::field("config", format!("unknown key `{key}`")));
            }
            if let Some(text) = scalar_text(key, v)? {
                values.insert(key.clone(), text);
            }
        }
        Ok(Self { values })
    }

    /// Flag values win over anything already present.
    pub fn set(&mut self, key: &str, value: Option<String>) {
        debug_assert!(KEYS.contains(&key));
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|e| CliError::field(key, format!("`{s}`: {e}")))
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|s| parse_list(s).map_err(|e| CliError::field(key, e)))
            .transpose()
    }

    pub fn indices(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        self.get(key)
            .map(|s| {
                s.split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<usize>()
                            .map_err(|e| CliError::field(key, format!("`{p}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        let offsets = self.list("offsets")?;
        let n = self
            .parse::<usize>("parties")?
            .or(offsets.as_ref().map(Vec::len))
            .unwrap_or(2);
        let mut cfg = ExperimentConfig {
            n_parties: n,
            true_offsets: offsets.unwrap_or_else(|| vec![0.0; n]),
            ..ExperimentConfig::default()
        };
        if let Some(m) = self.parse::<u64>("sets")? {
            cfg.n_sets = m;
        }
        let freq = |key: &str, w: f64| QubitFrequency::new(w).map_err(|e| CliError::field(key, e));
        cfg.omegas = vec![freq("omega", self.parse::<f64>("omega")?.unwrap_or(1.0))?];
        if let Some(w2) = self.parse::<f64>("omega2")? {
            cfg.omegas.push(freq("omega2", w2)?);
        }
        if let Some(r) = self.parse::<f64>("freq-split")? {
            cfg.freq_split = r;
        }
        if let Some(seed) = self.parse::<u64>("seed")? {
            cfg.seed = seed;
        }
        if let Some(noise) = self.parse::<PhaseNoise>("phase-noise")? {
            cfg.noise.transport = noise;
        }
        if let Some(angles) = self.list("basis-misalign")? {
            cfg.noise.basis_misalignment = angles;
        }
        if let Some(w) = self.list("window")? {
            let [lo, hi] = w[..] else {
                return Err(CliError::field(
                    "window",
                    format!("expected LO,HI, got {} values", w.len()),
                ));
            };
            cfg.window = Some(OffsetWindow::new(lo, hi).map_err(|e| CliError::field("window", e))?);
        }
        if let Some(p) = self.parse::<usize>("publisher")? {
            cfg.publisher = p;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let mut s = Settings::from_json(
            r#"{"parties": 3, "offsets": [0, 0.5, 1.25], "seed": 9, "omega": 2}"#,
        )
        .unwrap();
        s.set("seed", Some("11".into()));
        s.set("omega", None);
        let cfg = s.experiment_config().unwrap();
        assert_eq!(cfg.n_parties, 3);
        assert_eq!(cfg.true_offsets, vec![0.0, 0.5, 1.25]);
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.omegas[0].get(), 2.0);
        assert_eq!(cfg.n_sets, ExperimentConfig::default().n_sets);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_configuration_errors() {
        assert!(matches!(
            Settings::from_json(r#"{"colour": 1}"#),
            Err(CliError::Config(_))
        ));
        let s = Settings::from_json(r#"{"parties": 1}"#).unwrap();
        let err = s.experiment_config().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("parties"));
        let s = Settings::from_json(r#"{"window": "1,0"}"#).unwrap();
        assert!(s
            .experiment_config()
            .unwrap_err()
            .to_string()
            .contains("window"));
    }

    #[test]
    fn party_count_follows_offsets() {
        let s = Settings::from_json(r#"{"offsets": "0,0.1,0.2,0.3"}"#).unwrap();
        let cfg = s.experiment_config().unwrap();
        assert_eq!(cfg.n_parties, 4);
    }
}
