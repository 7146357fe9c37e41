//! Experiment configuration: defaults, JSON overlay and validation.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::spec::{FamilySpec, MeasureSpec, NoiseSpec, SamplerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Query model: `D` known, labels requested at sampled points.
    #[default]
    Query,
    /// Unknown `D`: unlabeled draws first, then a label budget.
    Active,
    /// k-sparse Fourier recovery by net search.
    Sparseft,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Query => "query",
            Mode::Active => "active",
            Mode::Sparseft => "sparseft",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub family: String,
    pub degree: usize,
    /// Reference measure (query mode) or true distribution (active mode).
    /// Defaults to `uniform-grid:1001`, or the table measure of a custom
    /// family.
    pub dist: Option<String>,
    pub sampler: String,
    pub epsilon: f64,
    pub noise: String,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Fixed label count for the i.i.d. samplers instead of auto-sizing.
    pub labels: Option<usize>,
    pub c0: f64,
    pub c1: f64,
    /// Fixed unlabeled budget in active mode.
    pub m0: Option<usize>,
    /// Sparsity in sparseft mode.
    pub k: usize,
    pub bandlimit: f64,
    pub net: f64,
    /// Sample count in sparseft mode.
    pub samples: Option<usize>,
    /// Add a wall-time column (breaks byte-identical reruns).
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Query,
            family: "legendre".into(),
            degree: 9,
            dist: None,
            sampler: "bss".into(),
            epsilon: 0.25,
            noise: "gauss:1".into(),
            trials: 100,
            seed: 0,
            out: None,
            labels: None,
            c0: activereg_core::sampler_bss::DEFAULT_C0,
            c1: activereg_core::sampler_iid::DEFAULT_C1,
            m0: None,
            k: 1,
            bandlimit: 10.0,
            net: 1e-2,
            samples: None,
            timing: false,
        }
    }
}

/// A config problem, located in the JSON source when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(field)) => write!(f, "config line {l}, field `{field}`: {}", self.message),
            (Some(l), None) => write!(f, "config line {l}: {}", self.message),
            (None, Some(field)) => write!(f, "field `{field}`: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn field_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: Some(field.into()), line: None, message: message.into() }
}

/// 1-based line of the first `"key":` in `text`.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Parsed, checked form of a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub family: FamilySpec,
    pub dist: Option<MeasureSpec>,
    pub sampler: SamplerSpec,
    pub noise: NoiseSpec,
}

impl ExperimentConfig {
    /// Fields present in `json` replace those of `self`.
    pub fn overlay_json(&self, json: &str) -> Result<ExperimentConfig, ConfigError> {
        let parsed: Value = serde_json::from_str(json).map_err(|e| ConfigError {
            field: None,
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        let Value::Object(overrides) = parsed else {
            return Err(ConfigError { field: None, line: Some(1), message: "config must be a JSON object".into() });
        };
        let mut merged = serde_json::to_value(self).expect("config serializes");
        let base = merged.as_object_mut().expect("config is an object");
        for (k, v) in overrides {
            base.insert(k, v);
        }
        serde_json::from_value(merged).map_err(|e| {
            let msg = e.to_string();
            // Unknown-field errors name the field in backticks.
            let field = msg.split('`').nth(1).map(str::to_string);
            ConfigError { line: field.as_deref().and_then(|f| locate_key(json, f)), field, message: msg }
        })
    }

    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let family: FamilySpec = self.family.parse().map_err(|e| field_error("family", format!("{e}")))?;
        let dist = self
            .dist
            .as_deref()
            .map(|d| d.parse::<MeasureSpec>())
            .transpose()
            .map_err(|e| field_error("dist", format!("{e}")))?;
        let sampler: SamplerSpec = self.sampler.parse().map_err(|e| field_error("sampler", format!("{e}")))?;
        let noise: NoiseSpec = self.noise.parse().map_err(|e| field_error("noise", format!("{e}")))?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(field_error("epsilon", format!("{} must lie in (0, 1)", self.epsilon)));
        }
        if self.trials == 0 {
            return Err(field_error("trials", "must be at least 1"));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(field_error("c0", "must be positive"));
        }
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(field_error("c1", "must be positive"));
        }
        if self.labels == Some(0) {
            return Err(field_error("labels", "must be at least 1"));
        }
        if self.labels.is_some() && matches!(sampler, SamplerSpec::Bss) {
            return Err(field_error("labels", "the bss sampler sizes itself from epsilon"));
        }
        match self.mode {
            Mode::Query | Mode::Active => {
                if self.mode == Mode::Active && matches!(sampler, SamplerSpec::Uniform | SamplerSpec::Iid(_)) {
                    return Err(field_error(
                        "sampler",
                        "active mode runs bss or leverage on the empirical distribution",
                    ));
                }
            }
            Mode::Sparseft => {
                if !(1..=2).contains(&self.k) {
                    return Err(field_error("k", "net search supports k = 1 or 2"));
                }
                if !(self.bandlimit > 0.0 && self.bandlimit.is_finite()) {
                    return Err(field_error("bandlimit", "must be positive"));
                }
                if !(self.net > 0.0 && self.net <= self.bandlimit) {
                    return Err(field_error("net", "spacing must lie in (0, bandlimit]"));
                }
                if !matches!(noise, NoiseSpec::Zero | NoiseSpec::Gauss(_)) {
                    return Err(field_error("noise", "sparseft mode supports zero or gauss noise"));
                }
                if self.samples == Some(0) {
                    return Err(field_error("samples", "must be at least 1"));
                }
            }
        }
        Ok(Validated { config: self.clone(), family, dist, sampler, noise })
    }

    /// Like [`validate`](Self::validate), with errors located in `json`.
    pub fn validate_against(&self, json: &str) -> Result<Validated, ConfigError> {
        self.validate().map_err(|mut e| {
            if let Some(f) = &e.field {
                e.line = locate_key(json, f);
            }
            e
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let v = ExperimentConfig::default().validate().unwrap();
        assert_eq!(v.sampler, SamplerSpec::Bss);
        assert_eq!(v.noise, NoiseSpec::Gauss(1.0));
    }

    #[test]
    fn overlay_replaces_present_fields_only() {
        let base = ExperimentConfig { seed: 9, ..ExperimentConfig::default() };
        let cfg = base.overlay_json(r#"{ "epsilon": 0.5, "sampler": "leverage" }"#).unwrap();
        assert_eq!(cfg.epsilon, 0.5);
        assert_eq!(cfg.sampler, "leverage");
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn errors_carry_lines() {
        let base = ExperimentConfig::default();
        let text = "{\n  \"trials\": 3,\n  \"epsilon\": 1.5\n}";
        let err = base.overlay_json(text).unwrap().validate_against(text).unwrap_err();
        assert_eq!(err.line, Some(3));
        assert_eq!(err.field.as_deref(), Some("epsilon"));

        let text = "{\n  \"trials\": 3,\n  \"sampel\": \"bss\"\n}";
        let err = base.overlay_json(text).unwrap_err();
        assert_eq!(err.line, Some(3), "{err}");

        let err = base.overlay_json("{\n  \"trials\": 3,\n}").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn mode_specific_checks() {
        let cfg = ExperimentConfig { mode: Mode::Sparseft, k: 3, ..ExperimentConfig::default() };
        assert_eq!(cfg.validate().unwrap_err().field.as_deref(), Some("k"));
        let cfg = ExperimentConfig { mode: Mode::Active, sampler: "uniform".into(), ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { labels: Some(10), ..ExperimentConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
