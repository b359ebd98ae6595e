use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::Method;

/// What a group does during the training ticks. An empty `interests` list
/// means the group idles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentSpec {
    pub label: String,
    #[serde(default)]
    pub interests: Vec<String>,
}

impl TreatmentSpec {
    pub fn new(label: impl Into<String>, interests: &[&str]) -> Self {
        TreatmentSpec { label: label.into(), interests: interests.iter().map(|s| s.to_string()).collect() }
    }

    pub fn idle(label: impl Into<String>) -> Self {
        TreatmentSpec { label: label.into(), interests: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experimental group size.
    pub n: usize,
    /// Control group size.
    pub m: usize,
    /// Optional; must equal `n + m` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_reloads")]
    pub reloads_per_unit: usize,
    #[serde(default = "default_ads")]
    pub ads_per_reload: usize,
    #[serde(default = "default_training")]
    pub training_ticks: usize,
    pub seed: u64,
    pub experimental: TreatmentSpec,
    pub control: TreatmentSpec,
    /// Keywords for the keyword statistics and the χ² table.
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_samples")]
    pub mc_samples: u64,
}

fn default_runs() -> usize {
    20
}
fn default_reloads() -> usize {
    10
}
fn default_ads() -> usize {
    5
}
fn default_training() -> usize {
    10
}
fn default_method() -> Method {
    Method::Partition
}
fn default_samples() -> u64 {
    crate::stats::DEFAULT_MC_SAMPLES
}

/// The car-interest keywords used throughout the examples.
pub const CAR_KEYWORDS: [&str; 7] = ["bmw", "audi", "car", "vehicle", "automobile", "cadillac", "limo"];

impl ExperimentConfig {
    /// Ten units, five trained on cars and five idle, ten reloads of five
    /// ads each.
    pub fn demo(seed: u64) -> Self {
        ExperimentConfig {
            n: 5,
            m: 5,
            sample_size: None,
            runs: default_runs(),
            reloads_per_unit: default_reloads(),
            ads_per_reload: default_ads(),
            training_ticks: default_training(),
            seed,
            experimental: TreatmentSpec::new("cars", &["cars"]),
            control: TreatmentSpec::idle("idle"),
            keywords: CAR_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            method: default_method(),
            mc_samples: default_samples(),
        }
    }

    pub fn sample_size(&self) -> usize {
        self.n + self.m
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.sample_size {
            if s != self.n + self.m {
                return Err(invalid(format!("sample_size {s} differs from n + m = {}", self.n + self.m)));
            }
        }
        if self.experimental.label.is_empty() || self.control.label.is_empty() {
            return Err(invalid("treatment labels must be nonempty"));
        }
        if self.reloads_per_unit == 0 {
            return Err(invalid("reloads_per_unit must be positive"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let c = ExperimentConfig::demo(3);
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap(), c);
        let minimal = "n = 2\nm = 2\nseed = 1\n[experimental]\nlabel = \"t\"\ninterests = [\"x\"]\n[control]\nlabel = \"c\"\n";
        let c = ExperimentConfig::from_toml_str(minimal).unwrap();
        assert_eq!((c.runs, c.reloads_per_unit, c.method), (20, 10, Method::Partition));
    }

    #[test]
    fn seed_is_mandatory_and_sizes_checked() {
        let no_seed = "n = 2\nm = 2\n[experimental]\nlabel = \"t\"\n[control]\nlabel = \"c\"\n";
        assert!(ExperimentConfig::from_toml_str(no_seed).is_err());
        let bad = "n = 2\nm = 2\nsample_size = 5\nseed = 0\n[experimental]\nlabel = \"t\"\n[control]\nlabel = \"c\"\n";
        assert!(ExperimentConfig::from_toml_str(bad).is_err());
    }
}
