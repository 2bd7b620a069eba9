//! Plain-text run configuration: a TOML document describing the method,
//! feature source, scenario, buffer layer and evaluation settings. Kept
//! deliberately flat so experiment provenance stays human-diffable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AirError, Result};
use crate::scenarios::PhaseOrder;

/// Training method selected for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Re-weighted classifier with phase folding; class-disjoint streams only.
    #[serde(rename = "air-cil")]
    AirCil,
    /// Re-weighted classifier with per-class statistics; any stream.
    #[serde(rename = "air-gcil")]
    AirGcil,
    /// Unweighted analytic classifier.
    #[serde(rename = "baseline")]
    Baseline,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub num_classes: usize,
    pub raw_dim: usize,
    pub samples_per_class: usize,
    pub class_mean_radius: f64,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FeatureSourceSection {
    pub synthetic: Option<SyntheticSection>,
    pub file: Option<FileSection>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BufferSection {
    pub out_dim: usize,
    /// Fixed projection seed. Derived from the run seed when absent.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LongtailSection {
    pub num_phases: usize,
    pub classes_per_phase: usize,
    pub imbalance_ratio: f64,
    pub order: PhaseOrder,
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SiBlurrySection {
    pub num_tasks: usize,
    pub disjoint_ratio: f64,
    pub blurry_ratio: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub longtail: Option<LongtailSection>,
    pub si_blurry: Option<SiBlurrySection>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Samples between streaming evaluations (Si-blurry runs).
    #[serde(default = "default_interval")]
    pub interval_samples: usize,
    /// Per-class fraction of the pool held out for testing.
    #[serde(default = "default_split")]
    pub test_split_fraction: f64,
}

fn default_interval() -> usize {
    1000
}

fn default_split() -> f64 {
    0.2
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            interval_samples: default_interval(),
            test_split_fraction: default_split(),
        }
    }
}

/// A full experiment description, parsed from TOML.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub output_dir: Option<PathBuf>,
    pub features: FeatureSourceSection,
    pub buffer: Option<BufferSection>,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| AirError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| AirError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(AirError::Config(format!(
                "gamma: must be positive and finite, got {}",
                self.gamma
            )));
        }
        if self.seeds.is_empty() {
            return Err(AirError::Config("seeds: at least one seed required".into()));
        }

        match (&self.features.synthetic, &self.features.file) {
            (Some(_), Some(_)) => {
                return Err(AirError::Config(
                    "features: synthetic and file are mutually exclusive".into(),
                ));
            }
            (None, None) => {
                return Err(AirError::Config(
                    "features: one of features.synthetic or features.file required".into(),
                ));
            }
            _ => {}
        }
        if let Some(synth) = &self.features.synthetic {
            if synth.num_classes < 2 {
                return Err(AirError::Config(
                    "features.synthetic.num_classes: at least 2 classes required".into(),
                ));
            }
            if synth.raw_dim == 0 {
                return Err(AirError::Config(
                    "features.synthetic.raw_dim: must be positive".into(),
                ));
            }
            if synth.samples_per_class == 0 {
                return Err(AirError::Config(
                    "features.synthetic.samples_per_class: must be positive".into(),
                ));
            }
            if !(synth.class_mean_radius > 0.0 && synth.class_mean_radius.is_finite()) {
                return Err(AirError::Config(
                    "features.synthetic.class_mean_radius: must be positive".into(),
                ));
            }
            if !(synth.noise_sigma > 0.0 && synth.noise_sigma.is_finite()) {
                return Err(AirError::Config(
                    "features.synthetic.noise_sigma: must be positive".into(),
                ));
            }
        }

        if let Some(buffer) = &self.buffer {
            if buffer.out_dim == 0 {
                return Err(AirError::Config("buffer.out_dim: must be positive".into()));
            }
        }

        match (&self.scenario.longtail, &self.scenario.si_blurry) {
            (Some(_), Some(_)) => {
                return Err(AirError::Config(
                    "scenario: longtail and si_blurry are mutually exclusive".into(),
                ));
            }
            (None, None) => {
                return Err(AirError::Config(
                    "scenario: one of scenario.longtail or scenario.si_blurry required".into(),
                ));
            }
            _ => {}
        }
        if let Some(lt) = &self.scenario.longtail {
            if lt.num_phases == 0 || lt.classes_per_phase == 0 {
                return Err(AirError::Config(
                    "scenario.longtail: num_phases and classes_per_phase must be positive".into(),
                ));
            }
            if !(lt.imbalance_ratio > 0.0 && lt.imbalance_ratio <= 1.0) {
                return Err(AirError::Config(format!(
                    "scenario.longtail.imbalance_ratio: must lie in (0, 1], got {}",
                    lt.imbalance_ratio
                )));
            }
            if let Some(synth) = &self.features.synthetic {
                let declared = lt.num_phases * lt.classes_per_phase;
                if declared != synth.num_classes {
                    return Err(AirError::Config(format!(
                        "scenario.longtail: num_phases × classes_per_phase = {declared} \
                         but features.synthetic.num_classes = {}",
                        synth.num_classes
                    )));
                }
            }
        }
        if let Some(sb) = &self.scenario.si_blurry {
            if sb.num_tasks < 2 {
                return Err(AirError::Config(
                    "scenario.si_blurry.num_tasks: at least 2 tasks required".into(),
                ));
            }
            for (name, v) in [
                ("disjoint_ratio", sb.disjoint_ratio),
                ("blurry_ratio", sb.blurry_ratio),
            ] {
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(AirError::Config(format!(
                        "scenario.si_blurry.{name}: must lie in [0, 1], got {v}"
                    )));
                }
            }
            if self.method == Method::AirCil {
                return Err(AirError::Config(
                    "method: air-cil needs class-disjoint phase streams; use air-gcil for \
                     si_blurry scenarios"
                        .into(),
                ));
            }
        }

        if self.eval.interval_samples == 0 {
            return Err(AirError::Config(
                "eval.interval_samples: must be positive".into(),
            ));
        }
        if !(self.eval.test_split_fraction > 0.0 && self.eval.test_split_fraction < 1.0) {
            return Err(AirError::Config(format!(
                "eval.test_split_fraction: must lie in (0, 1), got {}",
                self.eval.test_split_fraction
            )));
        }
        Ok(())
    }
}
