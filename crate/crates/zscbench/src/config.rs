//! Experiment configuration: one JSON document with `"version": 1`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zsc_core::{EszslParams, SeedSpec, SjeParams, SynthSpec, Trainer, Voting};

use crate::error::{BenchError, Result};

/// Only schema version understood by this build.
pub const CONFIG_VERSION: u32 = 1;

fn default_gamma() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    50
}
fn default_repeats() -> usize {
    4
}

/// Base trainer and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ModelKind {
    Eszsl {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_gamma")]
        lambda: f64,
    },
    Sje {
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_epochs")]
        epochs: usize,
    },
}

/// One configured model. `label` names it in reports and defaults to the
/// trainer name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub kind: ModelKind,
}

impl ModelConfig {
    pub fn label(&self) -> &str {
        match (&self.label, &self.kind) {
            (Some(l), _) => l,
            (None, ModelKind::Eszsl { .. }) => "eszsl",
            (None, ModelKind::Sje { .. }) => "sje",
        }
    }

    /// Trainer with its random stream set to `seed` (ignored by ESZSL).
    pub fn trainer(&self, seed: SeedSpec) -> Trainer {
        match self.kind {
            ModelKind::Eszsl { gamma, lambda } => Trainer::Eszsl(EszslParams { gamma, lambda }),
            ModelKind::Sje { eta, epochs } => Trainer::Sje(SjeParams { eta, epochs, seed }),
        }
    }

    /// JSON form stored next to persisted models.
    pub fn params_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.kind).expect("plain enum")
    }

    fn validate(&self) -> Result<()> {
        let checked = match self.trainer(SeedSpec::new(0, 0)) {
            Trainer::Eszsl(p) => p.validate(),
            Trainer::Sje(p) => p.validate(),
        };
        checked.map_err(|e| BenchError::Config(format!("model {}: {e}", self.label())))
    }
}

/// Accuracy metric used by the ensemble protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    #[default]
    PerClassAccuracy,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::PerClassAccuracy => "per_class_accuracy",
        }
    }
}

/// Voting scheme as spelled in the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VotingConfig {
    Hard,
    #[default]
    Soft,
}

impl From<VotingConfig> for Voting {
    fn from(v: VotingConfig) -> Self {
        match v {
            VotingConfig::Hard => Voting::Hard,
            VotingConfig::Soft => Voting::Soft,
        }
    }
}

/// Which experiment to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    /// Every model on `num_partitions` random class partitions.
    Variability { num_partitions: usize, test_class_count: usize },
    /// Bagged ensembles over an `(n, s)` grid against a single-model baseline.
    Ensemble {
        base_model: ModelConfig,
        test_class_count: usize,
        n_list: Vec<usize>,
        s_list: Vec<f64>,
        #[serde(default = "default_repeats")]
        repeats: usize,
        #[serde(default)]
        voting: VotingConfig,
        #[serde(default)]
        metric: Metric,
    },
}

/// Serializable mirror of [`SynthSpec`]; `seed` defaults to the experiment's
/// `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpecConfig {
    pub num_classes: usize,
    pub attr_dim: usize,
    pub feature_dim: usize,
    pub samples_per_class: usize,
    pub noise_sigma: f64,
    pub min_attr_separation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SynthSpecConfig {
    pub fn to_spec(&self, fallback_seed: u64) -> SynthSpec {
        SynthSpec {
            num_classes: self.num_classes,
            attr_dim: self.attr_dim,
            feature_dim: self.feature_dim,
            samples_per_class: self.samples_per_class,
            noise_sigma: self.noise_sigma,
            min_attr_separation: self.min_attr_separation,
            seed: self.seed.unwrap_or(fallback_seed),
        }
    }
}

/// A full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth_spec: Option<SynthSpecConfig>,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<Protocol>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// 0 picks the number of available cores.
    #[serde(default)]
    pub worker_count: usize,
    /// Also write every trained single model under `models/`.
    #[serde(default)]
    pub save_models: bool,
}

/// Where the dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource<'a> {
    Directory(&'a Path),
    Synthetic(SynthSpec),
}

impl ExperimentConfig {
    /// Parses and checks the common invariants. A relative `dataset_path` is
    /// resolved against the config file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.dataset_path, path.parent()) {
            if p.is_relative() {
                cfg.dataset_path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(BenchError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn data_source(&self) -> Result<DataSource<'_>> {
        match (&self.dataset_path, &self.synth_spec) {
            (Some(p), None) => Ok(DataSource::Directory(p)),
            (None, Some(s)) => Ok(DataSource::Synthetic(s.to_spec(self.base_seed))),
            _ => Err(BenchError::Config("exactly one of dataset_path and synth_spec must be set".into())),
        }
    }

    fn check_labels(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.models {
            m.validate()?;
            if !seen.insert(m.label()) {
                return Err(BenchError::Config(format!("duplicate model label {:?}", m.label())));
            }
        }
        Ok(())
    }

    /// Parameters of the variability protocol, validated.
    pub fn variability(&self) -> Result<(usize, usize)> {
        self.data_source()?;
        self.check_labels()?;
        match &self.protocol {
            Some(Protocol::Variability { num_partitions, test_class_count }) => {
                if *num_partitions < 2 {
                    return Err(BenchError::Config("num_partitions must be at least 2".into()));
                }
                if self.models.is_empty() {
                    return Err(BenchError::Config("variability protocol needs at least one model".into()));
                }
                Ok((*num_partitions, *test_class_count))
            }
            _ => Err(BenchError::Config("protocol.kind must be \"variability\"".into())),
        }
    }

    /// Parameters of the ensemble protocol, validated.
    pub fn ensemble(&self) -> Result<EnsembleSettings<'_>> {
        self.data_source()?;
        match &self.protocol {
            Some(Protocol::Ensemble { base_model, test_class_count, n_list, s_list, repeats, voting, metric }) => {
                base_model.validate()?;
                if n_list.is_empty() || s_list.is_empty() {
                    return Err(BenchError::Config("n_list and s_list must be nonempty".into()));
                }
                if n_list.contains(&0) {
                    return Err(BenchError::Config("ensemble sizes must be at least 1".into()));
                }
                if let Some(s) = s_list.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
                    return Err(BenchError::Config(format!("subset proportion {s} outside (0, 1]")));
                }
                if *repeats < 2 {
                    return Err(BenchError::Config("repeats must be at least 2".into()));
                }
                Ok(EnsembleSettings {
                    base_model,
                    test_class_count: *test_class_count,
                    n_list,
                    s_list,
                    repeats: *repeats,
                    voting: (*voting).into(),
                    metric: *metric,
                })
            }
            _ => Err(BenchError::Config("protocol.kind must be \"ensemble\"".into())),
        }
    }
}

/// Borrowed view of a validated ensemble protocol.
#[derive(Debug, Clone)]
pub struct EnsembleSettings<'a> {
    pub base_model: &'a ModelConfig,
    pub test_class_count: usize,
    pub n_list: &'a [usize],
    pub s_list: &'a [f64],
    pub repeats: usize,
    pub voting: Voting,
    pub metric: Metric,
}

/// Document accepted by `zscbench synth`: anything with a `synth_spec`,
/// including a full experiment config.
#[derive(Debug, Clone, Deserialize)]
pub struct SynthConfig {
    pub version: u32,
    pub synth_spec: SynthSpecConfig,
    #[serde(default)]
    pub base_seed: u64,
}

impl SynthConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| BenchError::Config(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(BenchError::Config(format!("unsupported config version {}", cfg.version)));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VARIABILITY: &str = r#"{
        "version": 1,
        "synth_spec": {"num_classes": 20, "attr_dim": 8, "feature_dim": 16, "samples_per_class": 50,
                       "noise_sigma": 0.3, "min_attr_separation": 0.5},
        "models": [{"name": "eszsl"}, {"name": "sje", "epochs": 5}],
        "protocol": {"kind": "variability", "num_partitions": 22, "test_class_count": 5},
        "base_seed": 7
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(VARIABILITY).unwrap();
        assert_eq!(cfg.models[0].kind, ModelKind::Eszsl { gamma: 1.0, lambda: 1.0 });
        assert_eq!(cfg.models[1].kind, ModelKind::Sje { eta: 0.1, epochs: 5 });
        assert_eq!(cfg.variability().unwrap(), (22, 5));
        match cfg.data_source().unwrap() {
            DataSource::Synthetic(s) => assert_eq!(s.seed, 7),
            other => panic!("{other:?}"),
        }
        assert!(cfg.ensemble().is_err());
    }

    #[test]
    fn ensemble_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"version": 1, "dataset_path": "data",
                "protocol": {"kind": "ensemble", "base_model": {"name": "eszsl", "gamma": 0.5},
                             "test_class_count": 5, "n_list": [90], "s_list": [0.3, 0.9]}}"#,
        )
        .unwrap();
        let e = cfg.ensemble().unwrap();
        assert_eq!(e.repeats, 4);
        assert_eq!(e.voting, Voting::Soft);
        assert_eq!(e.metric, Metric::PerClassAccuracy);
        assert_eq!(e.base_model.kind, ModelKind::Eszsl { gamma: 0.5, lambda: 1.0 });
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"version": 2, "dataset_path": "x"}"#,
            r#"{"version": 1, "dataset_path": "x", "typo": 1}"#,
            r#"{"version": 1}"#,
        ];
        for b in bad {
            let r = ExperimentConfig::from_json(b).and_then(|c| c.data_source().map(|_| ()));
            assert!(matches!(r, Err(BenchError::Config(_))), "{b}");
        }
        let both = VARIABILITY.replace("\"base_seed\": 7", "\"base_seed\": 7, \"dataset_path\": \"d\"");
        assert!(ExperimentConfig::from_json(&both).unwrap().variability().is_err());
        let one_partition = VARIABILITY.replace("\"num_partitions\": 22", "\"num_partitions\": 1");
        assert!(ExperimentConfig::from_json(&one_partition).unwrap().variability().is_err());
        let dup = VARIABILITY.replace("{\"name\": \"sje\", \"epochs\": 5}", "{\"name\": \"eszsl\", \"gamma\": 2}");
        assert!(ExperimentConfig::from_json(&dup).unwrap().variability().is_err());
        let relabeled = dup.replace("\"gamma\": 2", "\"gamma\": 2, \"label\": \"eszsl_g2\"");
        assert!(ExperimentConfig::from_json(&relabeled).unwrap().variability().is_ok());
        let neg = VARIABILITY.replace("{\"name\": \"eszsl\"}", "{\"name\": \"eszsl\", \"gamma\": -1}");
        assert!(ExperimentConfig::from_json(&neg).unwrap().variability().is_err());
    }
}
