//! Experiment configuration: one TOML file names the data, the encoder,
//! the training hyperparameters, and the report settings, and is copied
//! into every output directory so artifacts stay traceable.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{IngestConfig, Split};
use crate::encoder::EncoderSpec;
use crate::error::{Error, Result};
use crate::interpret::SegmenterMode;
use crate::train::{LstmConfig, TrainConfig};

/// Environment fallback for the pretrained encoder directory.
pub const ENCODER_DIR_ENV: &str = "STANCY_ENCODER_DIR";

/// Where encoder parameters come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderSource {
    /// Randomly initialized from the architecture in `encoder.spec`.
    #[default]
    Fresh,
    /// Imported from a published checkpoint directory.
    Pretrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSection {
    #[serde(default)]
    pub source: EncoderSource,
    /// Pretrained checkpoint directory; when unset, the
    /// `STANCY_ENCODER_DIR` environment variable fills in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Architecture for freshly initialized encoders.
    #[serde(default = "EncoderSpec::toy")]
    pub spec: EncoderSpec,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection {
            source: EncoderSource::Fresh,
            path: None,
            spec: EncoderSpec::toy(),
        }
    }
}

impl EncoderSection {
    /// The pretrained directory after applying the environment fallback.
    pub fn resolved_path(&self) -> Option<PathBuf> {
        self.path
            .clone()
            .or_else(|| env::var_os(ENCODER_DIR_ENV).map(PathBuf::from))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSection {
    /// Canonical pair file produced by ingestion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical: Option<PathBuf>,
    /// Raw dataset release directory, input to `data ingest`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_dir: Option<PathBuf>,
}

fn default_eval_split() -> Split {
    Split::Test
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSection {
    /// Which split evaluation and interpretation read.
    #[serde(default = "default_eval_split")]
    pub split: Split,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            split: default_eval_split(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmSection {
    /// Word-embedding table for the recurrent baseline; required when the
    /// training variant is `lstm_baseline`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(flatten)]
    pub dims: LstmConfig,
}

fn default_top_k() -> usize {
    25
}
fn default_min_occurrences() -> u64 {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretSection {
    #[serde(default)]
    pub mode: SegmenterMode,
    /// Phrases kept per class in the ranked lists.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Minimum corpus occurrences before a phrase is ranked.
    #[serde(default = "default_min_occurrences")]
    pub min_occurrences: u64,
}

impl Default for InterpretSection {
    fn default() -> Self {
        InterpretSection {
            mode: SegmenterMode::Unigram,
            top_k: default_top_k(),
            min_occurrences: default_min_occurrences(),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/stancy")
}

/// Everything one experiment needs. The top-level `seed` is the single
/// randomness knob: loading a file copies it over `train.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub lstm: LstmSection,
    #[serde(default)]
    pub interpret: InterpretSection,
    #[serde(default)]
    pub ingest: IngestConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            out_dir: default_out_dir(),
            data: DataSection::default(),
            encoder: EncoderSection::default(),
            train: TrainConfig::default(),
            eval: EvalSection::default(),
            lstm: LstmSection::default(),
            interpret: InterpretSection::default(),
            ingest: IngestConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parse a TOML file and align the training seed with the global one.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let mut config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })?;
        config.train.seed = config.seed;
        Ok(config)
    }

    /// Write the config as TOML, creating parent directories.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let text = toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(path, text)?;
        Ok(())
    }

    /// Check every section and report all violations together.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        collect(self.train.validate(), &mut problems);
        collect(self.encoder.spec.validate(), &mut problems);
        if self.train.seed != self.seed {
            problems.push(format!(
                "train.seed {} disagrees with the global seed {}",
                self.train.seed, self.seed
            ));
        }
        if self.encoder.source == EncoderSource::Pretrained
            && self.encoder.resolved_path().is_none()
        {
            problems.push(format!(
                "encoder.source is pretrained but neither encoder.path nor ${ENCODER_DIR_ENV} is set"
            ));
        }
        if self.train.variant == crate::model::ModelKind::LstmBaseline
            && self.lstm.embeddings.is_none()
        {
            problems.push(
                "train.variant is lstm_baseline but lstm.embeddings is unset".to_string(),
            );
        }
        if self.lstm.dims.hidden_size == 0 {
            problems.push("lstm.hidden_size must be at least 1".to_string());
        }
        if self.lstm.dims.dense_size == 0 {
            problems.push("lstm.dense_size must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(problems))
        }
    }
}

fn collect(result: Result<()>, problems: &mut Vec<String>) {
    if let Err(Error::ConfigValidation(mut p)) = result {
        problems.append(&mut p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn default_config_round_trips_through_toml() {
        let config = ExperimentConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experiment.toml");
        config.save(&path).unwrap();
        let reloaded = ExperimentConfig::load(&path).unwrap();
        assert_eq!(reloaded, config);
        config.validate().unwrap();
    }

    #[test]
    fn grid_and_paths_survive_a_round_trip() {
        let mut config = ExperimentConfig {
            seed: 17,
            ..ExperimentConfig::default()
        };
        config.train.grid = Some(crate::train::GridSpec::full_scale());
        config.data.canonical = Some(PathBuf::from("data/pairs.jsonl"));
        config.lstm.embeddings = Some(PathBuf::from("vectors.txt"));
        config.train.seed = 17;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experiment.toml");
        config.save(&path).unwrap();
        let reloaded = ExperimentConfig::load(&path).unwrap();
        assert_eq!(reloaded, config);
    }

    #[test]
    fn sparse_file_fills_defaults_and_aligns_the_seed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experiment.toml");
        fs::write(&path, "seed = 9\n\n[train]\nvariant = \"base\"\nseed = 1234\n").unwrap();
        let config = ExperimentConfig::load(&path).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.train.seed, 9, "the global seed is the single knob");
        assert_eq!(config.train.variant, ModelKind::Base);
        assert_eq!(config.train.batch_size, 32);
        assert_eq!(config.interpret.top_k, 25);
        assert_eq!(config.interpret.min_occurrences, 2);
        assert_eq!(config.eval.split, Split::Test);
        assert_eq!(config.encoder.spec, EncoderSpec::toy());
        assert_eq!(config.lstm.dims.hidden_size, 128);
        assert_eq!(config.lstm.dims.dense_size, 256);
    }

    #[test]
    fn validation_reports_problems_from_every_section_at_once() {
        let mut config = ExperimentConfig::default();
        config.train.learning_rate = -2.0;
        config.train.variant = ModelKind::LstmBaseline;
        config.encoder.spec.hidden_size = 0;
        config.lstm.dims.dense_size = 0;
        match config.validate() {
            Err(Error::ConfigValidation(problems)) => {
                assert!(problems.len() >= 4, "got only: {problems:?}");
                assert!(problems.iter().any(|p| p.contains("learning_rate")));
                assert!(problems.iter().any(|p| p.contains("hidden_size")));
                assert!(problems.iter().any(|p| p.contains("lstm.embeddings")));
                assert!(problems.iter().any(|p| p.contains("lstm.dense_size")));
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_the_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experiment.toml");
        fs::write(&path, "seed = 1\n[train]\nbatch_size = \"many\"\n").unwrap();
        match ExperimentConfig::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a parse error, got {other:?}"),
        }
        assert!(matches!(
            ExperimentConfig::load(Path::new("/nonexistent.toml")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn encoder_dir_env_var_fills_in_for_a_missing_path() {
        let mut section = EncoderSection {
            source: EncoderSource::Pretrained,
            path: Some(PathBuf::from("/explicit")),
            spec: EncoderSpec::toy(),
        };
        assert_eq!(section.resolved_path(), Some(PathBuf::from("/explicit")));
        section.path = None;
        env::set_var(ENCODER_DIR_ENV, "/from-env");
        assert_eq!(section.resolved_path(), Some(PathBuf::from("/from-env")));
        env::remove_var(ENCODER_DIR_ENV);
        assert_eq!(section.resolved_path(), None);
    }
}
