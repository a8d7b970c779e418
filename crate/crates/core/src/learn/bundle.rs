//! Trained model persistence: a JSON envelope next to a little-endian f64
//! parameter blob (`<name>.json` and `<name>.bin`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::baseline::OptBaseline;
use super::cnn::{CnnConfig, CnnModel};
use super::linear::LinearModel;
use super::lstm::{LstmConfig, LstmModel};
use super::model::Model;
use super::params::{ParamLayout, Params};
use super::train::{encode_for, Hyperparameters, ModelKind, TrainConfig, TrainingLog};
use super::transform::LabelTransform;
use crate::features::{tfidf_vector, NgramVocabulary};
use crate::sqltext::Vocabulary;
use crate::workload::Task;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Mfreq { class: usize },
    /// Constant in transformed space.
    Median { value: f64 },
    Opt(OptBaseline),
    Linear { features: NgramVocabulary, model: LinearModel<f64> },
    Cnn { vocabulary: Vocabulary, model: CnnModel<f64>, max_len: usize },
    Lstm { vocabulary: Vocabulary, model: LstmModel<f64>, max_len: usize },
}

impl Learner {
    /// Logits, or the single transformed-space regression output.
    pub fn raw_output(&self, statement: &str, opt_cost: Option<f64>, n_outputs: usize) -> Result<Vec<f64>> {
        match self {
            Learner::Mfreq { class } => {
                // a one-hot distribution expressed as logits
                let mut out = vec![f64::NEG_INFINITY; n_outputs];
                out[*class] = 0.0;
                Ok(out)
            }
            Learner::Median { value } => Ok(vec![*value]),
            Learner::Opt(b) => {
                let cost = opt_cost.ok_or_else(|| Error::InvalidInput("opt model needs an optimizer cost estimate".into()))?;
                Ok(vec![b.predict(cost)])
            }
            Learner::Linear { features, model } => model.forward(&tfidf_vector(statement, features)),
            Learner::Cnn { vocabulary, model, max_len } => model.forward(&encode_for(vocabulary, statement, *max_len)?),
            Learner::Lstm { vocabulary, model, max_len } => model.forward(&encode_for(vocabulary, statement, *max_len)?),
        }
    }

    fn params(&self) -> Option<&Params<f64>> {
        match self {
            Learner::Linear { model, .. } => Some(model.params()),
            Learner::Cnn { model, .. } => Some(model.params()),
            Learner::Lstm { model, .. } => Some(model.params()),
            _ => None,
        }
    }

    fn spec(&self) -> LearnerSpec {
        match self {
            Learner::Mfreq { class } => LearnerSpec::Mfreq { class: *class },
            Learner::Median { value } => LearnerSpec::Median { value: *value },
            Learner::Opt(b) => LearnerSpec::Opt(*b),
            Learner::Linear { features, model } => LearnerSpec::Linear {
                features: features.clone(),
                n_outputs: model.n_outputs(),
            },
            Learner::Cnn { vocabulary, model, max_len } => LearnerSpec::Cnn {
                vocabulary: vocabulary.clone(),
                config: model.config().clone(),
                max_len: *max_len,
            },
            Learner::Lstm { vocabulary, model, max_len } => LearnerSpec::Lstm {
                vocabulary: vocabulary.clone(),
                config: model.config().clone(),
                max_len: *max_len,
            },
        }
    }

    fn vocabulary_digest(&self) -> Option<String> {
        match self {
            Learner::Linear { features, .. } => Some(features.digest()),
            Learner::Cnn { vocabulary, .. } | Learner::Lstm { vocabulary, .. } => Some(vocabulary.digest()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LearnerSpec {
    Mfreq { class: usize },
    Median { value: f64 },
    Opt(OptBaseline),
    Linear { features: NgramVocabulary, n_outputs: usize },
    Cnn { vocabulary: Vocabulary, config: CnnConfig, max_len: usize },
    Lstm { vocabulary: Vocabulary, config: LstmConfig, max_len: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: ModelKind,
    task: Task,
    class_names: Vec<String>,
    label_transform: Option<LabelTransform>,
    hyperparameters: Hyperparameters,
    train_config: TrainConfig,
    vocabulary_digest: Option<String>,
    parameter_count: usize,
    manifest: ParamLayout,
    metrics: TrainingLog,
    learner: LearnerSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub format_version: u32,
    pub kind: ModelKind,
    pub task: Task,
    pub class_names: Vec<String>,
    pub label_transform: Option<LabelTransform>,
    pub hyperparameters: Hyperparameters,
    pub train_config: TrainConfig,
    pub learner: Learner,
    pub log: TrainingLog,
}

/// Paths of the two bundle files for a base path; any extension is replaced.
pub fn bundle_paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("json"), base.with_extension("bin"))
}

impl ModelBundle {
    /// Trainable parameter count; zero for closed-form baselines.
    pub fn parameter_count(&self) -> usize {
        self.learner.params().map_or(0, |p| p.len())
    }

    pub fn vocabulary_digest(&self) -> Option<String> {
        self.learner.vocabulary_digest()
    }

    /// Envelope JSON and parameter blob.
    pub fn to_bytes(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        let (manifest, blob) = match self.learner.params() {
            Some(p) => (p.layout.clone(), p.to_le_bytes()),
            None => (ParamLayout::new(), Vec::new()),
        };
        let env = Envelope {
            format_version: self.format_version,
            kind: self.kind,
            task: self.task,
            class_names: self.class_names.clone(),
            label_transform: self.label_transform,
            hyperparameters: self.hyperparameters.clone(),
            train_config: self.train_config.clone(),
            vocabulary_digest: self.vocabulary_digest(),
            parameter_count: self.parameter_count(),
            manifest,
            metrics: self.log.clone(),
            learner: self.learner.spec(),
        };
        let mut json = serde_json::to_vec_pretty(&env)?;
        json.push(b'\n');
        Ok((json, blob))
    }

    pub fn from_bytes(json: &[u8], blob: &[u8]) -> Result<Self> {
        let env: Envelope = serde_json::from_slice(json)?;
        if env.format_version != FORMAT_VERSION {
            return Err(Error::Bundle(format!("unsupported bundle format version {}", env.format_version)));
        }
        let params = || Params::<f64>::from_le_bytes(env.manifest.clone(), blob);
        let learner = match env.learner {
            LearnerSpec::Mfreq { class } => {
                if class >= env.class_names.len() {
                    return Err(Error::Bundle(format!("class index {class} out of range")));
                }
                Learner::Mfreq { class }
            }
            LearnerSpec::Median { value } => Learner::Median { value },
            LearnerSpec::Opt(b) => Learner::Opt(b),
            LearnerSpec::Linear { features, n_outputs } => {
                let model = LinearModel::from_params(params()?, features.len(), n_outputs)?;
                Learner::Linear { features, model }
            }
            LearnerSpec::Cnn { vocabulary, config, max_len } => {
                if config.vocab_size != vocabulary.len() {
                    return Err(Error::Bundle("CNN embedding rows do not match the vocabulary".into()));
                }
                Learner::Cnn {
                    model: CnnModel::from_params(config, params()?)?,
                    vocabulary,
                    max_len,
                }
            }
            LearnerSpec::Lstm { vocabulary, config, max_len } => {
                if config.vocab_size != vocabulary.len() {
                    return Err(Error::Bundle("LSTM embedding rows do not match the vocabulary".into()));
                }
                Learner::Lstm {
                    model: LstmModel::from_params(config, params()?)?,
                    vocabulary,
                    max_len,
                }
            }
        };
        if learner.params().is_none() && !blob.is_empty() {
            return Err(Error::Bundle("baseline bundle carries a parameter blob".into()));
        }
        if learner.vocabulary_digest() != env.vocabulary_digest {
            return Err(Error::Bundle("vocabulary digest does not match the stored vocabulary".into()));
        }
        if env.label_transform.is_some() == env.task.is_classification() {
            return Err(Error::Bundle(format!("label transform inconsistent with task `{}`", env.task)));
        }
        Ok(ModelBundle {
            format_version: env.format_version,
            kind: env.kind,
            task: env.task,
            class_names: env.class_names,
            label_transform: env.label_transform,
            hyperparameters: env.hyperparameters,
            train_config: env.train_config,
            learner,
            log: env.metrics,
        })
    }

    /// Writes both files and returns the bundle hash.
    pub fn save(&self, base: &Path) -> Result<String> {
        let (json_path, bin_path) = bundle_paths(base);
        let (json, blob) = self.to_bytes()?;
        std::fs::write(&json_path, &json).map_err(|e| Error::io(&json_path, e))?;
        std::fs::write(&bin_path, &blob).map_err(|e| Error::io(&bin_path, e))?;
        Ok(bundle_hash(&json, &blob))
    }

    pub fn load(base: &Path) -> Result<Self> {
        let (json_path, bin_path) = bundle_paths(base);
        let json = std::fs::read(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let blob = std::fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
        Self::from_bytes(&json, &blob)
    }

    pub fn hash(&self) -> Result<String> {
        let (json, blob) = self.to_bytes()?;
        Ok(bundle_hash(&json, &blob))
    }
}

/// Hex SHA-256 over the envelope followed by the blob.
pub fn bundle_hash(json: &[u8], blob: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(json);
    h.update(blob);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
