use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sqlforecast_core::learn::bundle::ModelBundle;
use sqlforecast_core::learn::predict::{predict, Prediction};
use sqlforecast_core::sqltext::{parse_syntactic_profile, SyntacticProfile};

/// Loaded bundles, at most one per task.
#[derive(Debug)]
pub struct Predictor {
    bundles: Vec<(ModelBundle, ModelInfo)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub task: String,
    pub model: String,
    pub parameter_count: usize,
    pub bundle_hash: String,
    pub vocabulary_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub statement: String,
    #[serde(default)]
    pub opt_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub statement: String,
    /// Keyed by task name.
    pub predictions: BTreeMap<String, Prediction>,
    /// Tasks whose model could not score this statement.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub errors: BTreeMap<String, String>,
    pub profile: SyntacticProfile,
}

impl Predictor {
    pub fn load(paths: &[PathBuf]) -> Result<Self> {
        if paths.is_empty() || paths.len() > 4 {
            bail!("expected between 1 and 4 bundles, got {}", paths.len());
        }
        let mut bundles: Vec<(ModelBundle, ModelInfo)> = Vec::new();
        for p in paths {
            let b = ModelBundle::load(p).with_context(|| format!("loading bundle {}", p.display()))?;
            if let Some((_, other)) = bundles.iter().find(|(o, _)| o.task == b.task) {
                bail!("two bundles for task `{}` ({} and {})", b.task, other.model, b.kind);
            }
            let info = ModelInfo {
                task: b.task.name().into(),
                model: b.kind.name().into(),
                parameter_count: b.parameter_count(),
                bundle_hash: b.hash()?,
                vocabulary_digest: b.vocabulary_digest(),
            };
            bundles.push((b, info));
        }
        bundles.sort_by_key(|(b, _)| b.task);
        Ok(Predictor { bundles })
    }

    pub fn models(&self) -> Vec<ModelInfo> {
        self.bundles.iter().map(|(_, i)| i.clone()).collect()
    }

    pub fn predict(&self, req: &PredictRequest) -> Result<PredictResponse> {
        if req.statement.trim().is_empty() {
            bail!("statement is empty");
        }
        let mut predictions = BTreeMap::new();
        let mut errors = BTreeMap::new();
        for (b, info) in &self.bundles {
            match predict(b, &req.statement, req.opt_cost) {
                Ok(p) => {
                    predictions.insert(info.task.clone(), p);
                }
                Err(e) => {
                    errors.insert(info.task.clone(), e.to_string());
                }
            }
        }
        Ok(PredictResponse {
            statement: req.statement.clone(),
            predictions,
            errors,
            profile: parse_syntactic_profile(&req.statement),
        })
    }
}
