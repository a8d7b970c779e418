use serde::{Deserialize, Serialize};

use super::bundle::ModelBundle;
use super::loss::softmax;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbability {
    pub class: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PredictionOutput {
    Class {
        label: String,
        index: usize,
        distribution: Vec<ClassProbability>,
    },
    Value {
        /// Original units.
        value: f64,
        transformed: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub task: String,
    pub model: String,
    #[serde(flatten)]
    pub output: PredictionOutput,
}

/// Predicts one statement. `opt_cost` is only read by the `opt` baseline.
pub fn predict(bundle: &ModelBundle, statement: &str, opt_cost: Option<f64>) -> Result<Prediction> {
    let raw = bundle
        .learner
        .raw_output(statement, opt_cost, bundle.task.num_outputs())?;
    let output = if bundle.task.is_classification() {
        if raw.len() != bundle.class_names.len() {
            return Err(Error::Bundle(format!(
                "model emits {} scores for {} classes",
                raw.len(),
                bundle.class_names.len()
            )));
        }
        let probs = softmax(&raw);
        // first maximum wins, matching class index order
        let mut index = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[index] {
                index = i;
            }
        }
        PredictionOutput::Class {
            label: bundle.class_names[index].clone(),
            index,
            distribution: bundle
                .class_names
                .iter()
                .zip(probs)
                .map(|(c, p)| ClassProbability {
                    class: c.clone(),
                    probability: p,
                })
                .collect(),
        }
    } else {
        let transform = bundle
            .label_transform
            .ok_or_else(|| Error::Bundle("regression bundle without label transform".into()))?;
        PredictionOutput::Value {
            value: transform.invert(raw[0]),
            transformed: raw[0],
        }
    };
    Ok(Prediction {
        task: bundle.task.name().into(),
        model: bundle.kind.name().into(),
        output,
    })
}
