use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::baseline::{fit_median, fit_mfreq, OptBaseline};
use super::bundle::{Learner, ModelBundle, FORMAT_VERSION};
use super::cnn::{CnnConfig, CnnModel};
use super::linear::LinearModel;
use super::loss::{output_loss, Target};
use super::lstm::{LstmConfig, LstmModel, DEFAULT_LAYERS};
use super::model::Model;
use super::optim::{clip_gradient_norm, AdaMaxState};
use super::transform::LabelTransform;
use crate::features::{fit_ngram_vocabulary, tfidf_vector, SparseVector, DEFAULT_CHAR_FEATURES, DEFAULT_WORD_FEATURES};
use crate::sqltext::{build_vocabulary, encode, tokenize, Granularity, Vocabulary};
use crate::workload::{DatasetSplit, Label, LabeledQuery, Task};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mfreq,
    Median,
    Opt,
    Ctfidf,
    Wtfidf,
    Ccnn,
    Wcnn,
    Clstm,
    Wlstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Mfreq,
        ModelKind::Median,
        ModelKind::Opt,
        ModelKind::Ctfidf,
        ModelKind::Wtfidf,
        ModelKind::Ccnn,
        ModelKind::Wcnn,
        ModelKind::Clstm,
        ModelKind::Wlstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mfreq => "mfreq",
            ModelKind::Median => "median",
            ModelKind::Opt => "opt",
            ModelKind::Ctfidf => "ctfidf",
            ModelKind::Wtfidf => "wtfidf",
            ModelKind::Ccnn => "ccnn",
            ModelKind::Wcnn => "wcnn",
            ModelKind::Clstm => "clstm",
            ModelKind::Wlstm => "wlstm",
        }
    }

    pub fn granularity(self) -> Option<Granularity> {
        match self {
            ModelKind::Ctfidf | ModelKind::Ccnn | ModelKind::Clstm => Some(Granularity::Char),
            ModelKind::Wtfidf | ModelKind::Wcnn | ModelKind::Wlstm => Some(Granularity::Word),
            _ => None,
        }
    }

    /// Trained by gradient descent rather than in closed form.
    pub fn is_iterative(self) -> bool {
        self.granularity().is_some()
    }

    pub fn supports(self, task: Task) -> bool {
        match self {
            ModelKind::Mfreq => task.is_classification(),
            ModelKind::Median => !task.is_classification(),
            ModelKind::Opt => task == Task::Cpu,
            _ => true,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model kind `{s}`")))
    }
}

/// Architecture and regularization knobs; those that do not apply to a
/// model kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub embed_dim: usize,
    /// CNN kernels per window size.
    pub kernels: usize,
    pub dropout: f64,
    pub hidden: usize,
    pub layers: usize,
    /// Zero disables clipping.
    pub clip_norm: f64,
    /// TFIDF feature count or token vocabulary cap; `None` picks the
    /// granularity default.
    pub vocab_size: Option<usize>,
    /// Token truncation length; `None` picks the granularity default.
    pub max_len: Option<usize>,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            embed_dim: 100,
            kernels: 100,
            dropout: 0.5,
            hidden: 150,
            layers: DEFAULT_LAYERS,
            clip_norm: 0.0,
            vocab_size: None,
            max_len: None,
        }
    }
}

impl Hyperparameters {
    pub fn vocab_size_for(&self, g: Granularity) -> usize {
        self.vocab_size.unwrap_or(match g {
            Granularity::Char => DEFAULT_CHAR_FEATURES,
            Granularity::Word => DEFAULT_WORD_FEATURES,
        })
    }

    pub fn max_len_for(&self, g: Granularity) -> usize {
        self.max_len.unwrap_or(match g {
            Granularity::Char => 2048,
            Granularity::Word => 512,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            learning_rate: 1e-3,
            max_epochs: 20,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidInput("batch size, patience and epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept; 0 for closed-form models.
    pub best_epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    /// Validation was empty and the training loss stood in for it.
    pub validation_fallback: bool,
}

/// Training rows of one task with targets in model space.
struct Examples<'a> {
    queries: Vec<&'a LabeledQuery>,
    targets: Vec<Target<f64>>,
}

fn collect<'a>(rows: &'a [LabeledQuery], task: Task, transform: Option<&LabelTransform>) -> Examples<'a> {
    let mut queries = Vec::new();
    let mut targets = Vec::new();
    for q in rows {
        let target = match task.label(q) {
            Some(Label::Class(c)) => Target::Class(c),
            Some(Label::Value(y)) => Target::Value(transform.expect("regression transform").apply_clamped(y)),
            None => continue,
        };
        queries.push(q);
        targets.push(target);
    }
    Examples { queries, targets }
}

fn mean_loss(outputs: impl Iterator<Item = Result<Vec<f64>>>, targets: &[Target<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (out, &t) in outputs.zip(targets) {
        total += output_loss(&out?, t).0;
    }
    Ok(total / targets.len().max(1) as f64)
}

/// Trains one model of `kind` for `task` on `data.train`, early-stopping on
/// `data.validation`.
pub fn train(kind: ModelKind, task: Task, data: &DatasetSplit, hyper: &Hyperparameters, config: &TrainConfig) -> Result<ModelBundle> {
    config.validate()?;
    if !kind.supports(task) {
        return Err(Error::InvalidInput(format!("model `{kind}` does not apply to task `{task}`")));
    }
    let transform = if task.is_classification() {
        None
    } else {
        let ys: Vec<f64> = data
            .train
            .iter()
            .filter_map(|q| match task.label(q) {
                Some(Label::Value(y)) => Some(y),
                _ => None,
            })
            .collect();
        if ys.is_empty() {
            return Err(Error::NoLabels(task.name().into()));
        }
        Some(LabelTransform::fit(&ys)?)
    };
    let train = collect(&data.train, task, transform.as_ref());
    if train.queries.is_empty() {
        return Err(Error::NoLabels(task.name().into()));
    }
    let mut val = collect(&data.validation, task, transform.as_ref());
    let fallback = val.queries.is_empty();
    if fallback {
        val = collect(&data.train, task, transform.as_ref());
    }

    let n_out = task.num_outputs();
    let (learner, mut log) = match kind {
        ModelKind::Mfreq => {
            let labels: Vec<usize> = train
                .targets
                .iter()
                .map(|t| match t {
                    Target::Class(c) => *c,
                    Target::Value(_) => unreachable!("classification task"),
                })
                .collect();
            let class = fit_mfreq(&labels, &task.class_names())?;
            (Learner::Mfreq { class }, TrainingLog::default())
        }
        ModelKind::Median => {
            let values: Vec<f64> = train.targets.iter().map(target_value).collect();
            (Learner::Median { value: fit_median(&values)? }, TrainingLog::default())
        }
        ModelKind::Opt => {
            let (costs, ys): (Vec<f64>, Vec<f64>) = train
                .queries
                .iter()
                .zip(&train.targets)
                .filter_map(|(q, t)| q.opt_cost_estimate.map(|c| (c, target_value(t))))
                .unzip();
            (Learner::Opt(OptBaseline::fit(&costs, &ys)?), TrainingLog::default())
        }
        ModelKind::Ctfidf | ModelKind::Wtfidf => {
            let g = kind.granularity().expect("tfidf granularity");
            let stmts: Vec<&str> = train.queries.iter().map(|q| q.statement.as_str()).collect();
            let features = fit_ngram_vocabulary(&stmts, g, hyper.vocab_size_for(g))?;
            let vectorize = |ex: &Examples| -> Vec<SparseVector<f64>> {
                ex.queries.iter().map(|q| tfidf_vector(&q.statement, &features)).collect()
            };
            let (xt, xv) = (vectorize(&train), vectorize(&val));
            let mut model = LinearModel::new(features.len(), n_out, config.seed);
            let log = fit(&mut model, &xt, &train.targets, &xv, &val.targets, hyper.clip_norm, config)?;
            (Learner::Linear { features, model }, log)
        }
        ModelKind::Ccnn | ModelKind::Wcnn | ModelKind::Clstm | ModelKind::Wlstm => {
            let g = kind.granularity().expect("neural granularity");
            let max_len = hyper.max_len_for(g);
            let tokens: Vec<Vec<String>> = train
                .queries
                .iter()
                .map(|q| tokenize(&q.statement, g))
                .collect::<Result<_>>()?;
            let vocabulary = build_vocabulary(tokens.iter().map(Vec::as_slice), g, hyper.vocab_size_for(g))?;
            let encode_all = |ex: &Examples| -> Result<Vec<Vec<u32>>> {
                ex.queries.iter().map(|q| Ok(encode(&q.statement, &vocabulary, max_len)?.ids)).collect()
            };
            let (xt, xv) = (encode_all(&train)?, encode_all(&val)?);
            if matches!(kind, ModelKind::Ccnn | ModelKind::Wcnn) {
                let cfg = CnnConfig {
                    vocab_size: vocabulary.len(),
                    embed_dim: hyper.embed_dim,
                    kernels: hyper.kernels,
                    dropout: hyper.dropout,
                    n_outputs: n_out,
                };
                let mut model = CnnModel::new(cfg, config.seed)?;
                let log = fit(&mut model, &xt, &train.targets, &xv, &val.targets, hyper.clip_norm, config)?;
                (Learner::Cnn { vocabulary, model, max_len }, log)
            } else {
                let cfg = LstmConfig {
                    vocab_size: vocabulary.len(),
                    embed_dim: hyper.embed_dim,
                    hidden: hyper.hidden,
                    layers: hyper.layers,
                    n_outputs: n_out,
                };
                let mut model = LstmModel::new(cfg, config.seed)?;
                let log = fit(&mut model, &xt, &train.targets, &xv, &val.targets, hyper.clip_norm, config)?;
                (Learner::Lstm { vocabulary, model, max_len }, log)
            }
        }
    };

    if !kind.is_iterative() {
        let train_out = train.queries.iter().map(|q| learner.raw_output(&q.statement, q.opt_cost_estimate, n_out));
        log.train_loss = mean_loss(train_out, &train.targets)?;
        let val_out = val.queries.iter().map(|q| learner.raw_output(&q.statement, q.opt_cost_estimate, n_out));
        log.validation_loss = mean_loss(val_out, &val.targets)?;
    }
    log.validation_fallback = fallback;

    Ok(ModelBundle {
        format_version: FORMAT_VERSION,
        kind,
        task,
        class_names: task.class_names().iter().map(|s| s.to_string()).collect(),
        label_transform: transform,
        hyperparameters: hyper.clone(),
        train_config: config.clone(),
        learner,
        log,
    })
}

fn target_value(t: &Target<f64>) -> f64 {
    match t {
        Target::Value(v) => *v,
        Target::Class(_) => unreachable!("regression task"),
    }
}

/// Mini-batch AdaMax with per-epoch seeded shuffling. Keeps the parameters of
/// the epoch with the strictly lowest validation loss.
pub fn fit<M, X>(
    model: &mut M,
    train_x: &[X],
    train_y: &[Target<f64>],
    val_x: &[X],
    val_y: &[Target<f64>],
    clip_norm: f64,
    config: &TrainConfig,
) -> Result<TrainingLog>
where
    M: Model<f64>,
    X: Borrow<M::Input>,
{
    config.validate()?;
    if train_x.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = AdaMaxState::new(model.params().len(), config.learning_rate);
    let mut grads = vec![0.0; model.params().len()];
    let mut order: Vec<usize> = (0..train_x.len()).collect();

    let mut log = TrainingLog::default();
    let mut best = model.params().values.clone();
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                train_loss += model.backward(train_x[i].borrow(), train_y[i], scale, &mut grads, Some(&mut rng))?;
            }
            model.params().check_finite(&grads)?;
            if clip_norm > 0.0 {
                clip_gradient_norm(&mut grads, clip_norm);
            }
            opt.update(&mut model.params_mut().values, &grads)?;
            model.after_update();
        }
        train_loss /= train_x.len() as f64;
        let validation_loss = mean_loss(val_x.iter().map(|x| model.forward(x.borrow())), val_y)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            validation_loss,
        });
        if validation_loss < best_loss {
            best_loss = validation_loss;
            best.copy_from_slice(&model.params().values);
            log.best_epoch = epoch;
            log.train_loss = train_loss;
            log.validation_loss = validation_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    if log.best_epoch == 0 {
        return Err(Error::InvalidInput("validation loss was never finite".into()));
    }
    model.params_mut().values.copy_from_slice(&best);
    Ok(log)
}

/// Token sequence of a statement under a model's vocabulary.
pub(crate) fn encode_for(vocabulary: &Vocabulary, statement: &str, max_len: usize) -> Result<Vec<u32>> {
    Ok(encode(statement, vocabulary, max_len)?.ids)
}
