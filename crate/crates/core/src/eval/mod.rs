//! Accuracy, per-class F, Huber/MSE, qerror percentiles and grouped breakdowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::learn::bundle::ModelBundle;
use crate::learn::loss::{cross_entropy, huber, softmax};
use crate::sqltext::PROPERTY_NAMES;
use crate::workload::{Label, LabeledQuery};
use crate::{Error, Result};

pub const DEFAULT_PERCENTILES: [f64; 6] = [50.0, 75.0, 80.0, 85.0, 90.0, 95.0];
/// Groups smaller than this are flagged in breakdowns.
pub const MIN_GROUP_SIZE: usize = 10;
/// Answer-size label of failed queries, excluded from qerror.
pub const ROWS_SENTINEL: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub accuracy: f64,
    /// Classes present in predictions or truths, in class index order.
    pub classes: Vec<ClassMetrics>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub mean_cross_entropy: Option<f64>,
}

impl ClassificationReport {
    pub fn f(&self, class: &str) -> Option<f64> {
        self.classes.iter().find(|c| c.class == class).map(|c| c.f)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// `distributions`, when given, supplies the predicted probabilities for the
/// mean cross-entropy.
pub fn classification_report(
    predicted: &[usize],
    truth: &[usize],
    class_names: &[String],
    distributions: Option<&[Vec<f64>]>,
) -> Result<ClassificationReport> {
    if predicted.len() != truth.len() || distributions.is_some_and(|d| d.len() != truth.len()) {
        return Err(Error::Shape("prediction and truth lengths differ".into()));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("classification report needs at least one row".into()));
    }
    let k = class_names.len();
    if let Some(bad) = predicted.iter().chain(truth).find(|&&c| c >= k) {
        return Err(Error::Shape(format!("class index {bad} outside {k} classes")));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let n = truth.len();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let mut classes = Vec::new();
    for c in 0..k {
        let support: usize = confusion[c].iter().sum();
        let predicted_c: usize = (0..k).map(|t| confusion[t][c]).sum();
        if support == 0 && predicted_c == 0 {
            continue;
        }
        let precision = ratio(confusion[c][c], predicted_c);
        let recall = ratio(confusion[c][c], support);
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        classes.push(ClassMetrics {
            class: class_names[c].clone(),
            precision,
            recall,
            f,
            support,
        });
    }
    let mean_cross_entropy =
        distributions.map(|d| d.iter().zip(truth).map(|(p, &t)| cross_entropy(p, t)).sum::<f64>() / n as f64);
    Ok(ClassificationReport {
        n,
        accuracy: ratio(correct, n),
        classes,
        confusion,
        mean_cross_entropy,
    })
}

/// `max(y/ŷ, ŷ/y)` after clamping both to at least 1.
pub fn qerror(y_true: f64, y_pred: f64) -> f64 {
    let (a, b) = (y_true.max(1.0), y_pred.max(1.0));
    (a / b).max(b / a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percentile {
    pub percentile: f64,
    pub value: f64,
}

/// Nearest-rank percentiles of `values`.
pub fn percentile_table(values: &[f64], percentiles: &[f64]) -> Result<Vec<Percentile>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("percentiles of an empty set".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    percentiles
        .iter()
        .map(|&p| {
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::InvalidInput(format!("percentile {p} outside [0, 100]")));
            }
            let rank = ((p / 100.0) * n as f64).ceil() as usize;
            Ok(Percentile {
                percentile: p,
                value: sorted[rank.clamp(1, n) - 1],
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    /// Mean Huber loss in transformed space.
    pub huber: f64,
    /// MSE in transformed space.
    pub mse: f64,
    pub qerror: Vec<Percentile>,
    /// Rows left out of qerror because their true value is the -1 sentinel.
    pub qerror_excluded: usize,
}

pub fn regression_report(
    predicted_t: &[f64],
    truth_t: &[f64],
    predicted_raw: &[f64],
    truth_raw: &[f64],
    percentiles: &[f64],
) -> Result<RegressionReport> {
    let n = truth_t.len();
    if predicted_t.len() != n || predicted_raw.len() != n || truth_raw.len() != n {
        return Err(Error::Shape("prediction and truth lengths differ".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("regression report needs at least one row".into()));
    }
    let mut hub = 0.0;
    let mut mse = 0.0;
    for (&p, &t) in predicted_t.iter().zip(truth_t) {
        hub += huber(p - t).0;
        mse += (p - t) * (p - t);
    }
    let q: Vec<f64> = predicted_raw
        .iter()
        .zip(truth_raw)
        .filter(|(_, &t)| t != ROWS_SENTINEL)
        .map(|(&p, &t)| qerror(t, p))
        .collect();
    Ok(RegressionReport {
        n,
        huber: hub / n as f64,
        mse: mse / n as f64,
        qerror: if q.is_empty() { Vec::new() } else { percentile_table(&q, percentiles)? },
        qerror_excluded: n - q.len(),
    })
}

/// One evaluated row in transformed space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Class { predicted: usize, truth: usize },
    Value { predicted: f64, truth: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Grouping {
    SessionClass,
    /// Equal-width buckets of `ln(1 + value)` of one syntactic property.
    Property { name: String, buckets: usize },
}

impl Grouping {
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "session_class" {
            return Ok(Grouping::SessionClass);
        }
        let (name, buckets) = match spec.split_once(':') {
            Some((n, b)) => (n, b.parse().map_err(|_| Error::InvalidInput(format!("bad bucket count in `{spec}`")))?),
            None => (spec, 5),
        };
        if !PROPERTY_NAMES.contains(&name) {
            return Err(Error::InvalidInput(format!("unknown grouping key `{name}`")));
        }
        if buckets == 0 {
            return Err(Error::InvalidInput("bucket count must be positive".into()));
        }
        Ok(Grouping::Property {
            name: name.into(),
            buckets,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Grouping::SessionClass => "session_class".into(),
            Grouping::Property { name, .. } => name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub size: usize,
    /// MSE for regression, accuracy for classification.
    pub metric: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub grouping: Grouping,
    pub metric: String,
    pub groups: Vec<GroupRow>,
}

const UNKNOWN_GROUP: &str = "(missing)";

/// Per-group metric. Rows missing the grouping attribute form a `(missing)` group.
pub fn breakdown(outcomes: &[Outcome], queries: &[&LabeledQuery], grouping: &Grouping) -> Result<Breakdown> {
    if outcomes.len() != queries.len() {
        return Err(Error::Shape("outcome and query counts differ".into()));
    }
    let keys: Vec<(usize, String)> = match grouping {
        Grouping::SessionClass => queries
            .iter()
            .map(|q| match q.labels.session_class {
                Some(c) => (c as usize, c.name().to_string()),
                None => (usize::MAX, UNKNOWN_GROUP.to_string()),
            })
            .collect(),
        Grouping::Property { name, buckets } => {
            if !PROPERTY_NAMES.contains(&name.as_str()) {
                return Err(Error::InvalidInput(format!("unknown grouping key `{name}`")));
            }
            let values: Vec<Option<f64>> = queries
                .iter()
                .map(|q| q.profile.as_ref().and_then(|p| p.get(name)).map(|v| v.ln_1p()))
                .collect();
            let known = values.iter().flatten();
            let lo = known.clone().copied().fold(f64::INFINITY, f64::min);
            let hi = known.copied().fold(f64::NEG_INFINITY, f64::max);
            let width = if hi > lo { (hi - lo) / *buckets as f64 } else { 1.0 };
            values
                .iter()
                .map(|v| match v {
                    None => (usize::MAX, UNKNOWN_GROUP.to_string()),
                    Some(v) => {
                        let b = (((v - lo) / width) as usize).min(buckets - 1);
                        let edge = |i: usize| (lo + i as f64 * width).exp_m1();
                        (b, format!("[{:.3}, {:.3}{}", edge(b), edge(b + 1), if b + 1 == *buckets { "]" } else { ")" }))
                    }
                })
                .collect()
        }
    };

    let mut groups: BTreeMap<usize, (String, Vec<Outcome>)> = BTreeMap::new();
    for (o, (k, label)) in outcomes.iter().zip(keys) {
        groups.entry(k).or_insert_with(|| (label, Vec::new())).1.push(*o);
    }
    let mut metric_name = "accuracy";
    let rows = groups
        .into_values()
        .map(|(group, rows)| {
            let size = rows.len();
            let metric = rows
                .iter()
                .map(|o| match *o {
                    Outcome::Class { predicted, truth } => f64::from(u8::from(predicted == truth)),
                    Outcome::Value { predicted, truth } => {
                        metric_name = "mse";
                        (predicted - truth) * (predicted - truth)
                    }
                })
                .sum::<f64>()
                / size as f64;
            GroupRow {
                group,
                size,
                metric,
                low_confidence: size < MIN_GROUP_SIZE,
            }
        })
        .collect();
    Ok(Breakdown {
        grouping: grouping.clone(),
        metric: metric_name.into(),
        groups: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub task: String,
    pub n: usize,
    pub parameter_count: usize,
    pub classification: Option<ClassificationReport>,
    pub regression: Option<RegressionReport>,
    pub breakdowns: Vec<Breakdown>,
}

/// Scores a bundle on the labeled rows of `queries` for the bundle's task.
pub fn evaluate(bundle: &ModelBundle, queries: &[LabeledQuery], percentiles: &[f64], groupings: &[Grouping]) -> Result<EvaluationReport> {
    let task = bundle.task;
    let n_out = task.num_outputs();
    let mut used: Vec<&LabeledQuery> = Vec::new();
    let mut outcomes = Vec::new();
    let mut dists = Vec::new();
    let (mut pt, mut tt, mut pr, mut tr) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for q in queries {
        let Some(label) = task.label(q) else { continue };
        if bundle.kind == crate::learn::train::ModelKind::Opt && q.opt_cost_estimate.is_none() {
            continue;
        }
        let raw = bundle.learner.raw_output(&q.statement, q.opt_cost_estimate, n_out)?;
        match label {
            Label::Class(truth) => {
                let probs = softmax(&raw);
                let mut predicted = 0;
                for (i, &p) in probs.iter().enumerate() {
                    if p > probs[predicted] {
                        predicted = i;
                    }
                }
                outcomes.push(Outcome::Class { predicted, truth });
                dists.push(probs);
            }
            Label::Value(y) => {
                let transform = bundle
                    .label_transform
                    .ok_or_else(|| Error::Bundle("regression bundle without label transform".into()))?;
                let truth = transform.apply_clamped(y);
                outcomes.push(Outcome::Value { predicted: raw[0], truth });
                pt.push(raw[0]);
                tt.push(truth);
                pr.push(transform.invert(raw[0]));
                tr.push(y);
            }
        }
        used.push(q);
    }
    if outcomes.is_empty() {
        return Err(Error::NoLabels(task.name().into()));
    }
    let (classification, regression) = if task.is_classification() {
        let (p, t): (Vec<usize>, Vec<usize>) = outcomes
            .iter()
            .map(|o| match *o {
                Outcome::Class { predicted, truth } => (predicted, truth),
                Outcome::Value { .. } => unreachable!("classification task"),
            })
            .unzip();
        (Some(classification_report(&p, &t, &bundle.class_names, Some(&dists))?), None)
    } else {
        (None, Some(regression_report(&pt, &tt, &pr, &tr, percentiles)?))
    };
    let breakdowns = groupings
        .iter()
        .map(|g| breakdown(&outcomes, &used, g))
        .collect::<Result<_>>()?;
    Ok(EvaluationReport {
        model: bundle.kind.name().into(),
        task: task.name().into(),
        n: outcomes.len(),
        parameter_count: bundle.parameter_count(),
        classification,
        regression,
        breakdowns,
    })
}

impl EvaluationReport {
    /// Flat summary row: model, v-free counts, loss and per-class F or qerror columns.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string(), "task".into(), "n".into(), "p".into()];
        let mut row = vec![self.model.clone(), self.task.clone(), self.n.to_string(), self.parameter_count.to_string()];
        if let Some(c) = &self.classification {
            header.extend(["loss".into(), "accuracy".into()]);
            row.push(c.mean_cross_entropy.unwrap_or(f64::NAN).to_string());
            row.push(c.accuracy.to_string());
            for m in &c.classes {
                header.push(format!("f_{}", m.class));
                row.push(m.f.to_string());
            }
        }
        if let Some(r) = &self.regression {
            header.extend(["huber".into(), "mse".into(), "qerror_excluded".into()]);
            row.extend([r.huber.to_string(), r.mse.to_string(), r.qerror_excluded.to_string()]);
            for p in &r.qerror {
                header.push(format!("q{}", p.percentile));
                row.push(p.value.to_string());
            }
        }
        w.write_record(&header)?;
        w.write_record(&row)?;
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}
