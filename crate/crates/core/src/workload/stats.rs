use serde::{Deserialize, Serialize};

use super::{Label, LabeledQuery, Task};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShare {
    pub class: String,
    pub count: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

/// Distribution of one task's labels over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelStats {
    Classes { task: Task, labeled: usize, classes: Vec<ClassShare> },
    Numeric { task: Task, summary: NumericSummary },
}

pub fn label_stats<'a>(dataset: impl IntoIterator<Item = &'a LabeledQuery>, task: Task) -> Result<LabelStats> {
    let labels: Vec<Label> = dataset.into_iter().filter_map(|q| task.label(q)).collect();
    if labels.is_empty() {
        return Err(Error::NoLabels(task.name().into()));
    }
    if task.is_classification() {
        let names = task.class_names();
        let mut counts = vec![0usize; names.len()];
        for l in &labels {
            if let Label::Class(c) = l {
                counts[*c] += 1;
            }
        }
        let total = labels.len() as f64;
        let classes = names
            .iter()
            .zip(counts)
            .map(|(name, count)| ClassShare {
                class: name.to_string(),
                count,
                share: count as f64 / total,
            })
            .collect();
        Ok(LabelStats::Classes {
            task,
            labeled: labels.len(),
            classes,
        })
    } else {
        let values: Vec<f64> = labels
            .iter()
            .filter_map(|l| match l {
                Label::Value(v) => Some(*v),
                Label::Class(_) => None,
            })
            .collect();
        Ok(LabelStats::Numeric {
            task,
            summary: summarize(&values).expect("non-empty"),
        })
    }
}

pub(crate) fn summarize(values: &[f64]) -> Option<NumericSummary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(NumericSummary {
        count: sorted.len(),
        min: sorted[0],
        median: median_sorted(&sorted),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        max: sorted[sorted.len() - 1],
    })
}

/// Median of sorted values; even counts average the two middle values.
pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{ErrorClass, Labels};

    fn with_labels(labels: Labels) -> LabeledQuery {
        LabeledQuery {
            statement: String::new(),
            labels,
            multiplicity: 1,
            profile: None,
            user_key: None,
            opt_cost_estimate: None,
        }
    }

    #[test]
    fn class_shares() {
        let mut qs = Vec::new();
        for (class, n) in [(ErrorClass::Success, 97), (ErrorClass::NonSevere, 2), (ErrorClass::Severe, 1)] {
            for _ in 0..n {
                qs.push(with_labels(Labels {
                    error_class: Some(class),
                    ..Default::default()
                }));
            }
        }
        let LabelStats::Classes { classes, .. } = label_stats(&qs, Task::Error).unwrap() else {
            panic!("expected class stats");
        };
        let share = |name: &str| classes.iter().find(|c| c.class == name).unwrap().share;
        assert!((share("success") - 0.97).abs() < 1e-12);
        assert!((share("non_severe") - 0.02).abs() < 1e-12);
        assert!((share("severe") - 0.01).abs() < 1e-12);
        assert!((classes.iter().map(|c| c.share).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_median() {
        let qs: Vec<_> = [-1.0, 1.0, 1.0, 5.0]
            .into_iter()
            .map(|r| {
                with_labels(Labels {
                    answer_rows: Some(r),
                    ..Default::default()
                })
            })
            .collect();
        let LabelStats::Numeric { summary, .. } = label_stats(&qs, Task::Rows).unwrap() else {
            panic!("expected numeric stats");
        };
        assert_eq!(summary.median, 1.0);
        assert_eq!(summary.min, -1.0);
        assert_eq!(summary.max, 5.0);
        assert_eq!(summary.mean, 1.5);
    }

    #[test]
    fn unlabeled_task_is_an_error() {
        let qs = vec![with_labels(Labels::default())];
        assert!(matches!(label_stats(&qs, Task::Session), Err(Error::NoLabels(_))));
    }
}
