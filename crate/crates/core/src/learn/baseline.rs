//! Constant and single-feature reference predictors.

use serde::{Deserialize, Serialize};

use crate::workload::stats::median_sorted;
use crate::{Error, Result};

/// Index of the modal class; ties go to the lexicographically smaller name.
pub fn fit_mfreq(labels: &[usize], class_names: &[&str]) -> Result<usize> {
    if labels.is_empty() {
        return Err(Error::NoLabels("mfreq".into()));
    }
    let mut counts = vec![0usize; class_names.len()];
    for &c in labels {
        counts[c] += 1;
    }
    let best = (0..counts.len())
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then_with(|| class_names[b].cmp(class_names[a])))
        .expect("at least one class");
    Ok(best)
}

/// Median of transformed training labels.
pub fn fit_median(transformed: &[f64]) -> Result<f64> {
    if transformed.is_empty() {
        return Err(Error::NoLabels("median".into()));
    }
    let mut v = transformed.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(median_sorted(&v))
}

/// Least-squares line from the optimizer's cost estimate to transformed CPU time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptBaseline {
    pub slope: f64,
    pub intercept: f64,
}

impl OptBaseline {
    pub fn fit(costs: &[f64], targets: &[f64]) -> Result<Self> {
        if costs.len() != targets.len() {
            return Err(Error::Shape(format!("{} costs for {} targets", costs.len(), targets.len())));
        }
        let distinct = costs.iter().any(|&c| c != costs[0]);
        if costs.len() < 2 || !distinct {
            return Err(Error::InvalidInput("opt baseline needs at least 2 distinct cost estimates".into()));
        }
        let n = costs.len() as f64;
        let mc = costs.iter().sum::<f64>() / n;
        let my = targets.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (&c, &y) in costs.iter().zip(targets) {
            sxy += (c - mc) * (y - my);
            sxx += (c - mc) * (c - mc);
        }
        let slope = sxy / sxx;
        Ok(OptBaseline {
            slope,
            intercept: my - slope * mc,
        })
    }

    pub fn predict(&self, cost: f64) -> f64 {
        self.slope * cost + self.intercept
    }
}
