use serde::{Deserialize, Serialize};

use super::{SyntacticProfile, PROPERTY_NAMES};
use crate::{Error, Result, Scalar};

/// Pearson coefficients between the ten syntactic properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::from("property")];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Pearson correlation of two equally long columns. Returns zero when either
/// column is constant.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = T::of(x.len() as f64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == T::zero() || syy == T::zero() {
        return T::zero();
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one())
}

pub fn property_correlation_matrix(profiles: &[SyntacticProfile]) -> Result<CorrelationMatrix> {
    if profiles.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "correlation needs at least 2 profiles, got {}",
            profiles.len()
        )));
    }
    let columns: Vec<Vec<f64>> = (0..PROPERTY_NAMES.len())
        .map(|j| profiles.iter().map(|p| p.to_vector()[j]).collect())
        .collect();
    let k = columns.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in 0..i {
            let r = pearson(&columns[i], &columns[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: PROPERTY_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
    })
}
