use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// `y' = ln(y + epsilon - y_min)` with `y_min` taken from the training labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelTransform {
    pub y_min: f64,
    pub epsilon: f64,
}

impl LabelTransform {
    pub fn new(y_min: f64) -> Self {
        LabelTransform { y_min, epsilon: 1.0 }
    }

    pub fn fit(train_labels: &[f64]) -> Result<Self> {
        let y_min = train_labels.iter().copied().fold(f64::INFINITY, f64::min);
        if !y_min.is_finite() {
            return Err(Error::InvalidInput("label transform needs finite training labels".into()));
        }
        Ok(Self::new(y_min))
    }

    pub fn apply<T: Scalar>(&self, y: T) -> Result<T> {
        if y.as_f64() < self.y_min {
            return Err(Error::OutOfTransformDomain {
                value: y.as_f64(),
                min: self.y_min,
            });
        }
        Ok((y + T::of(self.epsilon - self.y_min)).ln())
    }

    /// Like [`apply`](Self::apply) but maps labels below `y_min` (possible
    /// outside the training split) to zero instead of failing.
    pub fn apply_clamped(&self, y: f64) -> f64 {
        (y.max(self.y_min) + self.epsilon - self.y_min).ln()
    }

    pub fn invert<T: Scalar>(&self, z: T) -> T {
        z.exp() - T::of(self.epsilon - self.y_min)
    }
}
