use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{output_loss, Target};
use super::model::Model;
use super::params::{ParamLayout, Params};
use crate::features::SparseVector;
use crate::{Error, Result, Scalar};

/// Affine map over TFIDF features: softmax head for classification, a single
/// Huber-trained output for regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    params: Params<T>,
    dim: usize,
    n_outputs: usize,
}

impl<T: Scalar> LinearModel<T> {
    pub fn layout(dim: usize, n_outputs: usize) -> ParamLayout {
        let mut l = ParamLayout::new();
        l.push("linear.weight", &[n_outputs, dim]);
        l.push("linear.bias", &[n_outputs]);
        l
    }

    pub fn new(dim: usize, n_outputs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearModel {
            params: Params::uniform(Self::layout(dim, n_outputs), 0.05, &mut rng),
            dim,
            n_outputs,
        }
    }

    pub fn from_params(params: Params<T>, dim: usize, n_outputs: usize) -> Result<Self> {
        if params.layout != Self::layout(dim, n_outputs) {
            return Err(Error::Shape("linear parameters do not match the feature space".into()));
        }
        Ok(LinearModel { params, dim, n_outputs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, x: &SparseVector<T>) -> Result<()> {
        if x.dim != self.dim {
            return Err(Error::Shape(format!("feature vector has dimension {}, model expects {}", x.dim, self.dim)));
        }
        Ok(())
    }
}

impl<T: Scalar> Model<T> for LinearModel<T> {
    type Input = SparseVector<T>;

    fn params(&self) -> &Params<T> {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    fn forward(&self, x: &SparseVector<T>) -> Result<Vec<T>> {
        self.check(x)?;
        let w = &self.params.values[..self.n_outputs * self.dim];
        let b = &self.params.values[self.n_outputs * self.dim..];
        Ok((0..self.n_outputs)
            .map(|c| b[c] + x.dot(&w[c * self.dim..(c + 1) * self.dim]))
            .collect())
    }

    fn loss(&self, x: &SparseVector<T>, target: Target<T>, _rng: Option<&mut dyn RngCore>) -> Result<T> {
        Ok(output_loss(&self.forward(x)?, target).0)
    }

    fn backward(
        &self,
        x: &SparseVector<T>,
        target: Target<T>,
        scale: T,
        grads: &mut [T],
        _rng: Option<&mut dyn RngCore>,
    ) -> Result<T> {
        let (loss, dout) = output_loss(&self.forward(x)?, target);
        let bias_at = self.n_outputs * self.dim;
        for (c, &d) in dout.iter().enumerate() {
            let d = d * scale;
            for (j, v) in x.iter() {
                grads[c * self.dim + j] += d * v;
            }
            grads[bias_at + c] += d;
        }
        Ok(loss)
    }
}
