use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// AdaMax: bias-corrected first moment over an infinity-norm scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaMaxState<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    pub step: u64,
    m: Vec<T>,
    u: Vec<T>,
}

impl<T: Scalar> AdaMaxState<T> {
    pub fn new(n_params: usize, learning_rate: T) -> Self {
        AdaMaxState {
            learning_rate,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
            step: 0,
            m: vec![T::zero(); n_params],
            u: vec![T::zero(); n_params],
        }
    }

    pub fn first_moment(&self) -> &[T] {
        &self.m
    }

    pub fn infinity_norm(&self) -> &[T] {
        &self.u
    }

    pub fn update(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer holds {} moments, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let one = T::one();
        let step_size = self.learning_rate / (one - self.beta1.powi(self.step as i32));
        for ((theta, &g), (m, u)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.u.iter_mut())) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *u = (self.beta2 * *u).max(g.abs());
            *theta -= step_size * *m / (*u + self.epsilon);
        }
        Ok(())
    }
}

/// Global L2 norm of a gradient vector.
pub fn global_norm<T: Scalar>(grads: &[T]) -> T {
    grads.iter().map(|&g| g * g).sum::<T>().sqrt()
}

/// Rescales `grads` in place to norm `clip_norm` when it is exceeded.
/// A non-positive `clip_norm` disables clipping. Returns the norm before clipping.
pub fn clip_gradient_norm<T: Scalar>(grads: &mut [T], clip_norm: T) -> T {
    let norm = global_norm(grads);
    if clip_norm > T::zero() && norm > clip_norm {
        let scale = clip_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}
