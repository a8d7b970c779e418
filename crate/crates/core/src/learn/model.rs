use rand::RngCore;

use super::loss::Target;
use super::params::Params;
use crate::{Result, Scalar};

/// A differentiable predictor over a flat parameter vector.
///
/// `rng` selects training mode (dropout active) when present; passing a
/// generator seeded identically makes `loss` and `backward` see the same mask.
pub trait Model<T: Scalar> {
    type Input: ?Sized;

    fn params(&self) -> &Params<T>;
    fn params_mut(&mut self) -> &mut Params<T>;
    fn n_outputs(&self) -> usize;

    /// Evaluation-mode outputs: logits, or a single transformed-space value.
    fn forward(&self, input: &Self::Input) -> Result<Vec<T>>;

    fn loss(&self, input: &Self::Input, target: Target<T>, rng: Option<&mut dyn RngCore>) -> Result<T>;

    /// Adds `scale * d loss / d params` into `grads` and returns the loss.
    fn backward(
        &self,
        input: &Self::Input,
        target: Target<T>,
        scale: T,
        grads: &mut [T],
        rng: Option<&mut dyn RngCore>,
    ) -> Result<T>;

    /// Restores invariants after an optimizer step.
    fn after_update(&mut self) {}

    /// Flat index ranges held fixed during training (their gradient is zero).
    fn frozen(&self) -> Vec<std::ops::Range<usize>> {
        Vec::new()
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `y += alpha * x`
pub(crate) fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}
