use crate::Scalar;

/// Smallest probability fed to the logarithm in cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

/// Huber loss with unit threshold and its derivative in the residual.
pub fn huber<T: Scalar>(r: T) -> (T, T) {
    let one = T::one();
    let half = T::of(0.5);
    if r.abs() <= one {
        (half * r * r, r)
    } else {
        (r.abs() - half, r.signum())
    }
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-ln p_true`, with the probability floored at [`PROB_FLOOR`].
pub fn cross_entropy<T: Scalar>(probs: &[T], target: usize) -> T {
    -probs[target].max(T::of(PROB_FLOOR)).ln()
}

/// Gradient of softmax cross-entropy with respect to the logits.
pub fn cross_entropy_logit_grad<T: Scalar>(probs: &[T], target: usize) -> Vec<T> {
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if i == target { p - T::one() } else { p })
        .collect()
}

/// Training target of one example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<T> {
    Class(usize),
    /// Regression label in transformed space.
    Value(T),
}

/// Loss of raw model outputs against a target, with the output gradient.
/// Classification applies softmax first; regression reads `outputs[0]`.
pub fn output_loss<T: Scalar>(outputs: &[T], target: Target<T>) -> (T, Vec<T>) {
    match target {
        Target::Class(c) => {
            let probs = softmax(outputs);
            (cross_entropy(&probs, c), cross_entropy_logit_grad(&probs, c))
        }
        Target::Value(y) => {
            let (loss, g) = huber(outputs[0] - y);
            let mut grad = vec![T::zero(); outputs.len()];
            grad[0] = g;
            (loss, grad)
        }
    }
}
