//! Central finite-difference check of analytic gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::Target;
use super::model::Model;
use crate::Result;

/// Worst disagreement found by [`check_gradients`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_segment: String,
    pub worst_offset: usize,
    pub checked: usize,
    /// Frozen parameters, skipped.
    pub skipped: usize,
}

/// Relative error with an absolute floor, so that two near-zero gradients
/// compare as equal instead of dividing noise by noise.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-7)
}

/// Compares every parameter's gradient of the batch mean loss with a
/// central difference of step `h`. Training-mode randomness (dropout) is
/// replayed from `mask_seed` for each example so both sides see one mask.
pub fn check_gradients<M>(model: &mut M, batch: &[(&M::Input, Target<f64>)], h: f64, mask_seed: u64) -> Result<GradCheckReport>
where
    M: Model<f64>,
{
    let scale = 1.0 / batch.len() as f64;
    let rng_for = |i: usize| ChaCha8Rng::seed_from_u64(mask_seed.wrapping_add(i as u64));

    let mut analytic = vec![0.0; model.params().len()];
    for (i, (x, y)) in batch.iter().enumerate() {
        model.backward(x, *y, scale, &mut analytic, Some(&mut rng_for(i)))?;
    }

    let mean_loss = |m: &M| -> Result<f64> {
        let mut total = 0.0;
        for (i, (x, y)) in batch.iter().enumerate() {
            total += m.loss(x, *y, Some(&mut rng_for(i)))?;
        }
        Ok(total * scale)
    };

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_segment: String::new(),
        worst_offset: 0,
        checked: 0,
        skipped: 0,
    };
    let frozen = model.frozen();
    for (p, &a) in analytic.iter().enumerate() {
        if frozen.iter().any(|r| r.contains(&p)) {
            report.skipped += 1;
            continue;
        }
        let orig = model.params().values[p];
        model.params_mut().values[p] = orig + h;
        let up = mean_loss(model)?;
        model.params_mut().values[p] = orig - h;
        let down = mean_loss(model)?;
        model.params_mut().values[p] = orig;

        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(a, numeric);
        report.checked += 1;
        if err > report.max_relative_error {
            let seg = model.params().layout.locate(p).expect("index inside layout");
            report.max_relative_error = err;
            report.worst_segment = seg.name.clone();
            report.worst_offset = p - seg.offset;
        }
    }
    Ok(report)
}
