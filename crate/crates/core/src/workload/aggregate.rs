use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Labels, LabeledQuery, QueryLogEntry};

/// Merges entries sharing a statement (compared after trimming trailing
/// whitespace). Numeric labels are averaged over present values, class labels
/// and the user key go by majority vote with seeded tie-breaking.
///
/// Output is ordered by statement bytes, which is also the order in which
/// tie-breaking draws from the generator.
pub fn dedup_and_aggregate(entries: &[QueryLogEntry], seed: u64) -> Vec<LabeledQuery> {
    let mut groups: BTreeMap<&str, Vec<&QueryLogEntry>> = BTreeMap::new();
    for e in entries {
        groups.entry(e.statement.trim_end()).or_default().push(e);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups
        .into_iter()
        .map(|(statement, group)| {
            let labels = Labels {
                error_class: majority(group.iter().filter_map(|e| e.error_class), &mut rng),
                cpu_time_s: mean(group.iter().filter_map(|e| e.cpu_time_s)),
                answer_rows: mean(group.iter().filter_map(|e| e.answer_rows.map(|r| r as f64))),
                session_class: majority(group.iter().filter_map(|e| e.session_class), &mut rng),
            };
            LabeledQuery {
                statement: statement.to_string(),
                labels,
                multiplicity: group.len(),
                profile: None,
                user_key: majority(group.iter().filter_map(|e| e.user_key.clone()), &mut rng),
                opt_cost_estimate: mean(group.iter().filter_map(|e| e.opt_cost_estimate)),
            }
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Modal value; ties are broken uniformly among the tied values in sorted
/// order. The generator is only consulted on a tie.
pub(crate) fn majority<T: Ord>(values: impl Iterator<Item = T>, rng: &mut impl Rng) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = *counts.values().max()?;
    let mut tied: Vec<T> = counts.into_iter().filter(|(_, c)| *c == best).map(|(v, _)| v).collect();
    let pick = if tied.len() == 1 { 0 } else { rng.gen_range(0..tied.len()) };
    Some(tied.swap_remove(pick))
}
