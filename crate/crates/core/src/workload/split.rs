use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetSplit, LabeledQuery, Setting};
use crate::{Error, Result};

/// Train/validation/test shares; must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for Fractions {
    fn default() -> Self {
        Fractions {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl Fractions {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("split fractions {parts:?} must be in [0,1] and sum to 1")));
        }
        Ok(())
    }

    /// Part sizes for `n` items: floors for validation and test, remainder to train.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let val = (n as f64 * self.validation).floor() as usize;
        let test = (n as f64 * self.test).floor() as usize;
        [n - val - test, val, test]
    }
}

/// Partitions `dataset` for the given setting.
///
/// Homogeneous settings shuffle queries. The heterogeneous setting shuffles
/// users and assigns whole users to parts, moving on to the next part once
/// the current one is as close to its target size as a whole user allows.
pub fn split(dataset: Vec<LabeledQuery>, setting: Setting, fractions: Fractions, seed: u64) -> Result<DatasetSplit> {
    fractions.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [train, validation, test] = match setting {
        Setting::HomogeneousInstance | Setting::HomogeneousSchema => {
            if dataset.len() < 3 {
                return Err(Error::InvalidInput(format!("need at least 3 queries to split, got {}", dataset.len())));
            }
            let mut items = dataset;
            items.shuffle(&mut rng);
            let [n_train, n_val, _] = fractions.sizes(items.len());
            let test = items.split_off(n_train + n_val);
            let val = items.split_off(n_train);
            [items, val, test]
        }
        Setting::HeterogeneousSchema => split_by_user(dataset, fractions, &mut rng)?,
    };
    Ok(DatasetSplit {
        setting,
        seed,
        train,
        validation,
        test,
    })
}

fn split_by_user(dataset: Vec<LabeledQuery>, fractions: Fractions, rng: &mut ChaCha8Rng) -> Result<[Vec<LabeledQuery>; 3]> {
    let mut by_user: BTreeMap<String, Vec<LabeledQuery>> = BTreeMap::new();
    let n = dataset.len();
    for q in dataset {
        let user = q
            .user_key
            .clone()
            .ok_or_else(|| Error::InvalidInput(format!("query without user_key in by-user split: {:?}", q.statement)))?;
        by_user.entry(user).or_default().push(q);
    }
    if by_user.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 users to split, got {}", by_user.len())));
    }

    let mut users: Vec<Vec<LabeledQuery>> = by_user.into_values().collect();
    users.shuffle(rng);
    let targets = fractions.sizes(n);

    let mut parts: [Vec<LabeledQuery>; 3] = Default::default();
    let mut part = 0;
    let total_users = users.len();
    for (i, group) in users.into_iter().enumerate() {
        let users_left = total_users - i;
        if part < 2 && !parts[part].is_empty() {
            let have = parts[part].len() as f64;
            let target = targets[part] as f64;
            let overshoot = (have + group.len() as f64 - target).abs() > (target - have).abs();
            // later parts must still get a user each
            let starving = users_left <= 2 - part;
            if have >= target || overshoot || starving {
                part += 1;
            }
        }
        parts[part].extend(group);
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use std::collections::{HashMap, HashSet};

    use proptest::prelude::*;

    use super::*;
    use crate::workload::Labels;

    fn query(stmt: impl Into<String>, user: Option<&str>) -> LabeledQuery {
        LabeledQuery {
            statement: stmt.into(),
            labels: Labels::default(),
            multiplicity: 1,
            profile: None,
            user_key: user.map(str::to_string),
            opt_cost_estimate: None,
        }
    }

    #[test]
    fn floor_rule_sizes() {
        let qs: Vec<_> = (0..10).map(|i| query(format!("q{i}"), None)).collect();
        let s = split(qs, Setting::HomogeneousInstance, Fractions::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
    }

    #[test]
    fn workload_scale_sizes() {
        assert_eq!(Fractions::default().sizes(618_053), [494_443, 61_805, 61_805]);
    }

    #[test]
    fn by_user_never_separates_a_user() {
        let mut qs = Vec::new();
        for (user, n) in [("u5", 5), ("u3", 3), ("u2", 2)] {
            for i in 0..n {
                qs.push(query(format!("{user}-{i}"), Some(user)));
            }
        }
        for seed in 0..20 {
            let s = split(qs.clone(), Setting::HeterogeneousSchema, Fractions::default(), seed).unwrap();
            assert_eq!(s.len(), 10);
            let mut owner: HashMap<String, usize> = HashMap::new();
            for (p, part) in [&s.train, &s.validation, &s.test].into_iter().enumerate() {
                assert!(!part.is_empty());
                for q in part {
                    let prev = owner.insert(q.user_key.clone().unwrap(), p);
                    assert!(prev.is_none() || prev == Some(p));
                }
            }
        }
    }

    #[test]
    fn too_small_inputs() {
        let two: Vec<_> = (0..2).map(|i| query(format!("q{i}"), Some("u"))).collect();
        assert!(split(two, Setting::HomogeneousSchema, Fractions::default(), 0).is_err());
        let one_user: Vec<_> = (0..9).map(|i| query(format!("q{i}"), Some("u"))).collect();
        assert!(split(one_user, Setting::HeterogeneousSchema, Fractions::default(), 0).is_err());
        let anon: Vec<_> = (0..9).map(|i| query(format!("q{i}"), None)).collect();
        assert!(split(anon, Setting::HeterogeneousSchema, Fractions::default(), 0).is_err());
    }

    #[test]
    fn bad_fractions() {
        let qs: Vec<_> = (0..10).map(|i| query(format!("q{i}"), None)).collect();
        let f = Fractions {
            train: 0.5,
            validation: 0.1,
            test: 0.1,
        };
        assert!(split(qs, Setting::HomogeneousInstance, f, 0).is_err());
    }

    proptest! {
        #[test]
        fn random_split_partitions(n in 3usize..200, seed in any::<u64>()) {
            let qs: Vec<_> = (0..n).map(|i| query(format!("q{i}"), None)).collect();
            let s = split(qs, Setting::HomogeneousInstance, Fractions::default(), seed).unwrap();
            let all: HashSet<_> = s.all().map(|q| q.statement.clone()).collect();
            prop_assert_eq!(all.len(), n);
            prop_assert_eq!(s.len(), n);
        }

        #[test]
        fn by_user_sizes_near_targets(sizes in prop::collection::vec(1usize..=4, 30..80), seed in any::<u64>()) {
            let mut qs = Vec::new();
            for (u, &k) in sizes.iter().enumerate() {
                let user = format!("user{u}");
                for i in 0..k {
                    qs.push(query(format!("{user}-{i}"), Some(&user)));
                }
            }
            let n = qs.len();
            let s = split(qs, Setting::HeterogeneousSchema, Fractions::default(), seed).unwrap();
            let targets = Fractions::default().sizes(n);
            let max_group = *sizes.iter().max().unwrap() as i64;
            for (part, target) in [&s.train, &s.validation, &s.test].into_iter().zip(targets) {
                prop_assert!((part.len() as i64 - target as i64).abs() <= max_group);
                let users: HashSet<_> = part.iter().map(|q| q.user_key.clone()).collect();
                for other in [&s.train, &s.validation, &s.test] {
                    if !std::ptr::eq(other, part) {
                        prop_assert!(other.iter().all(|q| !users.contains(&q.user_key)));
                    }
                }
            }
        }
    }
}
