mod common;

use common::query;
use proptest::prelude::*;
use sqlforecast_core::eval::{
    breakdown, classification_report, percentile_table, qerror, regression_report, Grouping, Outcome, DEFAULT_PERCENTILES,
};
use sqlforecast_core::sqltext::parse_syntactic_profile;
use sqlforecast_core::workload::{LabeledQuery, Labels, SessionClass};

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

#[test]
fn perfect_predictions() {
    let t = [0, 1, 2, 1, 0];
    let r = classification_report(&t, &t, &names(&["a", "b", "c"]), None).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert!(r.classes.iter().all(|c| c.f == 1.0));
}

#[test]
fn majority_predictor_scores_zero_on_minority() {
    let truth: Vec<usize> = std::iter::repeat_n(0, 9).chain([1]).collect();
    let r = classification_report(&[0; 10], &truth, &names(&["a", "b"]), None).unwrap();
    assert!((r.accuracy - 0.9).abs() < 1e-15);
    assert_eq!(r.f("b"), Some(0.0));
}

#[test]
fn hand_computed_confusion() {
    // rows = truth: A predicted A 5 times, B once; B predicted A twice, B twice
    let mut pred = Vec::new();
    let mut truth = Vec::new();
    for (t, p, n) in [(0, 0, 5), (0, 1, 1), (1, 0, 2), (1, 1, 2)] {
        pred.extend(std::iter::repeat_n(p, n));
        truth.extend(std::iter::repeat_n(t, n));
    }
    let r = classification_report(&pred, &truth, &names(&["A", "B"]), None).unwrap();
    assert_eq!(r.confusion, vec![vec![5, 1], vec![2, 2]]);
    let (p, rc) = (5.0 / 7.0, 5.0 / 6.0);
    let a = &r.classes[0];
    assert!((a.precision - p).abs() < 1e-15);
    assert!((a.recall - rc).abs() < 1e-15);
    assert!((a.f - 2.0 * p * rc / (p + rc)).abs() < 1e-15);
}

#[test]
fn huber_mean_with_one_outlier() {
    let mut pred = vec![0.0; 11];
    pred[3] = 10.0;
    let truth = vec![0.0; 11];
    let r = regression_report(&pred, &truth, &truth, &truth, &DEFAULT_PERCENTILES).unwrap();
    assert!((r.huber - 9.5 / 11.0).abs() < 1e-15);
    assert!((r.mse - 100.0 / 11.0).abs() < 1e-12);
}

#[test]
fn zero_residuals() {
    let v = [0.5, 1.5, 2.5];
    let raw = [3.0, 10.0, 0.0];
    let r = regression_report(&v, &v, &raw, &raw, &DEFAULT_PERCENTILES).unwrap();
    assert_eq!((r.huber, r.mse), (0.0, 0.0));
    assert!(r.qerror.iter().all(|p| p.value == 1.0));
}

#[test]
fn constant_median_mse_matches_direct_sum() {
    let truth = [0.0, 0.3, 1.2, 2.0, 4.4, 0.7];
    let mut sorted = truth.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[2] + sorted[3]) / 2.0;
    let mut oracle = 0.0;
    for t in truth {
        oracle += (median - t) * (median - t);
    }
    oracle /= truth.len() as f64;
    let pred = [median; 6];
    let r = regression_report(&pred, &truth, &pred, &truth, &DEFAULT_PERCENTILES).unwrap();
    assert!((r.mse - oracle).abs() < 1e-12);
}

fn session_query(c: Option<SessionClass>) -> LabeledQuery {
    query(
        "select 1",
        Labels {
            session_class: c,
            ..Labels::default()
        },
    )
}

#[test]
fn doubled_residuals_quadruple_group_mse() {
    let residuals = [0.1, -0.3, 0.25, 0.05, -0.2, 0.4, -0.15, 0.3, 0.12, -0.07, 0.33, -0.28];
    let mut outcomes = Vec::new();
    let mut qs = Vec::new();
    for r in residuals {
        outcomes.push(Outcome::Value { predicted: r, truth: 0.0 });
        qs.push(session_query(Some(SessionClass::Bot)));
        outcomes.push(Outcome::Value {
            predicted: 1.0 + 2.0 * r,
            truth: 1.0,
        });
        qs.push(session_query(Some(SessionClass::Browser)));
    }
    let refs: Vec<&LabeledQuery> = qs.iter().collect();
    let b = breakdown(&outcomes, &refs, &Grouping::SessionClass).unwrap();
    let get = |g: &str| b.groups.iter().find(|r| r.group == g).unwrap();
    assert!((get("browser").metric - 4.0 * get("bot").metric).abs() < 1e-9);
    assert!(b.groups.iter().all(|g| !g.low_confidence));
    assert_eq!(b.metric, "mse");
}

#[test]
fn single_group_equals_global_and_empty_groups_vanish() {
    let outcomes: Vec<Outcome> = [(0, 0), (1, 0), (1, 1), (2, 2)]
        .iter()
        .map(|&(p, t)| Outcome::Class { predicted: p, truth: t })
        .collect();
    let qs: Vec<_> = (0..4).map(|_| session_query(Some(SessionClass::Admin))).collect();
    let refs: Vec<&LabeledQuery> = qs.iter().collect();
    let b = breakdown(&outcomes, &refs, &Grouping::SessionClass).unwrap();
    assert_eq!(b.groups.len(), 1);
    assert_eq!(b.groups[0].metric, 0.75);
    assert!(b.groups[0].low_confidence);
}

#[test]
fn property_buckets_cover_every_row() {
    let stmts = [
        "select a from t",
        "select a from t join u on t.x = u.y",
        "select a from t join u on t.x = u.y join v on v.z = u.y",
        "select 1",
    ];
    let mut qs: Vec<LabeledQuery> = stmts
        .iter()
        .map(|s| {
            let mut q = session_query(None);
            q.statement = s.to_string();
            q.profile = Some(parse_syntactic_profile(s));
            q
        })
        .collect();
    qs[3].profile = None;
    let outcomes = vec![Outcome::Value { predicted: 0.0, truth: 1.0 }; 4];
    let refs: Vec<&LabeledQuery> = qs.iter().collect();
    let b = breakdown(&outcomes, &refs, &Grouping::parse("n_joins:2").unwrap()).unwrap();
    assert_eq!(b.groups.iter().map(|g| g.size).sum::<usize>(), 4);
    assert!(b.groups.iter().any(|g| g.group == "(missing)"));
    assert!(breakdown(
        &outcomes,
        &refs,
        &Grouping::Property {
            name: "bogus".into(),
            buckets: 2
        }
    )
    .is_err());
}

proptest! {
    #[test]
    fn qerror_symmetric_and_at_least_one(a in -5.0f64..1e6, b in -5.0f64..1e6) {
        prop_assert_eq!(qerror(a, b), qerror(b, a));
        prop_assert!(qerror(a, b) >= 1.0);
    }

    #[test]
    fn percentiles_monotone(values in prop::collection::vec(1.0f64..100.0, 1..60)) {
        let t = percentile_table(&values, &[0.0, 10.0, 50.0, 75.0, 80.0, 85.0, 90.0, 95.0, 100.0]).unwrap();
        prop_assert!(t.windows(2).all(|w| w[0].value <= w[1].value));
    }

    #[test]
    fn accuracy_is_prevalence_weighted_recall(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..80)
    ) {
        let (p, t): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let r = classification_report(&p, &t, &names(&["a", "b", "c", "d"]), None).unwrap();
        let weighted: f64 = r.classes.iter().map(|c| c.recall * c.support as f64).sum::<f64>() / t.len() as f64;
        prop_assert!((weighted - r.accuracy).abs() < 1e-12);
    }

    #[test]
    fn breakdown_sizes_sum(classes in prop::collection::vec(prop::option::of(0usize..7), 1..50)) {
        let qs: Vec<_> = classes.iter().map(|c| session_query(c.map(|i| SessionClass::ALL[i]))).collect();
        let refs: Vec<&LabeledQuery> = qs.iter().collect();
        let outcomes = vec![Outcome::Class { predicted: 0, truth: 0 }; qs.len()];
        let b = breakdown(&outcomes, &refs, &Grouping::SessionClass).unwrap();
        prop_assert_eq!(b.groups.iter().map(|g| g.size).sum::<usize>(), qs.len());
    }
}
