#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqlforecast_core::workload::{DatasetSplit, ErrorClass, LabeledQuery, Labels, SessionClass, Setting};

pub fn query(statement: &str, labels: Labels) -> LabeledQuery {
    LabeledQuery {
        statement: statement.to_string(),
        labels,
        multiplicity: 1,
        profile: None,
        user_key: None,
        opt_cost_estimate: None,
    }
}

pub fn split_of(train: Vec<LabeledQuery>, validation: Vec<LabeledQuery>) -> DatasetSplit {
    DatasetSplit {
        setting: Setting::HomogeneousInstance,
        seed: 0,
        train,
        validation,
        test: Vec::new(),
    }
}

const TABLES: [&str; 6] = ["photoobj", "specobj", "galaxy", "star", "field", "neighbors"];
const COLUMNS: [&str; 6] = ["objid", "ra", "dec", "z", "run", "camcol"];

/// Random SELECT over a fixed schema with `joins` JOIN clauses.
pub fn synthetic_statement(rng: &mut ChaCha8Rng, joins: usize) -> String {
    let pick = |rng: &mut ChaCha8Rng, xs: &[&'static str]| xs[rng.gen_range(0..xs.len())];
    let mut s = format!("select {}, {} from {} t0", pick(rng, &COLUMNS), pick(rng, &COLUMNS), pick(rng, &TABLES));
    for j in 1..=joins {
        s.push_str(&format!(" join {} t{j} on t{j}.objid = t0.objid", pick(rng, &TABLES)));
    }
    if rng.gen_bool(0.5) {
        s.push_str(&format!(" where t0.{} > {}", pick(rng, &COLUMNS), rng.gen_range(0..1000)));
    }
    s
}

/// Error-class task where a query fails exactly when it contains a join.
pub fn join_presence_queries(n: usize, seed: u64) -> Vec<LabeledQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let joins = if rng.gen_bool(0.5) { rng.gen_range(1..=2) } else { 0 };
            let class = if joins > 0 { ErrorClass::Severe } else { ErrorClass::Success };
            query(
                &synthetic_statement(&mut rng, joins),
                Labels {
                    error_class: Some(class),
                    session_class: Some(SessionClass::Browser),
                    ..Labels::default()
                },
            )
        })
        .collect()
}

/// CPU-time task where busy seconds are `e^(1.5 * joins) - 1`.
pub fn join_count_cpu_queries(n: usize, seed: u64) -> Vec<LabeledQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let joins = rng.gen_range(0..=3);
            query(
                &synthetic_statement(&mut rng, joins),
                Labels {
                    cpu_time_s: Some((1.5 * joins as f64).exp() - 1.0),
                    ..Labels::default()
                },
            )
        })
        .collect()
}
