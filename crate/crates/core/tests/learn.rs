mod common;

use common::{join_presence_queries, query, split_of};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqlforecast_core::eval::evaluate;
use sqlforecast_core::features::SparseVector;
use sqlforecast_core::learn::baseline::OptBaseline;
use sqlforecast_core::learn::bundle::{Learner, ModelBundle};
use sqlforecast_core::learn::cnn::{CnnConfig, CnnModel};
use sqlforecast_core::learn::linear::LinearModel;
use sqlforecast_core::learn::loss::Target;
use sqlforecast_core::learn::predict::{predict, PredictionOutput};
use sqlforecast_core::learn::train::{fit, train, Hyperparameters, ModelKind, TrainConfig};
use sqlforecast_core::learn::Model;
use sqlforecast_core::workload::{ErrorClass, Labels, SessionClass, Task};

fn sv(pairs: &[(u32, f64)], dim: usize) -> SparseVector<f64> {
    SparseVector {
        dim,
        indices: pairs.iter().map(|p| p.0).collect(),
        values: pairs.iter().map(|p| p.1).collect(),
    }
}

fn error_labels(c: ErrorClass) -> Labels {
    Labels {
        error_class: Some(c),
        ..Labels::default()
    }
}

fn rows_labels(y: f64) -> Labels {
    Labels {
        answer_rows: Some(y),
        ..Labels::default()
    }
}

#[test]
fn linear_separable_reaches_full_train_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..60 {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        if (a + b).abs() < 0.2 {
            continue;
        }
        xs.push(sv(&[(0, a), (1, b)], 2));
        ys.push(Target::Class(usize::from(a + b > 0.0)));
    }
    let mut m = LinearModel::<f64>::new(2, 2, 0);
    let cfg = TrainConfig {
        max_epochs: 50,
        patience: 50,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    fit(&mut m, &xs, &ys, &xs, &ys, 0.0, &cfg).unwrap();
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, y)| {
            let out = m.forward(x).unwrap();
            let pred = usize::from(out[1] > out[0]);
            **y == Target::Class(pred)
        })
        .count();
    assert_eq!(correct, xs.len());
}

#[test]
fn linear_regression_recovers_planted_weights() {
    let w = [0.7, -0.4, 0.25];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let make = |rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        (sv(&[(0, x[0]), (1, x[1]), (2, x[2])], 3), Target::Value(y))
    };
    let (tx, ty): (Vec<_>, Vec<_>) = (0..200).map(|_| make(&mut rng)).unzip();
    let (vx, vy): (Vec<_>, Vec<_>) = (0..40).map(|_| make(&mut rng)).unzip();
    let mut m = LinearModel::<f64>::new(3, 1, 0);
    let cfg = TrainConfig {
        max_epochs: 100,
        patience: 10,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let log = fit(&mut m, &tx, &ty, &vx, &vy, 0.0, &cfg).unwrap();
    assert!(log.validation_loss < 1e-3, "{}", log.validation_loss);
}

#[test]
fn same_seed_same_parameters() {
    let data = join_presence_queries(80, 3);
    let split = split_of(data[..64].to_vec(), data[64..].to_vec());
    let cfg = TrainConfig {
        max_epochs: 3,
        seed: 11,
        ..TrainConfig::default()
    };
    let hyper = Hyperparameters {
        embed_dim: 4,
        kernels: 3,
        vocab_size: Some(200),
        ..Hyperparameters::default()
    };
    for kind in [ModelKind::Wtfidf, ModelKind::Ccnn, ModelKind::Wlstm] {
        let hyper = Hyperparameters { hidden: 3, ..hyper.clone() };
        let a = train(kind, Task::Error, &split, &hyper, &cfg).unwrap();
        let b = train(kind, Task::Error, &split, &hyper, &cfg).unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap(), "{kind}");
        let c = train(kind, Task::Error, &split, &hyper, &TrainConfig { seed: 12, ..cfg.clone() }).unwrap();
        assert_ne!(a.hash().unwrap(), c.hash().unwrap(), "{kind}");
    }
}

#[test]
fn cnn_learns_join_presence() {
    let data = join_presence_queries(200, 7);
    let split = split_of(data[..160].to_vec(), data[160..].to_vec());
    let hyper = Hyperparameters {
        embed_dim: 16,
        kernels: 8,
        dropout: 0.0,
        ..Hyperparameters::default()
    };
    let cfg = TrainConfig {
        max_epochs: 15,
        learning_rate: 0.01,
        seed: 1,
        ..TrainConfig::default()
    };
    let bundle = train(ModelKind::Wcnn, Task::Error, &split, &hyper, &cfg).unwrap();
    let report = evaluate(&bundle, &split.validation, &[50.0], &[]).unwrap();
    let acc = report.classification.unwrap().accuracy;
    assert!(acc >= 0.95, "validation accuracy {acc}");
}

#[test]
fn cnn_parameter_count_closed_form() {
    let (v, d, k, o) = (37usize, 5usize, 4usize, 3usize);
    let expected = v * d + k * (3 * d + 1) + k * (4 * d + 1) + k * (5 * d + 1) + o * (3 * k + 1);
    let m = CnnModel::<f64>::new(
        CnnConfig {
            vocab_size: v,
            embed_dim: d,
            kernels: k,
            dropout: 0.5,
            n_outputs: o,
        },
        0,
    )
    .unwrap();
    assert_eq!(m.params().len(), expected);
}

#[test]
fn median_training_is_immediate_and_inverts() {
    // transformed values with y_min = -1 are ln(y + 2); the median row maps to ln 3
    let train_rows: Vec<_> = [-1.0, 0.0, 1.0, 5.0, 9.0].iter().map(|&y| query("select 1", rows_labels(y))).collect();
    let split = split_of(train_rows, Vec::new());
    let b = train(ModelKind::Median, Task::Rows, &split, &Hyperparameters::default(), &TrainConfig::default()).unwrap();
    assert!(b.log.epochs.is_empty());
    assert!(b.log.validation_fallback);
    assert_eq!(b.learner, Learner::Median { value: 3f64.ln() });
    let PredictionOutput::Value { value, transformed } = predict(&b, "select anything", None).unwrap().output else {
        panic!("regression output expected");
    };
    assert_eq!(transformed, 3f64.ln());
    assert!((value - 1.0).abs() < 1e-12);
}

#[test]
fn median_inverse_of_paper_constant() {
    let mut b = train(
        ModelKind::Median,
        Task::Rows,
        &split_of(vec![query("a", rows_labels(-1.0)), query("b", rows_labels(3.0))], Vec::new()),
        &Hyperparameters::default(),
        &TrainConfig::default(),
    )
    .unwrap();
    b.learner = Learner::Median { value: 1.099 };
    let PredictionOutput::Value { value, .. } = predict(&b, "x", None).unwrap().output else {
        panic!("regression output expected");
    };
    assert!((value - (1.099f64.exp() - 2.0)).abs() < 1e-12);
    assert!((value - 1.0).abs() < 0.01);
}

#[test]
fn mfreq_predicts_one_class_for_everything() {
    let rows = vec![
        query("a", error_labels(ErrorClass::Success)),
        query("b", error_labels(ErrorClass::Success)),
        query("c", error_labels(ErrorClass::Severe)),
    ];
    let b = train(
        ModelKind::Mfreq,
        Task::Error,
        &split_of(rows, Vec::new()),
        &Hyperparameters::default(),
        &TrainConfig::default(),
    )
    .unwrap();
    for s in ["select 1", "drop table x", "garbage ((("] {
        let PredictionOutput::Class { label, distribution, .. } = predict(&b, s, None).unwrap().output else {
            panic!("class output expected");
        };
        assert_eq!(label, "success");
        let total: f64 = distribution.iter().map(|c| c.probability).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn session_mfreq_prefers_no_web_hit_on_sdss_like_mix() {
    let mix = [
        (SessionClass::NoWebHit, 50),
        (SessionClass::Bot, 20),
        (SessionClass::Browser, 15),
        (SessionClass::Program, 10),
        (SessionClass::Anonymous, 5),
    ];
    let rows: Vec<_> = mix
        .iter()
        .flat_map(|&(c, n)| {
            (0..n).map(move |i| {
                query(
                    &format!("select {i}"),
                    Labels {
                        session_class: Some(c),
                        ..Labels::default()
                    },
                )
            })
        })
        .collect();
    let b = train(
        ModelKind::Mfreq,
        Task::Session,
        &split_of(rows, Vec::new()),
        &Hyperparameters::default(),
        &TrainConfig::default(),
    )
    .unwrap();
    let PredictionOutput::Class { label, .. } = predict(&b, "select 1", None).unwrap().output else {
        panic!("class output expected");
    };
    assert_eq!(label, "no_web_hit");
}

/// Normal equations solved by Cramer's rule.
fn normal_equations(c: &[f64], y: &[f64]) -> (f64, f64) {
    let n = c.len() as f64;
    let (sc, sy) = (c.iter().sum::<f64>(), y.iter().sum::<f64>());
    let scc: f64 = c.iter().map(|v| v * v).sum();
    let scy: f64 = c.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * scc - sc * sc;
    let slope = (n * scy - sc * sy) / det;
    let intercept = (scc * sy - sc * scy) / det;
    (slope, intercept)
}

#[test]
fn opt_baseline_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..10.0)).collect();
    let y: Vec<f64> = c.iter().map(|x| 0.3 * x - 2.0 + rng.gen_range(-0.5..0.5)).collect();
    let b = OptBaseline::fit(&c, &y).unwrap();
    let (slope, intercept) = normal_equations(&c, &y);
    assert!((b.slope - slope).abs() < 1e-9);
    assert!((b.intercept - intercept).abs() < 1e-9);
}

#[test]
fn opt_bundle_needs_cost() {
    let rows: Vec<_> = (0..6)
        .map(|i| {
            let mut q = query(
                &format!("select {i}"),
                Labels {
                    cpu_time_s: Some(i as f64),
                    ..Labels::default()
                },
            );
            q.opt_cost_estimate = Some(i as f64 * 10.0);
            q
        })
        .collect();
    let b = train(
        ModelKind::Opt,
        Task::Cpu,
        &split_of(rows, Vec::new()),
        &Hyperparameters::default(),
        &TrainConfig::default(),
    )
    .unwrap();
    assert!(predict(&b, "select 1", None).is_err());
    assert!(predict(&b, "select 1", Some(25.0)).is_ok());
    assert!(train(
        ModelKind::Opt,
        Task::Rows,
        &split_of(Vec::new(), Vec::new()),
        &Hyperparameters::default(),
        &TrainConfig::default()
    )
    .is_err());
}

#[test]
fn bundle_roundtrip_and_tamper_detection() {
    let data = join_presence_queries(40, 9);
    let split = split_of(data[..32].to_vec(), data[32..].to_vec());
    let hyper = Hyperparameters {
        embed_dim: 4,
        kernels: 2,
        hidden: 3,
        layers: 2,
        ..Hyperparameters::default()
    };
    let cfg = TrainConfig {
        max_epochs: 2,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Mfreq, ModelKind::Ctfidf, ModelKind::Wcnn, ModelKind::Clstm] {
        let b = train(kind, Task::Error, &split, &hyper, &cfg).unwrap();
        let base = dir.path().join(kind.name());
        let hash = b.save(&base).unwrap();
        let back = ModelBundle::load(&base).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.hash().unwrap(), hash);
        let s = "select objid from star t0 join galaxy t1 on t1.objid = t0.objid";
        assert_eq!(predict(&back, s, None).unwrap(), predict(&b, s, None).unwrap());
    }

    // a swapped vocabulary no longer matches the recorded digest
    let json = std::fs::read_to_string(dir.path().join("wcnn.json")).unwrap();
    let tampered = json.replacen("\"select\"", "\"selekt\"", 1);
    assert_ne!(json, tampered);
    let blob = std::fs::read(dir.path().join("wcnn.bin")).unwrap();
    assert!(ModelBundle::from_bytes(tampered.as_bytes(), &blob).is_err());
    assert!(ModelBundle::from_bytes(json.as_bytes(), &blob[8..]).is_err());
}

#[test]
fn early_stopping_keeps_best_epoch() {
    let data = join_presence_queries(60, 4);
    let split = split_of(data[..48].to_vec(), data[48..].to_vec());
    let cfg = TrainConfig {
        max_epochs: 30,
        patience: 2,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let b = train(ModelKind::Wtfidf, Task::Error, &split, &Hyperparameters::default(), &cfg).unwrap();
    let best = b.log.epochs.iter().map(|e| e.validation_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(b.log.validation_loss, best);
    let first_best = b.log.epochs.iter().find(|e| e.validation_loss == best).unwrap().epoch;
    assert_eq!(b.log.best_epoch, first_best);
    let after = b.log.epochs.len() - b.log.best_epoch;
    assert!(after <= cfg.patience);
}
