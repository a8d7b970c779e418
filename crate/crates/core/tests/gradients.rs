use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqlforecast_core::features::SparseVector;
use sqlforecast_core::learn::cnn::{CnnConfig, CnnModel};
use sqlforecast_core::learn::gradcheck::check_gradients;
use sqlforecast_core::learn::linear::LinearModel;
use sqlforecast_core::learn::loss::Target;
use sqlforecast_core::learn::lstm::{LstmConfig, LstmModel};
use sqlforecast_core::learn::Model;

const H: f64 = 1e-4;
const TOL: f64 = 1e-3;

/// Re-draws every parameter from uniform(-1, 1) so pooling winners and
/// ReLU signs sit far from their kinks.
fn spread<M: Model<f64>>(m: &mut M, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in m.params_mut().values.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    m.after_update();
}

fn sequences(seed: u64, vocab: u32, len: usize, count: usize) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..len).map(|_| rng.gen_range(1..vocab)).collect())
        .collect()
}

#[test]
fn tiny_cnn_classification_with_dropout() {
    for seed in 0..5 {
        let config = CnnConfig {
            vocab_size: 5,
            embed_dim: 2,
            kernels: 1,
            dropout: 0.5,
            n_outputs: 3,
        };
        let mut m = CnnModel::<f64>::new(config, seed).unwrap();
        spread(&mut m, seed + 100);
        let seqs = sequences(seed, 5, 6, 4);
        let batch: Vec<_> = seqs.iter().enumerate().map(|(i, s)| (s.as_slice(), Target::Class(i % 3))).collect();
        let r = check_gradients(&mut m, &batch, H, seed).unwrap();
        assert!(r.max_relative_error < TOL, "{r:?}");
    }
}

#[test]
fn tiny_cnn_regression_with_padding() {
    let config = CnnConfig {
        vocab_size: 4,
        embed_dim: 2,
        kernels: 1,
        dropout: 0.0,
        n_outputs: 1,
    };
    let mut m = CnnModel::<f64>::new(config, 7).unwrap();
    spread(&mut m, 8);
    let a = [1u32, 2, 3, 1, 2, 0];
    let b = [3u32, 1];
    // residuals well inside and outside the quadratic zone
    let batch = vec![(&a[..], Target::Value(0.3)), (&b[..], Target::Value(-4.0))];
    let r = check_gradients(&mut m, &batch, H, 0).unwrap();
    assert!(r.max_relative_error < TOL, "{r:?}");
}

#[test]
fn lstm_one_then_three_layers() {
    for layers in [1, 3] {
        for seed in 0..3 {
            let config = LstmConfig {
                vocab_size: 5,
                embed_dim: 2,
                hidden: 2,
                layers,
                n_outputs: 3,
            };
            let mut m = LstmModel::<f64>::new(config, seed).unwrap();
            spread(&mut m, seed + 50);
            let seqs = sequences(seed + 10, 5, 5, 3);
            let batch: Vec<_> = seqs.iter().enumerate().map(|(i, s)| (s.as_slice(), Target::Class(i))).collect();
            let r = check_gradients(&mut m, &batch, H, 0).unwrap();
            assert!(r.max_relative_error < TOL, "layers={layers} {r:?}");
        }
    }
}

#[test]
fn lstm_regression() {
    let config = LstmConfig {
        vocab_size: 6,
        embed_dim: 3,
        hidden: 2,
        layers: 3,
        n_outputs: 1,
    };
    let mut m = LstmModel::<f64>::new(config, 3).unwrap();
    spread(&mut m, 4);
    let a = [1u32, 5, 2, 2, 4, 3, 1];
    let batch = vec![(&a[..], Target::Value(0.2)), (&a[..3], Target::Value(2.5))];
    let r = check_gradients(&mut m, &batch, H, 0).unwrap();
    assert!(r.max_relative_error < TOL, "{r:?}");
}

#[test]
fn linear_softmax_and_huber() {
    let x = SparseVector {
        dim: 6,
        indices: vec![0, 2, 5],
        values: vec![0.7, -1.2, 0.4],
    };
    let z = SparseVector {
        dim: 6,
        indices: vec![1, 2],
        values: vec![2.0, 0.5],
    };
    let mut cls = LinearModel::<f64>::new(6, 3, 1);
    spread(&mut cls, 2);
    let r = check_gradients(&mut cls, &[(&x, Target::Class(2)), (&z, Target::Class(0))], H, 0).unwrap();
    assert!(r.max_relative_error < TOL, "{r:?}");

    let mut reg = LinearModel::<f64>::new(6, 1, 1);
    spread(&mut reg, 3);
    let r = check_gradients(&mut reg, &[(&x, Target::Value(0.1)), (&z, Target::Value(5.0))], H, 0).unwrap();
    assert!(r.max_relative_error < TOL, "{r:?}");
}

#[test]
fn appended_pad_does_not_change_cnn_output() {
    // identical positive real-token embeddings and positive kernels: any
    // window containing PAD scores strictly below a full real window
    let config = CnnConfig {
        vocab_size: 3,
        embed_dim: 2,
        kernels: 2,
        dropout: 0.0,
        n_outputs: 2,
    };
    let mut m = CnnModel::<f64>::new(config, 0).unwrap();
    let layout = m.params().layout.clone();
    for seg in layout.segments() {
        let vals = m.params_mut().slice_mut(&seg.name);
        if seg.name == "embedding" {
            vals.copy_from_slice(&[0.0, 0.0, 0.3, 0.6, 0.3, 0.6]);
        } else if seg.name.starts_with("conv") {
            vals.iter_mut().enumerate().for_each(|(i, v)| *v = 0.1 + 0.01 * i as f64);
        }
    }
    let base: Vec<u32> = vec![1, 2, 1, 1, 2, 2];
    let out = m.forward(&base).unwrap();
    for extra in 1..6 {
        let mut padded = base.clone();
        padded.extend(std::iter::repeat_n(0, extra));
        assert_eq!(m.forward(&padded).unwrap(), out);
    }
}
