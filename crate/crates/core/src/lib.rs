//! Pre-execution prediction of SQL query properties from query workloads.
//!
//! The pipeline runs raw workload logs through sessionization, sampling,
//! deduplication and splitting ([`workload`]), turns statements into token
//! sequences and syntactic profiles ([`sqltext`]) or TFIDF vectors
//! ([`features`]), trains baselines, linear models, a shallow CNN or a
//! stacked LSTM ([`learn`]) and scores them ([`eval`]).
//!
//! Numeric kernels are generic over [`Scalar`]; the pipeline itself runs on
//! `f64` and the aliases at the bottom of this file name the concrete types.

pub mod error;
pub mod eval;
pub mod features;
pub mod learn;
pub mod scalar;
pub mod sqltext;
pub mod workload;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Shallow CNN over `f64` parameters.
pub type Cnn = learn::cnn::CnnModel<f64>;
/// Stacked LSTM over `f64` parameters.
pub type Lstm = learn::lstm::LstmModel<f64>;
/// Linear model (softmax or Huber head) over `f64` parameters.
pub type Linear = learn::linear::LinearModel<f64>;
/// Flat parameter store over `f64`.
pub type ParamsF64 = learn::params::Params<f64>;
/// AdaMax optimizer state over `f64`.
pub type AdaMax = learn::optim::AdaMaxState<f64>;
/// TFIDF sparse vector over `f64` weights.
pub type SparseVec = features::SparseVector<f64>;
