//! Bag-of-ngrams TFIDF features at character or word granularity.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::sqltext::{tokenize, Granularity};
use crate::{Error, Result, Scalar};

/// Longest n-gram kept in the vocabulary.
pub const MAX_NGRAM: usize = 5;
/// Joins the tokens of a multi-token n-gram.
pub const NGRAM_SEPARATOR: char = '\u{1f}';

pub const DEFAULT_WORD_FEATURES: usize = 50_000;
pub const DEFAULT_CHAR_FEATURES: usize = 5_000;

/// The `v` most frequent training n-grams with their document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NgramFile", into = "NgramFile")]
pub struct NgramVocabulary {
    granularity: Granularity,
    n_max: usize,
    ngrams: Vec<String>,
    df: Vec<u32>,
    n_docs: usize,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct NgramFile {
    granularity: Granularity,
    n_max: usize,
    ngrams: Vec<String>,
    df: Vec<u32>,
    n_docs: usize,
}

impl From<NgramFile> for NgramVocabulary {
    fn from(f: NgramFile) -> Self {
        let index = f.ngrams.iter().enumerate().map(|(i, g)| (g.clone(), i as u32)).collect();
        NgramVocabulary {
            granularity: f.granularity,
            n_max: f.n_max,
            ngrams: f.ngrams,
            df: f.df,
            n_docs: f.n_docs,
            index,
        }
    }
}

impl From<NgramVocabulary> for NgramFile {
    fn from(v: NgramVocabulary) -> Self {
        NgramFile {
            granularity: v.granularity,
            n_max: v.n_max,
            ngrams: v.ngrams,
            df: v.df,
            n_docs: v.n_docs,
        }
    }
}

impl NgramVocabulary {
    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    /// Feature dimension `v`.
    pub fn len(&self) -> usize {
        self.ngrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngrams.is_empty()
    }

    pub fn ngrams(&self) -> &[String] {
        &self.ngrams
    }

    pub fn document_frequency(&self, index: usize) -> u32 {
        self.df[index]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, ngram: &str) -> Option<u32> {
        self.index.get(ngram).copied()
    }

    pub fn digest(&self) -> String {
        crate::sqltext::hex_digest(&serde_json::to_vec(self).expect("n-gram vocabulary serializes"))
    }
}

/// All n-grams of length 1..=`n_max` of a token sequence, joined by
/// [`NGRAM_SEPARATOR`], in order of occurrence.
pub fn ngrams(tokens: &[String], n_max: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len() * n_max);
    for n in 1..=n_max {
        for window in tokens.windows(n) {
            out.push(window.join(&NGRAM_SEPARATOR.to_string()));
        }
    }
    out
}

fn statement_ngrams(statement: &str, granularity: Granularity) -> Vec<String> {
    tokenize(statement, granularity).map(|t| ngrams(&t, MAX_NGRAM)).unwrap_or_default()
}

/// Keeps the `v` most frequent n-grams of the training statements (ties by
/// lexicographic order) and records their document frequencies.
pub fn fit_ngram_vocabulary<S: AsRef<str>>(statements: &[S], granularity: Granularity, v: usize) -> Result<NgramVocabulary> {
    if statements.is_empty() {
        return Err(Error::InvalidInput("cannot fit n-grams on an empty corpus".into()));
    }
    if v < 1 {
        return Err(Error::InvalidInput("feature dimension must be at least 1".into()));
    }
    let mut freq: HashMap<String, (u64, u32)> = HashMap::new();
    for s in statements {
        let grams = statement_ngrams(s.as_ref(), granularity);
        let mut seen: HashSet<&str> = HashSet::with_capacity(grams.len());
        for g in &grams {
            let first = seen.insert(g.as_str());
            let e = freq.entry(g.clone()).or_default();
            e.0 += 1;
            if first {
                e.1 += 1;
            }
        }
    }
    let mut ranked: Vec<(String, u64, u32)> = freq.into_iter().map(|(g, (f, d))| (g, f, d)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(v);

    let (ngrams, df): (Vec<String>, Vec<u32>) = ranked.into_iter().map(|(g, _, d)| (g, d)).unzip();
    Ok(NgramFile {
        granularity,
        n_max: MAX_NGRAM,
        ngrams,
        df,
        n_docs: statements.len(),
    }
    .into())
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector<T> {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[T]) -> T {
        self.iter().map(|(i, v)| dense[i] * v).sum()
    }
}

/// TFIDF weights: occurrence share of each in-vocabulary n-gram within the
/// statement times `ln(N / (1 + df))`. Out-of-vocabulary n-grams are dropped.
pub fn tfidf_vector<T: Scalar>(statement: &str, vocab: &NgramVocabulary) -> SparseVector<T> {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for g in statement_ngrams(statement, vocab.granularity) {
        if let Some(i) = vocab.index_of(&g) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let total: u32 = counts.values().sum();
    let mut entries: Vec<(u32, u32)> = counts.into_iter().collect();
    entries.sort_unstable();

    let n_docs = T::of(vocab.n_docs as f64);
    let total = T::of(total as f64);
    let (indices, values) = entries
        .into_iter()
        .map(|(i, c)| {
            let idf = (n_docs / (T::one() + T::of(vocab.df[i as usize] as f64))).ln();
            (i, T::of(c as f64) / total * idf)
        })
        .unzip();
    SparseVector {
        dim: vocab.len(),
        indices,
        values,
    }
}
