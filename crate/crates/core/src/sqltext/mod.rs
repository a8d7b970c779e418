//! Statement text: tokenizers, vocabularies and syntactic profiles.

mod correlation;
mod lexer;
mod profile;
mod tokenize;
mod vocab;

use serde::{Deserialize, Serialize};

pub use correlation::{pearson, property_correlation_matrix, CorrelationMatrix};
pub use profile::{parse_syntactic_profile, profiles_to_csv, property_summaries, SyntacticProfile, PROPERTY_NAMES};
pub use tokenize::{tokenize, tokenize_chars, tokenize_words, DIGIT_TOKEN};
pub(crate) use vocab::hex_digest;
pub use vocab::{build_vocabulary, encode, TokenSequence, Vocabulary, PAD, UNK};

/// Token granularity shared by the vocabulary, n-gram and model layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Char,
    Word,
}
