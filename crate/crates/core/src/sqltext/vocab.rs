use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{tokenize, Granularity, DIGIT_TOKEN};
use crate::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";

/// Dense token to index mapping with reserved PAD, UNK and (word level) DIGIT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    granularity: Granularity,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    granularity: Granularity,
    tokens: Vec<String>,
}

impl From<VocabularyFile> for Vocabulary {
    fn from(f: VocabularyFile) -> Self {
        Vocabulary::from_tokens(f.granularity, f.tokens)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            granularity: v.granularity,
            tokens: v.tokens,
        }
    }
}

fn reserved(granularity: Granularity) -> &'static [&'static str] {
    match granularity {
        Granularity::Char => &[PAD_TOKEN, UNK_TOKEN],
        Granularity::Word => &[PAD_TOKEN, UNK_TOKEN, DIGIT_TOKEN],
    }
}

impl Vocabulary {
    fn from_tokens(granularity: Granularity, tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary {
            granularity,
            tokens,
            index,
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Hex SHA-256 of the serialized vocabulary.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("vocabulary serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reserved tokens first, then the most frequent corpus tokens (ties broken
/// by lexicographic order) until `max_size` entries.
pub fn build_vocabulary<'a, I, S>(sequences: I, granularity: Granularity, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let reserved = reserved(granularity);
    if max_size < reserved.len() {
        return Err(Error::InvalidInput(format!(
            "vocabulary size {max_size} is below the {} reserved tokens",
            reserved.len()
        )));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for seq in sequences {
        for tok in seq {
            *counts.entry(tok.as_ref()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|(t, _)| !reserved.contains(t)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let tokens = reserved
        .iter()
        .map(|t| t.to_string())
        .chain(ranked.into_iter().map(|(t, _)| t.to_string()))
        .take(max_size)
        .collect();
    Ok(Vocabulary::from_tokens(granularity, tokens))
}

/// Encoded statement; `ids` is never padded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub granularity: Granularity,
    pub ids: Vec<u32>,
    /// Token count before truncation.
    pub original_len: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub fn encode(statement: &str, vocabulary: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if max_len == 0 {
        return Err(Error::InvalidInput("max_len must be positive".into()));
    }
    let tokens = tokenize(statement, vocabulary.granularity)?;
    let original_len = tokens.len();
    let ids = tokens.iter().take(max_len).map(|t| vocabulary.id(t)).collect();
    Ok(TokenSequence {
        granularity: vocabulary.granularity,
        ids,
        original_len,
    })
}
