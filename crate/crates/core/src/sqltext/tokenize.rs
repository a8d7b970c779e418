use super::Granularity;
use crate::{Error, Result};

/// Stand-in for every maximal run of ASCII digits in word tokenization.
pub const DIGIT_TOKEN: &str = "__digit__";

const PUNCTUATION: &[char] = &['(', ')', ',', ';', '.', '=', '<', '>', '+', '-', '*', '/', '%', '\'', '"'];

/// One token per Unicode scalar value, spaces included, case preserved.
pub fn tokenize_chars(statement: &str) -> Result<Vec<String>> {
    if statement.is_empty() {
        return Err(Error::EmptyStatement);
    }
    Ok(statement.chars().map(String::from).collect())
}

/// Lowercased words with SQL punctuation split out and digit runs replaced
/// by [`DIGIT_TOKEN`].
pub fn tokenize_words(statement: &str) -> Result<Vec<String>> {
    if statement.is_empty() {
        return Err(Error::EmptyStatement);
    }
    let mut spaced = String::with_capacity(statement.len() + 16);
    for ch in statement.chars() {
        if PUNCTUATION.contains(&ch) {
            spaced.push(' ');
            spaced.push(ch);
            spaced.push(' ');
        } else {
            spaced.push(ch);
        }
    }
    let mut tokens = Vec::new();
    for word in spaced.split_whitespace() {
        let word = word.to_lowercase();
        let mut rest = word.as_str();
        while !rest.is_empty() {
            let digits = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            if digits > 0 {
                tokens.push(DIGIT_TOKEN.to_string());
                rest = &rest[digits..];
            } else {
                let other = rest.find(|c: char| c.is_ascii_digit()).unwrap_or(rest.len());
                tokens.push(rest[..other].to_string());
                rest = &rest[other..];
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::InvalidInput("statement has no word tokens".into()));
    }
    Ok(tokens)
}

pub fn tokenize(statement: &str, granularity: Granularity) -> Result<Vec<String>> {
    match granularity {
        Granularity::Char => tokenize_chars(statement),
        Granularity::Word => tokenize_words(statement),
    }
}
