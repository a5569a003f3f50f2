//! Token sequences and sentence pairs.
//!
//! Tokens are opaque byte-preserving strings. No normalization or
//! segmentation happens here; the only rule is that a token is non-empty
//! and carries no whitespace, so a sequence can always be written as a
//! single space-joined line and read back unchanged.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::TokenError;

/// Checks the token rule: non-empty, no whitespace characters.
pub fn check_token(token: &str) -> Result<(), TokenError> {
    if token.is_empty() {
        return Err(TokenError::Empty);
    }
    if let Some(c) = token.chars().find(|c| c.is_whitespace()) {
        return Err(TokenError::Whitespace {
            token: token.to_string(),
            ch: c,
        });
    }
    Ok(())
}

/// An ordered list of valid tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn empty() -> Self {
        TokenSeq(Vec::new())
    }

    pub fn new<I, S>(tokens: I) -> Result<Self, TokenError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for t in &tokens {
            check_token(t)?;
        }
        Ok(TokenSeq(tokens))
    }

    /// Splits a pre-tokenized line on whitespace. Never fails: whitespace
    /// splitting cannot produce an illegal token.
    pub fn from_line(line: &str) -> Self {
        TokenSeq(line.split_whitespace().map(str::to_string).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Appends one token after checking it.
    pub fn push(&mut self, token: impl Into<String>) -> Result<(), TokenError> {
        let token = token.into();
        check_token(&token)?;
        self.0.push(token);
        Ok(())
    }

    /// Length of the longest common token prefix with `other`.
    pub fn common_prefix_len(&self, other: &TokenSeq) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn starts_with(&self, prefix: &[String]) -> bool {
        self.0.starts_with(prefix)
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl<'de> Deserialize<'de> for TokenSeq {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(deserializer)?;
        TokenSeq::new(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<Vec<String>> for TokenSeq {
    type Error = TokenError;

    fn try_from(v: Vec<String>) -> Result<Self, TokenError> {
        TokenSeq::new(v)
    }
}

/// One line of a parallel corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub id: String,
    pub source: TokenSeq,
    pub target: TokenSeq,
}

impl SentencePair {
    pub fn new(id: impl Into<String>, source: TokenSeq, target: TokenSeq) -> Self {
        SentencePair {
            id: id.into(),
            source,
            target,
        }
    }

    /// Default id for the pair on 1-based line `line`.
    pub fn line_id(line: usize) -> String {
        format!("line-{line}")
    }
}
