//! Token sequences with sentinel markers and the tokenizer abstraction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of positions the masked LM accepts.
pub const MAX_POSITIONS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Token {
    Cls,
    Sep,
    Mask,
    Piece(String),
}

impl Token {
    pub const CLS: &'static str = "[CLS]";
    pub const SEP: &'static str = "[SEP]";
    pub const MASK: &'static str = "[MASK]";

    pub fn as_str(&self) -> &str {
        match self {
            Token::Cls => Self::CLS,
            Token::Sep => Self::SEP,
            Token::Mask => Self::MASK,
            Token::Piece(p) => p,
        }
    }

    pub fn is_mask(&self) -> bool {
        matches!(self, Token::Mask)
    }
}

impl From<String> for Token {
    fn from(s: String) -> Self {
        match s.as_str() {
            Token::CLS => Token::Cls,
            Token::SEP => Token::Sep,
            Token::MASK => Token::Mask,
            _ => Token::Piece(s),
        }
    }
}

impl From<&str> for Token {
    fn from(s: &str) -> Self {
        Token::from(s.to_string())
    }
}

impl From<Token> for String {
    fn from(t: Token) -> Self {
        match t {
            Token::Piece(p) => p,
            other => other.as_str().to_string(),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<Token>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, t: Token) {
        self.0.push(t);
    }

    pub fn extend_pieces<'a>(&mut self, pieces: impl IntoIterator<Item = &'a String>) {
        self.0.extend(pieces.into_iter().map(|p| Token::Piece(p.clone())));
    }

    pub fn as_strings(&self) -> Vec<String> {
        self.0.iter().map(|t| t.as_str().to_string()).collect()
    }

    pub fn check_len(&self, id: &str) -> Result<()> {
        if self.len() > MAX_POSITIONS {
            return Err(Error::SequenceOverflow {
                id: id.to_string(),
                len: self.len(),
                limit: MAX_POSITIONS,
            });
        }
        Ok(())
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(Token::as_str).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Splits text into model pieces and joins pieces back into text.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Result<Vec<String>>;
    fn detokenize(&self, pieces: &[String]) -> Result<String>;
}

/// Whitespace splitting; detokenizing joins with single spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        Ok(text.split_whitespace().map(str::to_string).collect())
    }

    fn detokenize(&self, pieces: &[String]) -> Result<String> {
        Ok(pieces.join(" "))
    }
}
