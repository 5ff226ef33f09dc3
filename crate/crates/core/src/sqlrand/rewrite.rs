//! Keyword randomization and the de-randomizing check.

use std::fmt;

use super::keywords::{KeywordSet, WordClass};
use super::lexer::{lex, TokenKind};
use super::{RandomizationKey, SqlRandError};

/// Why a query was refused. Deliberately carries no part of the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// A standard keyword appeared without the suffix.
    BareKeyword,
    /// A keyword carried digits other than the current suffix.
    WrongSuffix,
    /// The query could not be lexed.
    Malformed,
}

impl RejectReason {
    pub fn code(self) -> u8 {
        match self {
            RejectReason::BareKeyword => 1,
            RejectReason::WrongSuffix => 2,
            RejectReason::Malformed => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(RejectReason::BareKeyword),
            2 => Some(RejectReason::WrongSuffix),
            3 => Some(RejectReason::Malformed),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::BareKeyword => "bare-keyword",
            RejectReason::WrongSuffix => "wrong-suffix",
            RejectReason::Malformed => "malformed",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Appends the key's suffix to every keyword outside literals and comments.
pub fn randomize(sql: &str, key: &RandomizationKey, keywords: &KeywordSet) -> Result<String, SqlRandError> {
    let tokens = lex(sql).map_err(|e| SqlRandError::Unterminated { offset: e.offset })?;
    let suffix = key.suffix.to_string();
    let mut out = String::with_capacity(sql.len() + 16);
    for t in tokens {
        out.push_str(t.text);
        if t.kind == TokenKind::Word {
            match keywords.classify(t.text) {
                WordClass::Keyword => out.push_str(&suffix),
                WordClass::Suffixed { .. } => {
                    return Err(SqlRandError::AlreadyRandomized { offset: t.offset })
                }
                WordClass::Identifier => {}
            }
        }
    }
    Ok(out)
}

/// Strips the current suffix from keyword tokens. A bare keyword, or a
/// keyword with any other digits, is read as an identifier that collides
/// with the keyword set, and the query is refused.
pub fn derandomize(sql: &str, key: &RandomizationKey, keywords: &KeywordSet) -> Result<String, RejectReason> {
    let tokens = lex(sql).map_err(|_| RejectReason::Malformed)?;
    let suffix = key.suffix.to_string();
    let mut out = String::with_capacity(sql.len());
    for t in tokens {
        if t.kind != TokenKind::Word {
            out.push_str(t.text);
            continue;
        }
        match keywords.classify(t.text) {
            WordClass::Suffixed { keyword, digits } if digits == suffix => out.push_str(keyword),
            WordClass::Suffixed { .. } => return Err(RejectReason::WrongSuffix),
            WordClass::Keyword => return Err(RejectReason::BareKeyword),
            WordClass::Identifier => out.push_str(t.text),
        }
    }
    Ok(out)
}
