//! The keyword set that gets randomized.

use super::SqlRandError;

pub const STANDARD_KEYWORDS: [&str; 27] = [
    "SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "INSERT", "INTO", "VALUES", "UPDATE", "SET",
    "DELETE", "UNION", "ORDER", "BY", "GROUP", "HAVING", "JOIN", "ON", "DROP", "CREATE", "TABLE",
    "LIKE", "IN", "IS", "NULL", "LIMIT",
];

/// Case-insensitive keyword set. Keywords are purely alphabetic, so a token
/// splits into keyword and suffix digits in at most one way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    upper: Vec<String>,
}

/// How the lexer sees a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordClass<'a> {
    Keyword,
    /// Keyword followed by one or more decimal digits.
    Suffixed { keyword: &'a str, digits: &'a str },
    Identifier,
}

impl KeywordSet {
    pub fn new<I, S>(words: I) -> Result<Self, SqlRandError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut upper: Vec<String> = Vec::new();
        for w in words {
            let w = w.as_ref().to_ascii_uppercase();
            if w.is_empty() || !w.bytes().all(|b| b.is_ascii_alphabetic()) {
                return Err(SqlRandError::Keywords(format!("`{w}` is not alphabetic")));
            }
            if upper.contains(&w) {
                return Err(SqlRandError::Keywords(format!("`{w}` listed twice")));
            }
            upper.push(w);
        }
        if upper.is_empty() {
            return Err(SqlRandError::Keywords("empty keyword set".into()));
        }
        Ok(Self { upper })
    }

    pub fn standard() -> Self {
        Self::new(STANDARD_KEYWORDS).expect("standard keywords are valid")
    }

    pub fn contains(&self, word: &str) -> bool {
        self.upper.iter().any(|k| k.eq_ignore_ascii_case(word))
    }

    pub fn classify<'a>(&self, word: &'a str) -> WordClass<'a> {
        if self.contains(word) {
            return WordClass::Keyword;
        }
        let head = word.trim_end_matches(|c: char| c.is_ascii_digit());
        if head.len() < word.len() && !head.is_empty() && self.contains(head) {
            WordClass::Suffixed {
                keyword: head,
                digits: &word[head.len()..],
            }
        } else {
            WordClass::Identifier
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.upper.iter().map(String::as_str)
    }
}

impl Default for KeywordSet {
    fn default() -> Self {
        Self::standard()
    }
}
