//! A small SQL lexer. It only needs to find words outside literals and
//! comments, and to hand every byte back unchanged.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Number,
    /// `'...'` with `''` as the escape for a quote.
    StringLit,
    /// `"..."` with `""` as the escape.
    QuotedIdent,
    /// `--` to the end of input.
    Comment,
    Whitespace,
    Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnterminatedLiteral {
    pub offset: usize,
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn lex(sql: &str) -> Result<Vec<Token<'_>>, UnterminatedLiteral> {
    let mut out = Vec::new();
    let mut rest = sql;
    let mut offset = 0;
    while let Some(c) = rest.chars().next() {
        let (kind, len) = if c.is_whitespace() {
            let n = rest.find(|c: char| !c.is_whitespace()).unwrap_or(rest.len());
            (TokenKind::Whitespace, n)
        } else if rest.starts_with("--") {
            (TokenKind::Comment, rest.len())
        } else if c == '\'' || c == '"' {
            let kind = if c == '\'' { TokenKind::StringLit } else { TokenKind::QuotedIdent };
            let bytes = rest.as_bytes();
            let mut i = 1;
            loop {
                match bytes[i..].iter().position(|&b| b == c as u8) {
                    None => return Err(UnterminatedLiteral { offset }),
                    Some(p) => {
                        i += p + 1;
                        if bytes.get(i) == Some(&(c as u8)) {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
            (kind, i)
        } else if is_word_start(c) {
            let n = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
            (TokenKind::Word, n)
        } else if c.is_ascii_digit() {
            let n = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            (TokenKind::Number, n)
        } else {
            (TokenKind::Symbol, c.len_utf8())
        };
        out.push(Token {
            kind,
            text: &rest[..len],
            offset,
        });
        rest = &rest[len..];
        offset += len;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(sql: &str) -> Vec<(TokenKind, &str)> {
        lex(sql).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn tokens_concatenate_to_input() {
        let q = "select a,b from t where s = 'it''s' and \"x\"\"y\" >= 10 -- tail 'x";
        let toks = lex(q).unwrap();
        assert_eq!(toks.iter().map(|t| t.text).collect::<String>(), q);
    }

    #[test]
    fn literal_and_comment_are_opaque() {
        use TokenKind::*;
        assert_eq!(
            kinds("x='select' --or"),
            vec![(Word, "x"), (Symbol, "="), (StringLit, "'select'"), (Whitespace, " "), (Comment, "--or")]
        );
        assert_eq!(kinds("1=1"), vec![(Number, "1"), (Symbol, "="), (Number, "1")]);
    }

    #[test]
    fn unterminated() {
        assert_eq!(lex("a = 'oops").unwrap_err(), UnterminatedLiteral { offset: 4 });
        assert!(lex("'a''").is_err());
    }
}
