//! Lexer for MCL source text.
//!
//! `--` starts a comment running to end of line. Whitespace separates tokens
//! and is otherwise insignificant.

use super::token::{Token, TokenKind};
use crate::span::Span;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("unexpected character `{ch}`")]
    UnexpectedChar { ch: char, span: Span },
    #[error("integer literal out of range")]
    IntOutOfRange { span: Span },
}

impl LexError {
    pub fn span(&self) -> Span {
        match self {
            LexError::UnexpectedChar { span, .. } => *span,
            LexError::IntOutOfRange { span } => *span,
        }
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // line comment
        if c == '-' && i + 1 < bytes.len() && bytes[i + 1] == b'-' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let kind = match c {
            'a'..='z' | 'A'..='Z' | '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                keyword_or_ident(&source[start..i])
            }
            '0'..='9' => {
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                match source[start..i].parse::<i64>() {
                    Ok(n) => TokenKind::Int(n),
                    Err(_) => {
                        return Err(LexError::IntOutOfRange {
                            span: Span::new(start, i),
                        })
                    }
                }
            }
            ':' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Assign
                } else {
                    TokenKind::Colon
                }
            }
            ',' => {
                i += 1;
                TokenKind::Comma
            }
            '(' => {
                i += 1;
                TokenKind::LParen
            }
            ')' => {
                i += 1;
                TokenKind::RParen
            }
            '+' => {
                i += 1;
                TokenKind::Plus
            }
            '-' => {
                i += 1;
                TokenKind::Minus
            }
            '*' => {
                i += 1;
                TokenKind::Star
            }
            '\\' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'\\' {
                    i += 1;
                    TokenKind::Backslash2
                } else {
                    return Err(LexError::UnexpectedChar {
                        ch: '\\',
                        span: Span::new(start, i),
                    });
                }
            }
            '=' => {
                i += 1;
                TokenKind::Eq
            }
            '/' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Ne
                } else {
                    return Err(LexError::UnexpectedChar {
                        ch: '/',
                        span: Span::new(start, i),
                    });
                }
            }
            '<' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Le
                } else {
                    TokenKind::Lt
                }
            }
            '>' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            other => {
                return Err(LexError::UnexpectedChar {
                    ch: other,
                    span: Span::new(start, start + other.len_utf8()),
                })
            }
        };
        tokens.push(Token {
            kind,
            span: Span::new(start, i),
        });
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::point(source.len()),
    });
    Ok(tokens)
}

fn keyword_or_ident(text: &str) -> TokenKind {
    match text {
        "class" => TokenKind::Class,
        "feature" => TokenKind::Feature,
        "end" => TokenKind::End,
        "require" => TokenKind::Require,
        "ensure" => TokenKind::Ensure,
        "modify" => TokenKind::Modify,
        "local" => TokenKind::Local,
        "do" => TokenKind::Do,
        "if" => TokenKind::If,
        "then" => TokenKind::Then,
        "else" => TokenKind::Else,
        "from" => TokenKind::From,
        "until" => TokenKind::Until,
        "invariant" => TokenKind::Invariant,
        "loop" => TokenKind::Loop,
        "check" => TokenKind::Check,
        "not" => TokenKind::Not,
        "and" => TokenKind::And,
        "or" => TokenKind::Or,
        "implies" => TokenKind::Implies,
        "old" => TokenKind::Old,
        "True" => TokenKind::True,
        "False" => TokenKind::False,
        "INTEGER" => TokenKind::IntegerTy,
        "BOOLEAN" => TokenKind::BooleanTy,
        _ => TokenKind::Ident(text.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn lexes_operators_and_keywords() {
        use TokenKind::*;
        assert_eq!(
            kinds("x := (old x + 1) \\\\ 24"),
            vec![
                Ident("x".into()),
                Assign,
                LParen,
                Old,
                Ident("x".into()),
                Plus,
                Int(1),
                RParen,
                Backslash2,
                Int(24),
                Eof
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        use TokenKind::*;
        assert_eq!(
            kinds("a -- whole comment := 3\nb"),
            vec![Ident("a".into()), Ident("b".into()), Eof]
        );
    }

    #[test]
    fn comparison_tokens() {
        use TokenKind::*;
        assert_eq!(kinds("= /= < <= > >="), vec![Eq, Ne, Lt, Le, Gt, Ge, Eof]);
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(tokenize("x ? y").is_err());
        assert!(tokenize("x / y").is_err());
        assert!(tokenize("x \\ y").is_err());
    }

    #[test]
    fn spans_cover_token_text() {
        let toks = tokenize("ab  cd").unwrap();
        assert_eq!(toks[0].span, Span::new(0, 2));
        assert_eq!(toks[1].span, Span::new(4, 6));
    }
}
