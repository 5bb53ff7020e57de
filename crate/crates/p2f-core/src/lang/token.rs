//! Token set for the MCL lexer.

use crate::span::Span;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    // keywords
    Class,
    Feature,
    End,
    Require,
    Ensure,
    Modify,
    Local,
    Do,
    If,
    Then,
    Else,
    From,
    Until,
    Invariant,
    Loop,
    Check,
    Not,
    And,
    Or,
    Implies,
    Old,
    True,
    False,
    IntegerTy,
    BooleanTy,
    // punctuation and operators
    Colon,
    Comma,
    LParen,
    RParen,
    Assign, // :=
    Plus,
    Minus,
    Star,
    Backslash2, // \\ (integer modulo)
    Eq,         // =
    Ne,         // /=
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        match self {
            Ident(s) => write!(f, "identifier `{s}`"),
            Int(n) => write!(f, "integer `{n}`"),
            Class => write!(f, "`class`"),
            Feature => write!(f, "`feature`"),
            End => write!(f, "`end`"),
            Require => write!(f, "`require`"),
            Ensure => write!(f, "`ensure`"),
            Modify => write!(f, "`modify`"),
            Local => write!(f, "`local`"),
            Do => write!(f, "`do`"),
            If => write!(f, "`if`"),
            Then => write!(f, "`then`"),
            Else => write!(f, "`else`"),
            From => write!(f, "`from`"),
            Until => write!(f, "`until`"),
            Invariant => write!(f, "`invariant`"),
            Loop => write!(f, "`loop`"),
            Check => write!(f, "`check`"),
            Not => write!(f, "`not`"),
            And => write!(f, "`and`"),
            Or => write!(f, "`or`"),
            Implies => write!(f, "`implies`"),
            Old => write!(f, "`old`"),
            True => write!(f, "`True`"),
            False => write!(f, "`False`"),
            IntegerTy => write!(f, "`INTEGER`"),
            BooleanTy => write!(f, "`BOOLEAN`"),
            Colon => write!(f, "`:`"),
            Comma => write!(f, "`,`"),
            LParen => write!(f, "`(`"),
            RParen => write!(f, "`)`"),
            Assign => write!(f, "`:=`"),
            Plus => write!(f, "`+`"),
            Minus => write!(f, "`-`"),
            Star => write!(f, "`*`"),
            Backslash2 => write!(f, "`\\\\`"),
            Eq => write!(f, "`=`"),
            Ne => write!(f, "`/=`"),
            Lt => write!(f, "`<`"),
            Le => write!(f, "`<=`"),
            Gt => write!(f, "`>`"),
            Ge => write!(f, "`>=`"),
            Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn is_keyword(&self) -> bool {
        use TokenKind::*;
        matches!(
            self.kind,
            Class
                | Feature
                | End
                | Require
                | Ensure
                | Modify
                | Local
                | Do
                | If
                | Then
                | Else
                | From
                | Until
                | Invariant
                | Loop
                | Check
                | Not
                | And
                | Or
                | Implies
                | Old
                | True
                | False
                | IntegerTy
                | BooleanTy
        )
    }
}
