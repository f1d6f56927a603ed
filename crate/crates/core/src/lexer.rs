//! Tokenizer shared by the model DSL and the embedded OCL expressions.

use std::fmt;
use std::sync::Arc;

use crate::diag::{DiagCode, Diagnostic};
use crate::span::Span;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    ColonColon,
    Semi,
    Comma,
    Dot,
    Arrow,
    Bar,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    AtPre,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Real(x) => write!(f, "`{x:?}`"),
            Tok::Str(s) => write!(f, "'{s}'"),
            Tok::Eof => f.write_str("end of input"),
            other => {
                let s = match other {
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBracket => "[",
                    Tok::RBracket => "]",
                    Tok::Colon => ":",
                    Tok::ColonColon => "::",
                    Tok::Semi => ";",
                    Tok::Comma => ",",
                    Tok::Dot => ".",
                    Tok::Arrow => "->",
                    Tok::Bar => "|",
                    Tok::Eq => "=",
                    Tok::Ne => "<>",
                    Tok::Lt => "<",
                    Tok::Le => "<=",
                    Tok::Gt => ">",
                    Tok::Ge => ">=",
                    Tok::Plus => "+",
                    Tok::Minus => "-",
                    Tok::Star => "*",
                    Tok::Slash => "/",
                    Tok::AtPre => "@pre",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }
}

/// Splits `source` into tokens. Line comments start with `//` or `--`.
pub fn tokenize(source: &str, file: &Arc<str>) -> Result<Vec<Token>, Diagnostic> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match cur.peek() {
                Some(c) if c.is_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => skip_line(&mut cur),
                Some('-') if cur.peek2() == Some('-') => skip_line(&mut cur),
                _ => break,
            }
        }
        let span = Span::new(file.clone(), cur.line, cur.col);
        let Some(c) = cur.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                span,
            });
            return Ok(out);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '|' => Tok::Bar,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '=' => Tok::Eq,
            ':' => {
                if cur.peek() == Some(':') {
                    cur.bump();
                    Tok::ColonColon
                } else {
                    Tok::Colon
                }
            }
            '-' => {
                if cur.peek() == Some('>') {
                    cur.bump();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            '<' => match cur.peek() {
                Some('>') => {
                    cur.bump();
                    Tok::Ne
                }
                Some('=') => {
                    cur.bump();
                    Tok::Le
                }
                _ => Tok::Lt,
            },
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '@' => {
                let mut word = String::new();
                while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric()) {
                    word.push(c);
                    cur.bump();
                }
                if word != "pre" {
                    return Err(Diagnostic::error(
                        DiagCode::SyntaxError,
                        span,
                        format!("unknown marker `@{word}`; only `@pre` is supported"),
                    ));
                }
                Tok::AtPre
            }
            '\'' | '"' => lex_string(&mut cur, c, &span)?,
            c if c.is_ascii_digit() => lex_number(&mut cur, c, &span)?,
            c if c.is_alphabetic() || c == '_' => {
                let mut word = String::from(c);
                while let Some(c) = cur.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
                    word.push(c);
                    cur.bump();
                }
                Tok::Ident(word)
            }
            other => {
                return Err(Diagnostic::error(
                    DiagCode::SyntaxError,
                    span,
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        out.push(Token { tok, span });
    }
}

fn skip_line(cur: &mut Cursor<'_>) {
    while let Some(c) = cur.peek() {
        if c == '\n' {
            break;
        }
        cur.bump();
    }
}

fn lex_string(cur: &mut Cursor<'_>, quote: char, span: &Span) -> Result<Tok, Diagnostic> {
    let mut s = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(Diagnostic::error(
                    DiagCode::SyntaxError,
                    span.clone(),
                    "unterminated string literal",
                ))
            }
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some(c @ ('\\' | '\'' | '"')) => s.push(c),
                _ => {
                    return Err(Diagnostic::error(
                        DiagCode::SyntaxError,
                        span.clone(),
                        "invalid escape in string literal",
                    ))
                }
            },
            Some(c) if c == quote => return Ok(Tok::Str(s)),
            Some(c) => s.push(c),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, first: char, span: &Span) -> Result<Tok, Diagnostic> {
    let mut text = String::from(first);
    while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
        text.push(c);
        cur.bump();
    }
    // `1.5` is a real; `x.1` never occurs, and `1.foo` is not valid either
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        text.push('.');
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            text.push(c);
            cur.bump();
        }
        return text.parse().map(Tok::Real).map_err(|_| {
            Diagnostic::error(
                DiagCode::SyntaxError,
                span.clone(),
                "malformed real literal",
            )
        });
    }
    text.parse().map(Tok::Int).map_err(|_| {
        Diagnostic::error(
            DiagCode::SyntaxError,
            span.clone(),
            "integer literal out of range",
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s, &Arc::from("t"))
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn operators_and_markers() {
        assert_eq!(
            toks("a.b@pre <> 1 -> :: <= >="),
            vec![
                Tok::Ident("a".into()),
                Tok::Dot,
                Tok::Ident("b".into()),
                Tok::AtPre,
                Tok::Ne,
                Tok::Int(1),
                Tok::Arrow,
                Tok::ColonColon,
                Tok::Le,
                Tok::Ge,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// c\n  -- d\n  x 2.5 'it''", &Arc::from("f"));
        assert!(t.is_err());
        let t = tokenize("// c\n  x 2.5", &Arc::from("f")).unwrap();
        assert_eq!(t[0].span.line, 2);
        assert_eq!(t[0].span.col, 3);
        assert_eq!(t[1].tok, Tok::Real(2.5));
    }

    #[test]
    fn rejects_unknown_marker() {
        let err = tokenize("x@post", &Arc::from("f")).unwrap_err();
        assert_eq!(err.code, DiagCode::SyntaxError);
    }
}
