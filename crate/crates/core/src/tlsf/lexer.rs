//! Token stream for the TLSF subset.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Ident(String),
    Num(i64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Colon,
    Assign,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    Iff,
    Le,
    Lt,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Semi => "`;`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Assign => "`=`".to_string(),
            Tok::Bang => "`!`".to_string(),
            Tok::AndAnd => "`&&`".to_string(),
            Tok::OrOr => "`||`".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Iff => "`<->`".to_string(),
            Tok::Le => "`<=`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub(super) fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            tokens.push(Token {
                tok: $tok,
                line,
                col,
            });
            i += $len;
            col += $len;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let c1 = chars.get(i + 1).copied();
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if c1 == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if c1 == Some('*') => {
                i += 2;
                col += 2;
                loop {
                    if i >= chars.len() {
                        return Err(SyntaxError {
                            line,
                            col,
                            expected: alloc::vec!["`*/`".to_string()],
                            found: "end of input".to_string(),
                        });
                    }
                    if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                        i += 2;
                        col += 2;
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
            }
            '"' => {
                let start_line = line;
                let start_col = col;
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(SyntaxError {
                                line: start_line,
                                col: start_col,
                                expected: alloc::vec!["closing `\"`".to_string()],
                                found: "end of line".to_string(),
                            })
                        }
                        Some('"') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                tokens.push(Token {
                    tok: Tok::Str(s),
                    line: start_line,
                    col: start_col,
                });
            }
            '{' => push!(Tok::LBrace, 1),
            '}' => push!(Tok::RBrace, 1),
            '(' => push!(Tok::LParen, 1),
            ')' => push!(Tok::RParen, 1),
            '[' => push!(Tok::LBracket, 1),
            ']' => push!(Tok::RBracket, 1),
            ';' => push!(Tok::Semi, 1),
            ',' => push!(Tok::Comma, 1),
            ':' => push!(Tok::Colon, 1),
            '=' => push!(Tok::Assign, 1),
            '!' => push!(Tok::Bang, 1),
            '&' if c1 == Some('&') => push!(Tok::AndAnd, 2),
            '|' if c1 == Some('|') => push!(Tok::OrOr, 2),
            '-' if c1 == Some('>') => push!(Tok::Arrow, 2),
            '<' if c1 == Some('-') && chars.get(i + 2) == Some(&'>') => push!(Tok::Iff, 3),
            '<' if c1 == Some('=') => push!(Tok::Le, 2),
            '<' => push!(Tok::Lt, 1),
            '+' => push!(Tok::Plus, 1),
            '-' => push!(Tok::Minus, 1),
            '*' => push!(Tok::Star, 1),
            '/' => push!(Tok::Slash, 1),
            c if c.is_ascii_digit() => {
                let start_col = col;
                let mut n: i64 = 0;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    n = n
                        .checked_mul(10)
                        .and_then(|n| n.checked_add((chars[i] as u8 - b'0') as i64))
                        .ok_or(SyntaxError {
                            line,
                            col: start_col,
                            expected: alloc::vec!["a 64-bit integer".to_string()],
                            found: "integer overflow".to_string(),
                        })?;
                    i += 1;
                    col += 1;
                }
                tokens.push(Token {
                    tok: Tok::Num(n),
                    line,
                    col: start_col,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start_col = col;
                let mut s = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    s.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(s),
                    line,
                    col: start_col,
                });
            }
            other => {
                return Err(SyntaxError {
                    line,
                    col,
                    expected: alloc::vec!["a token".to_string()],
                    found: format!("`{other}`"),
                })
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(tokens)
}
