//! Tokenizer for `.flp` sources and value literals.

use crate::ast::Span;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    KwData,
    KwFlip,
    KwExtern,
    Lower(String),
    Upper(String),
    IntLit(i64),
    Colon,
    Equals,
    BiArrow, // <->
    Arrow,   // ->
    Lt,
    Gt,
    LParen,
    RParen,
    Comma,
    Semi,
    Pipe,
    LBrace,
    RBrace,
    Underscore,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::KwData => write!(f, "data"),
            Tok::KwFlip => write!(f, "flip"),
            Tok::KwExtern => write!(f, "extern"),
            Tok::Lower(s) | Tok::Upper(s) => write!(f, "{}", s),
            Tok::IntLit(n) => write!(f, "{}", n),
            Tok::Colon => write!(f, ":"),
            Tok::Equals => write!(f, "="),
            Tok::BiArrow => write!(f, "<->"),
            Tok::Arrow => write!(f, "->"),
            Tok::Lt => write!(f, "<"),
            Tok::Gt => write!(f, ">"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Comma => write!(f, ","),
            Tok::Semi => write!(f, ";"),
            Tok::Pipe => write!(f, "|"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::Underscore => write!(f, "_"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($tok:expr, $span:expr) => {
            out.push(Token { tok: $tok, span: $span })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '-' {
                    // line comment
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                } else if i + 1 < chars.len() && chars[i + 1] == '>' {
                    push!(Tok::Arrow, span);
                    i += 2;
                    col += 2;
                } else if i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    let (n, len) = lex_int(&chars[i + 1..]);
                    let v: i64 = n.parse().map_err(|_| LexError {
                        span,
                        message: "integer literal out of range".to_string(),
                    })?;
                    push!(Tok::IntLit(-v), span);
                    i += 1 + len;
                    col += 1 + len as u32;
                } else {
                    return Err(LexError {
                        span,
                        message: "unexpected '-' (did you mean '->' or a '--' comment?)".to_string(),
                    });
                }
            }
            '<' => {
                if i + 2 < chars.len() && chars[i + 1] == '-' && chars[i + 2] == '>' {
                    push!(Tok::BiArrow, span);
                    i += 3;
                    col += 3;
                } else if i + 1 < chars.len() && chars[i + 1] == '-' {
                    return Err(LexError {
                        span,
                        message: "unexpected '<-' (did you mean '<->'?)".to_string(),
                    });
                } else {
                    push!(Tok::Lt, span);
                    i += 1;
                    col += 1;
                }
            }
            '>' => {
                push!(Tok::Gt, span);
                i += 1;
                col += 1;
            }
            ':' => {
                push!(Tok::Colon, span);
                i += 1;
                col += 1;
            }
            '=' => {
                push!(Tok::Equals, span);
                i += 1;
                col += 1;
            }
            '(' => {
                push!(Tok::LParen, span);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Tok::RParen, span);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Tok::Comma, span);
                i += 1;
                col += 1;
            }
            ';' => {
                push!(Tok::Semi, span);
                i += 1;
                col += 1;
            }
            '|' => {
                push!(Tok::Pipe, span);
                i += 1;
                col += 1;
            }
            '{' => {
                push!(Tok::LBrace, span);
                i += 1;
                col += 1;
            }
            '}' => {
                push!(Tok::RBrace, span);
                i += 1;
                col += 1;
            }
            '_' => {
                push!(Tok::Underscore, span);
                i += 1;
                col += 1;
            }
            c if c.is_ascii_digit() => {
                let (n, len) = lex_int(&chars[i..]);
                let v: i64 = n.parse().map_err(|_| LexError {
                    span,
                    message: "integer literal out of range".to_string(),
                })?;
                push!(Tok::IntLit(v), span);
                i += len;
                col += len as u32;
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                let tok = match word.as_str() {
                    "data" => Tok::KwData,
                    "flip" => Tok::KwFlip,
                    "extern" => Tok::KwExtern,
                    _ => {
                        if word.chars().next().unwrap().is_ascii_uppercase() {
                            Tok::Upper(word)
                        } else {
                            Tok::Lower(word)
                        }
                    }
                };
                push!(tok, span);
            }
            other => {
                return Err(LexError {
                    span,
                    message: format!("unexpected character '{}'", other),
                });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(out)
}

fn lex_int(chars: &[char]) -> (String, usize) {
    let mut len = 0;
    while len < chars.len() && chars[len].is_ascii_digit() {
        len += 1;
    }
    (chars[..len].iter().collect(), len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biarrow_vs_brackets() {
        let toks = lex("a <-> b < f > c").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|t| &t.tok).collect();
        assert!(matches!(kinds[1], Tok::BiArrow));
        assert!(matches!(kinds[3], Tok::Lt));
        assert!(matches!(kinds[5], Tok::Gt));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = lex("x -- the rest is ignored <-> y\nz").unwrap();
        assert_eq!(toks.len(), 3); // x, z, eof
    }

    #[test]
    fn negative_int() {
        let toks = lex("-42").unwrap();
        assert_eq!(toks[0].tok, Tok::IntLit(-42));
    }

    #[test]
    fn lone_left_arrow_rejected() {
        assert!(lex("a <- b").is_err());
    }
}
