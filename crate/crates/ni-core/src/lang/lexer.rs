//! Tokenizer for `.ni` program files. `//` comments run to end of line.

use super::ast::Span;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    // keywords
    Fun,
    Rec,
    RefKw,
    Fork,
    If,
    Then,
    Else,
    Match,
    With,
    Inl,
    Inr,
    End,
    Let,
    In,
    Fst,
    Snd,
    True,
    False,
    Cas,
    Faa,
    ArrayMake,
    ArrayGet,
    ArraySet,
    NoneKw,
    SomeKw,
    Output,
    High,
    Extern,
    Def,
    Impl,
    Main,
    UnitTy,
    IntTy,
    BoolTy,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    FatArrow,
    ThinArrow,
    LArrow,
    Assign, // `=`
    Lt,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    OrOr,
    Bang,
    Dot,
    DotDot,
    Caret,
    At,
    Pipe,
    Hash,
    Underscore,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Fun => write!(f, "`fun`"),
            Tok::Rec => write!(f, "`rec`"),
            Tok::RefKw => write!(f, "`ref`"),
            Tok::Fork => write!(f, "`fork`"),
            Tok::If => write!(f, "`if`"),
            Tok::Then => write!(f, "`then`"),
            Tok::Else => write!(f, "`else`"),
            Tok::Match => write!(f, "`match`"),
            Tok::With => write!(f, "`with`"),
            Tok::Inl => write!(f, "`inl`"),
            Tok::Inr => write!(f, "`inr`"),
            Tok::End => write!(f, "`end`"),
            Tok::Let => write!(f, "`let`"),
            Tok::In => write!(f, "`in`"),
            Tok::Fst => write!(f, "`fst`"),
            Tok::Snd => write!(f, "`snd`"),
            Tok::True => write!(f, "`true`"),
            Tok::False => write!(f, "`false`"),
            Tok::Cas => write!(f, "`cas`"),
            Tok::Faa => write!(f, "`faa`"),
            Tok::ArrayMake => write!(f, "`array_make`"),
            Tok::ArrayGet => write!(f, "`array_get`"),
            Tok::ArraySet => write!(f, "`array_set`"),
            Tok::NoneKw => write!(f, "`none`"),
            Tok::SomeKw => write!(f, "`some`"),
            Tok::Output => write!(f, "`output`"),
            Tok::High => write!(f, "`high`"),
            Tok::Extern => write!(f, "`extern`"),
            Tok::Def => write!(f, "`def`"),
            Tok::Impl => write!(f, "`impl`"),
            Tok::Main => write!(f, "`main`"),
            Tok::UnitTy => write!(f, "`unit`"),
            Tok::IntTy => write!(f, "`int`"),
            Tok::BoolTy => write!(f, "`bool`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::FatArrow => write!(f, "`=>`"),
            Tok::ThinArrow => write!(f, "`->`"),
            Tok::LArrow => write!(f, "`<-`"),
            Tok::Assign => write!(f, "`=`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::AndAnd => write!(f, "`&&`"),
            Tok::OrOr => write!(f, "`||`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::DotDot => write!(f, "`..`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::At => write!(f, "`@`"),
            Tok::Pipe => write!(f, "`|`"),
            Tok::Hash => write!(f, "`#`"),
            Tok::Underscore => write!(f, "`_`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{span}: {msg}")]
pub struct LexError {
    pub span: Span,
    pub msg: String,
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "fun" => Tok::Fun,
        "rec" => Tok::Rec,
        "ref" => Tok::RefKw,
        "fork" => Tok::Fork,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "match" => Tok::Match,
        "with" => Tok::With,
        "inl" => Tok::Inl,
        "inr" => Tok::Inr,
        "end" => Tok::End,
        "let" => Tok::Let,
        "in" => Tok::In,
        "fst" => Tok::Fst,
        "snd" => Tok::Snd,
        "true" => Tok::True,
        "false" => Tok::False,
        "cas" => Tok::Cas,
        "faa" => Tok::Faa,
        "array_make" => Tok::ArrayMake,
        "array_get" => Tok::ArrayGet,
        "array_set" => Tok::ArraySet,
        "none" => Tok::NoneKw,
        "some" => Tok::SomeKw,
        "output" => Tok::Output,
        "high" => Tok::High,
        "extern" => Tok::Extern,
        "def" => Tok::Def,
        "impl" => Tok::Impl,
        "main" => Tok::Main,
        "unit" => Tok::UnitTy,
        "int" => Tok::IntTy,
        "bool" => Tok::BoolTy,
        "_" => Tok::Underscore,
        _ => return None,
    })
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.chars().peekable();

    macro_rules! push {
        ($tok:expr, $l:expr, $c:expr) => {
            out.push(Token {
                tok: $tok,
                span: Span { line: $l, col: $c },
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '/' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'/') {
                    // comment to end of line
                    for c in chars.by_ref() {
                        if c == '\n' {
                            line += 1;
                            col = 1;
                            break;
                        }
                    }
                } else {
                    push!(Tok::Slash, l0, c0);
                }
            }
            c if c.is_ascii_digit() => {
                let mut n: i64 = 0;
                while let Some(&d) = chars.peek() {
                    if let Some(dig) = d.to_digit(10) {
                        n = n
                            .checked_mul(10)
                            .and_then(|n| n.checked_add(dig as i64))
                            .ok_or_else(|| LexError {
                                span: Span { line: l0, col: c0 },
                                msg: "integer literal overflows i64".into(),
                            })?;
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                push!(Tok::Int(n), l0, c0);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                match keyword(&s) {
                    Some(k) => push!(k, l0, c0),
                    None => push!(Tok::Ident(s), l0, c0),
                }
            }
            _ => {
                chars.next();
                col += 1;
                let two = |chars: &mut std::iter::Peekable<std::str::Chars>,
                           col: &mut u32,
                           next: char|
                 -> bool {
                    if chars.peek() == Some(&next) {
                        chars.next();
                        *col += 1;
                        true
                    } else {
                        false
                    }
                };
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    '=' => {
                        if two(&mut chars, &mut col, '>') {
                            Tok::FatArrow
                        } else {
                            Tok::Assign
                        }
                    }
                    '-' => {
                        if two(&mut chars, &mut col, '>') {
                            Tok::ThinArrow
                        } else {
                            Tok::Minus
                        }
                    }
                    '<' => {
                        if two(&mut chars, &mut col, '-') {
                            Tok::LArrow
                        } else {
                            Tok::Lt
                        }
                    }
                    '+' => Tok::Plus,
                    '*' => Tok::Star,
                    '&' => {
                        if two(&mut chars, &mut col, '&') {
                            Tok::AndAnd
                        } else {
                            return Err(LexError {
                                span: Span { line: l0, col: c0 },
                                msg: "expected `&&`".into(),
                            });
                        }
                    }
                    '|' => {
                        if two(&mut chars, &mut col, '|') {
                            Tok::OrOr
                        } else {
                            Tok::Pipe
                        }
                    }
                    '!' => Tok::Bang,
                    '.' => {
                        if two(&mut chars, &mut col, '.') {
                            Tok::DotDot
                        } else {
                            Tok::Dot
                        }
                    }
                    '^' => Tok::Caret,
                    '@' => Tok::At,
                    '#' => Tok::Hash,
                    other => {
                        return Err(LexError {
                            span: Span { line: l0, col: c0 },
                            msg: format!("unexpected character `{other}`"),
                        })
                    }
                };
                push!(tok, l0, c0);
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_longest_match() {
        let toks = lex("<- < -> - => = .. . && ||").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::LArrow,
                Tok::Lt,
                Tok::ThinArrow,
                Tok::Minus,
                Tok::FatArrow,
                Tok::Assign,
                Tok::DotDot,
                Tok::Dot,
                Tok::AndAnd,
                Tok::OrOr,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        let toks = lex("1 // two three\n2").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(kinds, vec![Tok::Int(1), Tok::Int(2), Tok::Eof]);
    }

    #[test]
    fn tracks_positions() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!(toks[1].span, Span { line: 2, col: 3 });
    }
}
