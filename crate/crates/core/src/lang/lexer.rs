use num_bigint::BigInt;

use super::error::{DiagCode, LangError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Int(BigInt),
    Ident(String),
    /// Punctuation and operators, longest match first.
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCTS: &[&str] = &[
    "==>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=",
    "%=", "->", "<<", ">>", "(", ")", "{", "}", "[", "]", ";", ",", "=", "<", ">", "+", "-", "*",
    "/", "%", "!", "?", ":", "&", "|", "^", "~", ".", "#",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance!(1);
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            continue;
        }
        if src[i..].starts_with("/*") {
            let (l, c0) = (line, col);
            advance!(2);
            loop {
                if i >= bytes.len() {
                    return Err(LangError::new(
                        DiagCode::Syntax,
                        "unterminated block comment",
                        l,
                        c0,
                    ));
                }
                if src[i..].starts_with("*/") {
                    advance!(2);
                    break;
                }
                advance!(1);
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                advance!(1);
            }
            let is_float = (i < bytes.len() && bytes[i] == b'.')
                || src[start..i].contains(['e', 'E']) && !src[start..i].starts_with("0x");
            if is_float {
                return Err(LangError::new(
                    DiagCode::FloatLiteral,
                    "floating-point literals are not supported",
                    tl,
                    tc,
                ));
            }
            let text = src[start..i].trim_end_matches(['u', 'U', 'l', 'L']);
            let value = if let Some(hex) = text.strip_prefix("0x").or(text.strip_prefix("0X")) {
                BigInt::parse_bytes(hex.as_bytes(), 16)
            } else {
                BigInt::parse_bytes(text.as_bytes(), 10)
            };
            match value {
                Some(v) => out.push(Token {
                    tok: Tok::Int(v),
                    line: tl,
                    col: tc,
                }),
                None => {
                    return Err(LangError::new(
                        DiagCode::Syntax,
                        format!("malformed integer literal `{}`", &src[start..i]),
                        tl,
                        tc,
                    ))
                }
            }
            continue;
        }
        if c == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
            return Err(LangError::new(
                DiagCode::FloatLiteral,
                "floating-point literals are not supported",
                tl,
                tc,
            ));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                advance!(1);
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                line: tl,
                col: tc,
            });
            continue;
        }
        if c == b'"' || c == b'\'' {
            return Err(LangError::new(
                DiagCode::Unsupported,
                "string and character literals are not supported",
                tl,
                tc,
            ));
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                advance!(p.len());
                out.push(Token {
                    tok: Tok::Punct(p),
                    line: tl,
                    col: tc,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(LangError::new(
                    DiagCode::Syntax,
                    format!("unexpected character `{ch}`"),
                    tl,
                    tc,
                ));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn longest_punct_wins() {
        assert_eq!(
            kinds("a==>b<=c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Punct("==>"),
                Tok::Ident("b".into()),
                Tok::Punct("<="),
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn float_literal_is_a_named_diagnostic() {
        let err = tokenize("x = 1.5;").unwrap_err();
        assert_eq!(err.code, DiagCode::FloatLiteral);
        assert_eq!((err.line, err.col), (1, 5));
        assert_eq!(tokenize("x = 2e3;").unwrap_err().code, DiagCode::FloatLiteral);
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("// hi\n/* a\n b */ x").unwrap();
        assert_eq!(toks[0].tok, Tok::Ident("x".into()));
        assert_eq!((toks[0].line, toks[0].col), (3, 7));
    }
}
