//! Just enough s-expression reading for solver replies.

use num_bigint::BigInt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Net parenthesis depth of `text`, ignoring quoted symbols and strings.
pub fn paren_balance(text: &str) -> i64 {
    let mut depth = 0;
    let mut in_bar = false;
    let mut in_str = false;
    for ch in text.chars() {
        match ch {
            '|' if !in_str => in_bar = !in_bar,
            '"' if !in_bar => in_str = !in_str,
            '(' if !in_bar && !in_str => depth += 1,
            ')' if !in_bar && !in_str => depth -= 1,
            _ => {}
        }
    }
    depth
}

pub fn parse(text: &str) -> Result<Sexp, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let out = parse_at(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(format!("trailing input after s-expression: `{text}`"));
    }
    Ok(out)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn parse_at(chars: &[char], pos: &mut usize) -> Result<Sexp, String> {
    skip_ws(chars, pos);
    match chars.get(*pos) {
        None => Err("unexpected end of s-expression".into()),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(chars, pos);
                match chars.get(*pos) {
                    None => return Err("unclosed `(`".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_at(chars, pos)?),
                }
            }
        }
        Some(')') => Err("unexpected `)`".into()),
        Some(&open @ ('|' | '"')) => {
            let start = *pos;
            *pos += 1;
            while *pos < chars.len() && chars[*pos] != open {
                *pos += 1;
            }
            if *pos == chars.len() {
                return Err(format!("unterminated {open}"));
            }
            *pos += 1;
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
        Some(_) => {
            let start = *pos;
            while *pos < chars.len() && !chars[*pos].is_whitespace() && !"()".contains(chars[*pos]) {
                *pos += 1;
            }
            Ok(Sexp::Atom(chars[start..*pos].iter().collect()))
        }
    }
}

/// Reads `5` or `(- 5)`.
pub fn int_value(s: &Sexp) -> Option<BigInt> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(minus), inner] if minus == "-" => int_value(inner).map(|v| -v),
            _ => None,
        },
    }
}

/// Symbol text with `|...|` quoting removed.
pub fn symbol_name(atom: &str) -> &str {
    atom.strip_prefix('|')
        .and_then(|s| s.strip_suffix('|'))
        .unwrap_or(atom)
}
