//! Extraction of candidate invariants from a model reply.

use std::collections::HashSet;

use super::ast::{Invariant, InvariantSet, Program};
use super::error::{DiagCode, LangError};
use super::parser::parse_formula;

/// Content of the last complete fenced code block, if any.
pub fn last_fenced_block(text: &str) -> Option<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("```") {
            match current.take() {
                Some(lines) => blocks.push(lines.join("\n")),
                None => {
                    // Content on the opening fence line after the language tag is ignored.
                    current = Some(Vec::new());
                }
            }
            continue;
        }
        if let Some(lines) = current.as_mut() {
            lines.push(line);
        }
    }
    blocks.pop()
}

fn annotation_block(text: &str) -> Option<String> {
    let start = text.rfind("/*@")?;
    let rest = &text[start + 3..];
    let end = rest.find("*/")?;
    Some(rest[..end].to_string())
}

fn strip_comments(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while !rest.is_empty() {
        if rest.starts_with("/*@") {
            rest = &rest[3..];
        } else if rest.starts_with("*/") {
            rest = &rest[2..];
        } else if rest.starts_with("/*") {
            rest = match rest.find("*/") {
                Some(end) => &rest[end + 2..],
                None => "",
            };
        } else if rest.starts_with("//") {
            rest = match rest.find('\n') {
                Some(end) => &rest[end..],
                None => "",
            };
        } else {
            let ch = rest.chars().next().unwrap();
            out.push(ch);
            rest = &rest[ch.len_utf8()..];
        }
    }
    out
}

/// Splits at `;` outside parentheses.
fn split_statements(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' if depth <= 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty() && s != "..." && s != "…")
        .collect()
}

fn split_label(clause: &str) -> (Option<String>, &str) {
    let Some(colon) = clause.find(':') else {
        return (None, clause);
    };
    let label = clause[..colon].trim();
    let is_ident = !label.is_empty()
        && label
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if is_ident {
        (Some(label.to_string()), &clause[colon + 1..])
    } else {
        (None, clause)
    }
}

fn parse_clause(text: &str, prog: &Program) -> Result<crate::lang::Expr, LangError> {
    parse_formula(text, &prog.var_set()).map_err(|e| LangError {
        message: format!("in `{}`: {}", text.trim(), e.message),
        ..e
    })
}

/// Reads the invariants from a reply: `assert(...);` lines inside the last
/// fenced block, or a `loop invariant id: ...;` annotation block.
pub fn parse_invariant_block(text: &str, prog: &Program) -> Result<InvariantSet, LangError> {
    let block = last_fenced_block(text)
        .or_else(|| annotation_block(text).map(|b| format!("/*@{b}*/")))
        .ok_or_else(|| {
            LangError::new(DiagCode::NoCodeBlock, "no fenced code block in the reply", 1, 1)
        })?;

    let annotated = block.contains("loop invariant");
    let body = strip_comments(if annotated {
        match (block.find("/*@"), block.rfind("*/")) {
            (Some(s), Some(e)) if e > s => &block[s + 3..e],
            _ => &block,
        }
    } else {
        &block
    });

    let mut formulas = Vec::new();
    let mut labels = Vec::new();
    for stmt in split_statements(&body) {
        if annotated {
            let Some(rest) = stmt.strip_prefix("loop invariant") else {
                // `loop assigns` / `loop variant` clauses carry no invariant.
                if stmt.starts_with("loop ") {
                    continue;
                }
                return Err(LangError::new(
                    DiagCode::Syntax,
                    format!("expected `loop invariant ...;`, found `{stmt}`"),
                    1,
                    1,
                ));
            };
            let (label, formula) = split_label(rest.trim());
            labels.push(label);
            formulas.push(parse_clause(formula, prog)?);
        } else {
            let inner = stmt
                .strip_prefix("assert")
                .map(str::trim_start)
                .and_then(|s| s.strip_prefix('('))
                .and_then(|s| s.trim_end().strip_suffix(')'));
            match inner {
                Some(formula) => {
                    labels.push(None);
                    formulas.push(parse_clause(formula, prog)?);
                }
                None => {
                    return Err(LangError::new(
                        DiagCode::Syntax,
                        format!("expected `assert(...);`, found `{stmt}`"),
                        1,
                        1,
                    ))
                }
            }
        }
    }

    let mut seen = HashSet::new();
    let given_ids = labels.iter().all(|l| match l {
        Some(id) => seen.insert(id.clone()),
        None => false,
    });
    let items = formulas
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(k, (formula, label))| Invariant {
            id: match label {
                Some(id) if given_ids => id,
                _ => format!("i{}", k + 1),
            },
            formula,
        })
        .collect();
    Ok(InvariantSet::new(items))
}
