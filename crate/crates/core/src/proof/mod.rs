//! Parsers for the two proof artifacts a model produces: the structured
//! natural-language proof and its line-by-line formalization.

mod formal;
mod structured;

pub use formal::{
    parse_formalized_proof, Condition, FormalizedProof, FormalizedStep, Implication, Provenance,
    StepConclusion,
};
pub use structured::{parse_structured_proof, ProofStep, StructuredProof};

use crate::lang::LangError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProofError {
    #[error("missing [{0}] section")]
    MissingSection(&'static str),
    #[error("line {line}: [{section}] is out of order")]
    SectionOrder { line: usize, section: &'static str },
    #[error("line {line}: expected STEP {expected} or later, found STEP {found}")]
    StepNumber { line: usize, expected: u32, found: u32 },
    #[error("the proof has no [STEP N: ...] blocks")]
    NoSteps,
    #[error("line {line}: missing `//` comment")]
    MissingComment { line: usize },
    #[error("line {line}: expected an implication `p ==> q`")]
    MissingImplication { line: usize },
    #[error("line {line}: ambiguous chained `==>`; parenthesize the conclusion")]
    ChainedImplication { line: usize },
    #[error("line {line}: `{name}` is neither a program variable nor declared in this step")]
    UnboundName { line: usize, name: String },
    #[error("line {line}: {error}")]
    Formula { line: usize, error: LangError },
    #[error("line {line}: unexpected text `{text}`")]
    Stray { line: usize, text: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Marker {
    Initial,
    Proof,
    Conclusion,
    Step { number: u32, name: String },
}

/// Recognizes `[Initial]`, `[Proof]`, `[Conclusion]` and `[STEP N: name]`,
/// tolerating markdown decoration around the brackets. Returns the marker and
/// the text after it on the same line.
pub(crate) fn classify_marker(line: &str) -> Option<(Marker, &str)> {
    let t = line.trim().trim_start_matches(['#', '*', '-', ' ', '>']);
    let inner_start = t.strip_prefix('[')?;
    let close = if inner_start.trim_end_matches('*').trim_end().ends_with(']') {
        inner_start.trim_end_matches('*').trim_end().len() - 1
    } else {
        inner_start.find(']')?
    };
    let inner = inner_start[..close].trim();
    let rest = inner_start[close + 1..].trim_start_matches('*');
    let lower = inner.to_ascii_lowercase();
    let marker = match lower.as_str() {
        "initial" => Marker::Initial,
        "proof" => Marker::Proof,
        "conclusion" => Marker::Conclusion,
        _ => {
            let after = lower.strip_prefix("step")?;
            let digits: String = after.trim_start().chars().take_while(char::is_ascii_digit).collect();
            if digits.is_empty() {
                return None;
            }
            let number = digits.parse().ok()?;
            // Recover the original-case name after the number.
            let offset = inner.len() - after.len();
            let tail = inner[offset..].trim_start();
            let tail = tail[digits.len()..].trim_start();
            let name = tail.strip_prefix(':').unwrap_or(tail).trim().to_string();
            Marker::Step { number, name }
        }
    };
    Some((marker, rest))
}

/// Removes markdown fence lines, keeping their content.
pub(crate) fn strip_fences(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers() {
        assert_eq!(classify_marker("[Initial]"), Some((Marker::Initial, "")));
        assert_eq!(classify_marker("**[Proof]**"), Some((Marker::Proof, "")));
        assert_eq!(
            classify_marker("[STEP 3: Case flag == 0]"),
            Some((
                Marker::Step {
                    number: 3,
                    name: "Case flag == 0".into()
                },
                ""
            ))
        );
        assert_eq!(
            classify_marker("### [STEP 12]"),
            Some((
                Marker::Step {
                    number: 12,
                    name: String::new()
                },
                ""
            ))
        );
        assert_eq!(classify_marker("(a > 0) ==> (b > 0)"), None);
        assert_eq!(classify_marker("[STEP x]"), None);
    }
}
