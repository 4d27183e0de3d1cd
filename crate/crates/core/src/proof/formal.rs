//! Formalized proofs: per step, tagged known conditions, one `p ==> q // why`
//! implication per line, and a concluding formula.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{classify_marker, strip_fences, Marker, ProofError, StructuredProof};
use crate::lang::{implication_text, parse_expr_untyped, parse_formula, BinOp, DiagCode, Expr, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Derived,
    Declaration,
}

impl Provenance {
    /// Anything other than the three documented words counts as derived.
    pub fn from_comment(comment: &str) -> Provenance {
        let word: String = comment
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect::<String>()
            .to_ascii_lowercase();
        match word.as_str() {
            "initial" => Provenance::Initial,
            "declaration" => Provenance::Declaration,
            _ => Provenance::Derived,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Initial => "initial",
            Provenance::Derived => "derived",
            Provenance::Declaration => "declaration",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub formula: Expr,
    pub tag: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Implication {
    pub premise: Expr,
    pub conclusion: Expr,
    pub comment: String,
}

impl Implication {
    pub fn formula(&self) -> Expr {
        Expr::implies(
            Expr::paren(self.premise.clone()),
            Expr::paren(self.conclusion.clone()),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepConclusion {
    pub formula: Expr,
    pub comment: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalizedStep {
    /// `STEP N: name` without brackets; empty when the reply had no label.
    pub label: String,
    pub initial: Vec<Condition>,
    pub implications: Vec<Implication>,
    pub conclusion: Option<StepConclusion>,
    /// Names bound by declaration lines, visible in this step only.
    pub declared: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalizedProof {
    pub steps: Vec<FormalizedStep>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Label,
    Initial,
    Proof,
    Conclusion,
}

struct RawStep {
    label: String,
    initial: Vec<(usize, String, String)>,
    proof: Vec<(usize, String, Option<String>)>,
    conclusion: Option<(usize, String, Option<String>)>,
    section: Section,
}

impl RawStep {
    fn new(label: String) -> RawStep {
        RawStep {
            label,
            initial: Vec::new(),
            proof: Vec::new(),
            conclusion: None,
            section: Section::Label,
        }
    }
}

fn split_comment(line: &str) -> (String, Option<String>) {
    match line.find("//") {
        Some(k) => (
            line[..k].trim().to_string(),
            Some(line[k + 2..].trim().to_string()),
        ),
        None => (line.trim().to_string(), None),
    }
}

fn step_label(number: u32, name: &str) -> String {
    if name.is_empty() {
        format!("STEP {number}")
    } else {
        format!("STEP {number}: {name}")
    }
}

fn plain_label(line: &str) -> String {
    line.trim()
        .trim_matches(|c| c == '*' || c == '#')
        .trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .trim()
        .to_string()
}

fn split_steps(text: &str) -> Result<Vec<RawStep>, ProofError> {
    let mut steps: Vec<RawStep> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        let needs_new = |steps: &Vec<RawStep>, s: Section| match steps.last() {
            None => true,
            Some(last) => last.section as u8 >= s as u8,
        };
        match classify_marker(raw) {
            Some((Marker::Step { number, name }, _)) => {
                steps.push(RawStep::new(step_label(number, &name)));
            }
            Some((Marker::Initial, rest)) => {
                if needs_new(&steps, Section::Initial) {
                    steps.push(RawStep::new(String::new()));
                }
                steps.last_mut().unwrap().section = Section::Initial;
                if !rest.trim().is_empty() {
                    return Err(ProofError::Stray {
                        line: line_no,
                        text: rest.trim().to_string(),
                    });
                }
            }
            Some((Marker::Proof, _)) => {
                if needs_new(&steps, Section::Proof) {
                    steps.push(RawStep::new(String::new()));
                }
                steps.last_mut().unwrap().section = Section::Proof;
            }
            Some((Marker::Conclusion, rest)) => {
                if needs_new(&steps, Section::Conclusion) {
                    steps.push(RawStep::new(String::new()));
                }
                let step = steps.last_mut().unwrap();
                step.section = Section::Conclusion;
                if !rest.trim().is_empty() {
                    let (f, c) = split_comment(rest);
                    step.conclusion = Some((line_no, f, c));
                }
            }
            None => {
                let current = steps.last_mut();
                match current.map(|s| (s.section, s)) {
                    Some((Section::Initial, step)) => {
                        let (f, c) = split_comment(trimmed);
                        let c = c.ok_or(ProofError::MissingComment { line: line_no })?;
                        step.initial.push((line_no, f, c));
                    }
                    Some((Section::Proof, step)) => {
                        let (f, c) = split_comment(trimmed);
                        step.proof.push((line_no, f, c));
                    }
                    Some((Section::Conclusion, step)) if step.conclusion.is_none() => {
                        let (f, c) = split_comment(trimmed);
                        step.conclusion = Some((line_no, f, c));
                    }
                    Some((Section::Label, step)) if step.label.is_empty() => {
                        step.label = plain_label(trimmed);
                    }
                    Some((Section::Label, _)) => {
                        return Err(ProofError::Stray {
                            line: line_no,
                            text: trimmed.to_string(),
                        })
                    }
                    // A new unbracketed label after a finished step, or the first line.
                    _ => steps.push(RawStep::new(plain_label(trimmed))),
                }
            }
        }
    }
    Ok(steps)
}

fn parse_in_scope(text: &str, line: usize, scope: &BTreeSet<String>) -> Result<Expr, ProofError> {
    let untyped = parse_expr_untyped(text).map_err(|error| ProofError::Formula { line, error })?;
    if let Some(name) = untyped.vars().into_iter().find(|v| !scope.contains(v)) {
        return Err(ProofError::UnboundName { line, name });
    }
    parse_formula(text, scope).map_err(|error| match error.code {
        DiagCode::UndeclaredVariable => ProofError::UnboundName {
            line,
            name: error.message.clone(),
        },
        _ => ProofError::Formula { line, error },
    })
}

/// Fresh names bound by `name == expr` declaration lines.
fn declared_names(step: &RawStep, prog: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, text, tag) in &step.initial {
        if Provenance::from_comment(tag) != Provenance::Declaration {
            continue;
        }
        if let Ok(e) = parse_expr_untyped(text) {
            if let Expr::Binary(BinOp::Eq, a, b) = e.peel() {
                for side in [a, b] {
                    if let Expr::Var(v) = side.peel() {
                        if !prog.declares(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn parse_formalized_proof(text: &str, prog: &Program) -> Result<FormalizedProof, ProofError> {
    let text = strip_fences(text);
    let mut steps = Vec::new();
    for raw in split_steps(&text)? {
        let declared = declared_names(&raw, prog);
        let mut scope = prog.var_set();
        scope.extend(declared.iter().cloned());

        let mut initial = Vec::new();
        for (line, text, tag) in &raw.initial {
            initial.push(Condition {
                formula: parse_in_scope(text, *line, &scope)?,
                tag: Provenance::from_comment(tag),
            });
        }
        let mut implications = Vec::new();
        for (line, text, comment) in &raw.proof {
            let comment = comment
                .clone()
                .ok_or(ProofError::MissingComment { line: *line })?;
            let whole = parse_in_scope(text, *line, &scope)?;
            let Expr::Binary(BinOp::Implies, premise, conclusion) = whole.into_peeled() else {
                return Err(ProofError::MissingImplication { line: *line });
            };
            if matches!(*conclusion, Expr::Binary(BinOp::Implies, ..)) {
                return Err(ProofError::ChainedImplication { line: *line });
            }
            implications.push(Implication {
                premise: premise.into_peeled(),
                conclusion: conclusion.into_peeled(),
                comment,
            });
        }
        let conclusion = match &raw.conclusion {
            Some((line, text, comment)) => Some(StepConclusion {
                formula: parse_in_scope(text, *line, &scope)?,
                comment: comment.clone().unwrap_or_default(),
            }),
            None => None,
        };
        steps.push(FormalizedStep {
            label: raw.label,
            initial,
            implications,
            conclusion,
            declared,
        });
    }
    Ok(FormalizedProof { steps })
}

impl FormalizedProof {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, s) in self.steps.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            if !s.label.is_empty() {
                let _ = writeln!(out, "[{}]", s.label);
            }
            out.push_str("[Initial]\n");
            for c in &s.initial {
                let _ = writeln!(out, "{} // {}", c.formula, c.tag.as_str());
            }
            out.push_str("\n[Proof]\n");
            for i in &s.implications {
                let _ = writeln!(
                    out,
                    "{} // {}",
                    implication_text(&i.premise, &i.conclusion),
                    i.comment
                );
            }
            if let Some(c) = &s.conclusion {
                out.push_str("\n[Conclusion]\n");
                if c.comment.is_empty() {
                    let _ = writeln!(out, "{}", c.formula);
                } else {
                    let _ = writeln!(out, "{} // {}", c.formula, c.comment);
                }
            }
        }
        out
    }

    /// Labels that match no step of the structured proof. Such steps are
    /// still checked; the caller may report them.
    pub fn unmatched_labels(&self, structured: &StructuredProof) -> Vec<String> {
        let known: Vec<String> = structured
            .step_labels()
            .iter()
            .map(|l| l.to_ascii_lowercase())
            .collect();
        self.steps
            .iter()
            .filter(|s| !known.contains(&s.label.to_ascii_lowercase()))
            .map(|s| s.label.clone())
            .collect()
    }
}
