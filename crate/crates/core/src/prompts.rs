//! Prompt rendering from the text assets under `templates/`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::checker::{CheckReport, ErrorKind, ReasoningError};
use crate::lang::{Expr, InvariantSet, Program};
use crate::proof::StructuredProof;
use crate::vcgen::{VcKind, VcResult, VerificationCondition};

pub const TEMPLATE_VERSION: &str = "v1";

macro_rules! template {
    ($name:literal) => {
        include_str!(concat!("../templates/v1/", $name, ".txt"))
    };
}

const INITIAL: &str = template!("initial");
const PROOF_REQUEST: &str = template!("proof_request");
const OBLIGATION_ESTABLISHMENT: &str = template!("obligation_establishment");
const OBLIGATION_PRESERVATION: &str = template!("obligation_preservation");
const OBLIGATION_POSTCONDITION: &str = template!("obligation_postcondition");
const FORMALIZE_REQUEST: &str = template!("formalize_request");
const ERROR_INVALID: &str = template!("error_invalid");
const ERROR_INVALID_SOFT: &str = template!("error_invalid_soft");
const ERROR_UNSUPPORTED: &str = template!("error_unsupported");
const ERROR_UNSUPPORTED_SOFT: &str = template!("error_unsupported_soft");
const ERROR_INITIAL: &str = template!("error_initial");
const ERROR_INITIAL_SOFT: &str = template!("error_initial_soft");
const FRAMING_SUFFICIENT: &str = template!("framing_sufficient");
const FRAMING_FAILING: &str = template!("framing_failing");
const REPAIR_SUFFICIENT: &str = template!("repair_sufficient");
const REPAIR_FAILING: &str = template!("repair_failing");
const FALLBACK: &str = template!("fallback");
const REMINDER: &str = template!("reminder");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptKind {
    InitialSynthesis,
    ProofRequest,
    FormalizeRequest,
    Feedback,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub text: String,
    pub slots: BTreeMap<String, String>,
}

impl PromptBundle {
    /// Appends the format reminder used when a reply could not be parsed.
    pub fn with_reminder(&self, problem: &str) -> PromptBundle {
        let mut slots = self.slots.clone();
        slots.insert("problem".into(), problem.into());
        PromptBundle {
            kind: self.kind,
            text: format!("{}{}", self.text, fill(REMINDER, &slots)),
            slots,
        }
    }
}

/// Names of the `{name}` placeholders in a template, in order of appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_slot_name(&after[..close]) => {
                out.push(after[..close].to_string());
                rest = &after[close + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

/// Single left-to-right pass, so braces inside values are never expanded.
/// Panics on a placeholder without a value: templates and callers ship
/// together.
fn fill(template: &str, slots: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_slot_name(&after[..close]) => {
                let name = &after[..close];
                let value = slots
                    .get(name)
                    .unwrap_or_else(|| panic!("template slot `{name}` has no value"));
                out.push_str(value);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn slots<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn grouped(e: &Expr) -> String {
    format!("({})", e.peel())
}

pub fn render_initial(prog_source: &str) -> PromptBundle {
    let s = slots([("program", prog_source.trim_end().to_string())]);
    PromptBundle {
        kind: PromptKind::InitialSynthesis,
        text: fill(INITIAL, &s),
        slots: s,
    }
}

fn obligation(prog: &Program, inv: &InvariantSet, vc: &VerificationCondition) -> String {
    let invariant = inv
        .get(&vc.target)
        .map(|i| i.formula.to_string())
        .unwrap_or_else(|| vc.goal.to_string());
    let s = slots([
        ("invariant", invariant),
        ("loop_condition", prog.loop_cond.to_string()),
        ("assertion", prog.assertion.to_string()),
    ]);
    let t = match vc.kind {
        VcKind::Establishment => OBLIGATION_ESTABLISHMENT,
        VcKind::Preservation => OBLIGATION_PRESERVATION,
        VcKind::PostCondition => OBLIGATION_POSTCONDITION,
    };
    fill(t, &s).trim_end().to_string()
}

pub fn render_proof_request(prog: &Program, inv: &InvariantSet, vc: &VerificationCondition) -> PromptBundle {
    let s = slots([
        ("invariants", inv.to_asserts()),
        ("obligation", obligation(prog, inv, vc)),
    ]);
    PromptBundle {
        kind: PromptKind::ProofRequest,
        text: fill(PROOF_REQUEST, &s),
        slots: s,
    }
}

pub fn render_formalize_request(proof: &StructuredProof) -> PromptBundle {
    let s = slots([("proof", proof.to_text().trim_end().to_string())]);
    PromptBundle {
        kind: PromptKind::FormalizeRequest,
        text: fill(FORMALIZE_REQUEST, &s),
        slots: s,
    }
}

fn error_paragraph(err: &ReasoningError) -> String {
    let template = match (err.kind, err.is_soft()) {
        (ErrorKind::InvalidImplication, false) => ERROR_INVALID,
        (ErrorKind::InvalidImplication, true) => ERROR_INVALID_SOFT,
        (ErrorKind::UnsupportedPremise, false) => ERROR_UNSUPPORTED,
        (ErrorKind::UnsupportedPremise, true) => ERROR_UNSUPPORTED_SOFT,
        (ErrorKind::BadInitialCondition, false) => ERROR_INITIAL,
        (ErrorKind::BadInitialCondition, true) => ERROR_INITIAL_SOFT,
    };
    let step = if err.step_label.is_empty() {
        "your proof".to_string()
    } else {
        err.step_label.clone()
    };
    let s = slots([
        ("step", step),
        ("comment", err.comment.clone()),
        ("condition", grouped(err.condition())),
        (
            "conclusion",
            err.conclusion.as_ref().map(grouped).unwrap_or_default(),
        ),
    ]);
    fill(template, &s).trim_end().to_string()
}

fn failure_phrase(kind: VcKind) -> &'static str {
    match kind {
        VcKind::Establishment => "does not hold when the loop is first reached",
        VcKind::Preservation => "is not preserved by the loop body",
        VcKind::PostCondition => "does not imply the assertion",
    }
}

/// True when every establishment and preservation obligation was proved, so
/// only the final implication failed.
fn invariants_all_correct(results: &[VcResult]) -> bool {
    results
        .iter()
        .filter(|r| r.vc.kind != VcKind::PostCondition)
        .all(|r| r.status.is_valid())
}

fn closing(prog: &Program, inv: &InvariantSet, vc: &VerificationCondition, results: &[VcResult]) -> (String, BTreeMap<String, String>) {
    let assertion = prog.assertion.to_string();
    if vc.kind == VcKind::PostCondition && invariants_all_correct(results) {
        let s = slots([("assertion", assertion)]);
        let text = format!("{}\n{}", fill(FRAMING_SUFFICIENT, &s), fill(REPAIR_SUFFICIENT, &s));
        (text, s)
    } else {
        let invariant = inv
            .get(&vc.target)
            .map(|i| i.formula.to_string())
            .unwrap_or(assertion);
        let s = slots([
            ("invariant", invariant),
            ("failure", failure_phrase(vc.kind).to_string()),
        ]);
        let text = format!("{}\n{}", fill(FRAMING_FAILING, &s), fill(REPAIR_FAILING, &s));
        (text, s)
    }
}

/// One paragraph per reasoning error, then the shared repair instructions.
pub fn render_feedback(report: &CheckReport, prog: &Program, inv: &InvariantSet, results: &[VcResult]) -> PromptBundle {
    let mut text = String::new();
    let mut all_slots = BTreeMap::new();
    for (k, err) in report.errors.iter().enumerate() {
        text.push_str(&error_paragraph(err));
        text.push_str("\n\n");
        all_slots.insert(format!("error_{}", k + 1), err.step_label.clone());
    }
    let (tail, s) = closing(prog, inv, &report.vc, results);
    text.push_str(&tail);
    all_slots.extend(s);
    PromptBundle {
        kind: PromptKind::Feedback,
        text,
        slots: all_slots,
    }
}

/// Used when the proof checks clean yet the obligation still fails: names the
/// obligation and, when the solver produced one, a counterexample.
pub fn fallback_feedback(result: &VcResult, prog: &Program, inv: &InvariantSet, results: &[VcResult]) -> PromptBundle {
    let obligation = match result.vc.kind {
        VcKind::Establishment => "establishment",
        VcKind::Preservation => "preservation",
        VcKind::PostCondition => "post-condition",
    };
    let target = match inv.get(&result.vc.target) {
        Some(i) => format!("the loop invariant {}", i.formula),
        None => format!("the assertion {}", prog.assertion),
    };
    let cex = match &result.counterexample {
        Some(m) if !m.is_empty() => {
            let parts: Vec<String> = m
                .iter()
                .filter(|(k, _)| prog.declares(k))
                .map(|(k, v)| format!("{k} = {v}"))
                .collect();
            format!("It fails, for example, when {}.\n", parts.join(", "))
        }
        _ => String::new(),
    };
    let s = slots([
        ("obligation", obligation.to_string()),
        ("target", target),
        ("counterexample", cex),
    ]);
    let head = fill(FALLBACK, &s);
    let (tail, tail_slots) = closing(prog, inv, &result.vc, results);
    let mut all = s;
    all.extend(tail_slots);
    PromptBundle {
        kind: PromptKind::Feedback,
        text: format!("{}\n{}", head.trim_end(), tail),
        slots: all,
    }
}
