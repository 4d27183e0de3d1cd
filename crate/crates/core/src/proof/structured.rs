//! Natural-language proofs split into `[Initial]`, numbered `[STEP N: name]`
//! blocks under `[Proof]`, and `[Conclusion]`.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{classify_marker, strip_fences, Marker, ProofError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub number: u32,
    pub name: String,
    pub body: String,
}

impl ProofStep {
    /// `STEP N: name`, as it is cited back in feedback.
    pub fn label(&self) -> String {
        if self.name.is_empty() {
            format!("STEP {}", self.number)
        } else {
            format!("STEP {}: {}", self.number, self.name)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredProof {
    pub initial: Vec<String>,
    /// Lines under `[Proof]` before the first step.
    pub preamble: Vec<String>,
    pub steps: Vec<ProofStep>,
    pub conclusion: String,
}

#[derive(PartialEq)]
enum Section {
    Before,
    Initial,
    Proof,
    Conclusion,
}

pub fn parse_structured_proof(text: &str) -> Result<StructuredProof, ProofError> {
    let text = strip_fences(text);
    let mut section = Section::Before;
    let mut seen = [false; 3];
    let mut initial = Vec::new();
    let mut preamble = Vec::new();
    let mut steps: Vec<ProofStep> = Vec::new();
    let mut conclusion: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        match classify_marker(raw) {
            Some((Marker::Initial, rest)) => {
                if section != Section::Before {
                    return Err(ProofError::SectionOrder {
                        line: line_no,
                        section: "Initial",
                    });
                }
                seen[0] = true;
                section = Section::Initial;
                push_nonempty(&mut initial, rest);
                continue;
            }
            Some((Marker::Proof, rest)) => {
                if section != Section::Initial {
                    return Err(ProofError::SectionOrder {
                        line: line_no,
                        section: if seen[0] { "Proof" } else { "Initial" },
                    });
                }
                seen[1] = true;
                section = Section::Proof;
                push_nonempty(&mut preamble, rest);
                continue;
            }
            Some((Marker::Conclusion, rest)) => {
                if section != Section::Proof {
                    return Err(ProofError::SectionOrder {
                        line: line_no,
                        section: if seen[1] { "Conclusion" } else { "Proof" },
                    });
                }
                seen[2] = true;
                section = Section::Conclusion;
                push_nonempty(&mut conclusion, rest);
                continue;
            }
            Some((Marker::Step { number, name }, rest)) if section == Section::Proof => {
                let expected = steps.last().map_or(1, |s| s.number + 1);
                let ok = match steps.last() {
                    None => number == 1,
                    Some(prev) => number > prev.number,
                };
                if !ok {
                    return Err(ProofError::StepNumber {
                        line: line_no,
                        expected,
                        found: number,
                    });
                }
                steps.push(ProofStep {
                    number,
                    name,
                    body: rest.trim().to_string(),
                });
                continue;
            }
            _ => {}
        }
        match section {
            Section::Before => {}
            Section::Initial => push_nonempty(&mut initial, raw),
            Section::Proof => match steps.last_mut() {
                Some(step) => {
                    if !step.body.is_empty() || !raw.trim().is_empty() {
                        if !step.body.is_empty() {
                            step.body.push('\n');
                        }
                        step.body.push_str(raw.trim_end());
                    }
                }
                None => push_nonempty(&mut preamble, raw),
            },
            Section::Conclusion => push_nonempty(&mut conclusion, raw),
        }
    }

    for (k, name) in ["Initial", "Proof", "Conclusion"].into_iter().enumerate() {
        if !seen[k] {
            return Err(ProofError::MissingSection(name));
        }
    }
    if steps.is_empty() {
        return Err(ProofError::NoSteps);
    }
    for s in &mut steps {
        s.body = s.body.trim_end().to_string();
    }
    Ok(StructuredProof {
        initial,
        preamble,
        steps,
        conclusion: conclusion.join("\n"),
    })
}

fn push_nonempty(out: &mut Vec<String>, line: &str) {
    let t = line.trim_end();
    if !t.trim().is_empty() {
        out.push(t.to_string());
    }
}

impl StructuredProof {
    pub fn step_labels(&self) -> Vec<String> {
        self.steps.iter().map(ProofStep::label).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("[Initial]\n");
        for l in &self.initial {
            let _ = writeln!(out, "{l}");
        }
        out.push_str("\n[Proof]\n");
        for l in &self.preamble {
            let _ = writeln!(out, "{l}");
        }
        for s in &self.steps {
            let _ = writeln!(out, "[{}]", s.label());
            if !s.body.is_empty() {
                let _ = writeln!(out, "{}", s.body);
            }
        }
        let _ = write!(out, "\n[Conclusion]\n{}\n", self.conclusion);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal() {
        let p = parse_structured_proof(
            "[Initial]\nx == 0\n[Proof]\n[STEP 1: done]\ntrivial\n[Conclusion]\nx == 0",
        )
        .unwrap();
        assert_eq!(p.initial, vec!["x == 0"]);
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].label(), "STEP 1: done");
        assert_eq!(p.steps[0].body, "trivial");
        assert_eq!(p.conclusion, "x == 0");
    }

    #[test]
    fn section_and_step_errors() {
        assert_eq!(
            parse_structured_proof("[Initial]\nx\n[Proof]\n[STEP 1: a]\nb"),
            Err(ProofError::MissingSection("Conclusion"))
        );
        assert_eq!(
            parse_structured_proof("[Initial]\n[Proof]\nnothing\n[Conclusion]\nx"),
            Err(ProofError::NoSteps)
        );
        assert!(matches!(
            parse_structured_proof("[Initial]\n[Proof]\n[STEP 1: a]\n[STEP 1: b]\n[Conclusion]\nx"),
            Err(ProofError::StepNumber { found: 1, .. })
        ));
        assert!(matches!(
            parse_structured_proof("[Initial]\n[Proof]\n[STEP 2: a]\n[Conclusion]\nx"),
            Err(ProofError::StepNumber { expected: 1, found: 2, .. })
        ));
    }

    #[test]
    fn round_trip() {
        let src = "Here is the proof.\n```\n[Initial]\n- a == 0\n\n[Proof]\n[STEP 1: Exit]\n- line one\n  - nested\n[STEP 2: Finish]\nok\n\n[Conclusion]\nDone.\n```";
        let p = parse_structured_proof(src).unwrap();
        assert_eq!(p.steps[0].body, "- line one\n  - nested");
        assert_eq!(parse_structured_proof(&p.to_text()).unwrap(), p);
    }
}
