//! Checks a formalized proof line by line: each premise must follow from the
//! facts known so far, and each implication must be valid on its own.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lang::{Expr, Program};
use crate::proof::{FormalizedProof, FormalizedStep, Provenance};
use crate::smt::{Prover, QueryVerdict, SolverBudget, Status};
use crate::vcgen::{entry_state, VcKind, VerificationCondition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    /// The premise does not follow from the step's known facts.
    UnsupportedPremise,
    /// `p ==> q` is not valid.
    InvalidImplication,
    /// A condition tagged initial does not hold at loop entry.
    BadInitialCondition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningError {
    pub step_label: String,
    pub kind: ErrorKind,
    /// The premise, the whole implication, or the initial condition.
    pub formula: Expr,
    /// Present for implication errors: the conclusion `q`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conclusion: Option<Expr>,
    pub comment: String,
    /// Invalid, Unknown or Timeout.
    pub solver_status: Status,
}

impl ReasoningError {
    /// The solver did not refute the claim; it only failed to confirm it.
    pub fn is_soft(&self) -> bool {
        self.solver_status.is_soft()
    }

    /// The left side as shown in feedback.
    pub fn condition(&self) -> &Expr {
        match (&self.kind, &self.formula) {
            (ErrorKind::InvalidImplication, Expr::Binary(crate::lang::BinOp::Implies, p, _)) => p.peel(),
            _ => &self.formula,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step_label: String,
    pub conds: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub vc: VerificationCondition,
    pub errors: Vec<ReasoningError>,
    pub checked_implications: usize,
    pub conds_trace: Vec<StepTrace>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub errors: Vec<ReasoningError>,
    pub conds: Vec<Expr>,
}

fn status_of(r: Result<QueryVerdict, crate::smt::SmtError>) -> Status {
    match r {
        Ok(v) => v.status,
        Err(_) => Status::Unknown,
    }
}

fn vars_of<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in exprs {
        e.collect_vars(&mut out);
    }
    out
}

/// Every condition tagged initial must hold in the symbolic state at loop
/// entry. Other tags are not checked here.
pub fn check_initial_conditions(
    step: &FormalizedStep,
    prog: &Program,
    vc: &VerificationCondition,
    prover: &dyn Prover,
    budget: &SolverBudget,
) -> Vec<ReasoningError> {
    if vc.kind != VcKind::Establishment {
        return Vec::new();
    }
    let (entry, quantified) = entry_state(prog);
    let mut errors = Vec::new();
    for c in step.initial.iter().filter(|c| c.tag == Provenance::Initial) {
        let mut vars = quantified.clone();
        c.formula.collect_vars(&mut vars);
        let status = status_of(prover.check_validity(&entry, &c.formula, &vars, budget));
        if !status.is_valid() {
            errors.push(ReasoningError {
                step_label: step.label.clone(),
                kind: ErrorKind::BadInitialCondition,
                formula: c.formula.clone(),
                conclusion: None,
                comment: c.tag.as_str().to_string(),
                solver_status: status,
            });
        }
    }
    errors
}

/// The implication scan. Conclusions join the known facts whether or not
/// their implication was valid.
pub fn check_step(step: &FormalizedStep, pre: &[Expr], prover: &dyn Prover, budget: &SolverBudget) -> StepOutcome {
    let mut conds: Vec<Expr> = pre.to_vec();
    let mut errors = Vec::new();
    for imp in &step.implications {
        let vars = vars_of(conds.iter().chain([&imp.premise, &imp.conclusion]));
        let supported = status_of(prover.check_entailment(&conds, &imp.premise, &vars, budget));
        if !supported.is_valid() {
            errors.push(ReasoningError {
                step_label: step.label.clone(),
                kind: ErrorKind::UnsupportedPremise,
                formula: imp.premise.clone(),
                conclusion: None,
                comment: imp.comment.clone(),
                solver_status: supported,
            });
        }
        let valid = status_of(prover.check_validity(&imp.premise, &imp.conclusion, &vars, budget));
        if !valid.is_valid() {
            errors.push(ReasoningError {
                step_label: step.label.clone(),
                kind: ErrorKind::InvalidImplication,
                formula: imp.formula(),
                conclusion: Some(imp.conclusion.clone()),
                comment: imp.comment.clone(),
                solver_status: valid,
            });
        }
        conds.push(imp.conclusion.clone());
    }
    StepOutcome { errors, conds }
}

/// Each step starts from its own initial list; facts are not threaded
/// between steps.
pub fn check_proof(
    fp: &FormalizedProof,
    prog: &Program,
    vc: &VerificationCondition,
    prover: &dyn Prover,
    budget: &SolverBudget,
) -> CheckReport {
    let mut errors = Vec::new();
    let mut trace = Vec::new();
    let mut checked = 0;
    for step in &fp.steps {
        errors.extend(check_initial_conditions(step, prog, vc, prover, budget));
        let pre: Vec<Expr> = step.initial.iter().map(|c| c.formula.clone()).collect();
        let out = check_step(step, &pre, prover, budget);
        checked += step.implications.len();
        errors.extend(out.errors);
        trace.push(StepTrace {
            step_label: step.label.clone(),
            conds: out.conds,
        });
    }
    CheckReport {
        vc: vc.clone(),
        errors,
        checked_implications: checked,
        conds_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::brute_force_validity;
    use crate::lang::{parse_expr_untyped, parse_program};
    use crate::proof::parse_formalized_proof;
    use crate::smt::BruteForceProver;

    fn e(s: &str) -> Expr {
        parse_expr_untyped(s).unwrap()
    }

    fn counter_program() -> Program {
        parse_program("int main(){int x; int c; x = 0; c = 1; while (x < 5) { x = x + 1; c = c + x; } assert(c >= 1);}")
            .unwrap()
    }

    #[test]
    fn unsupported_premise_but_valid_implication() {
        let prog = parse_program("int main(){int x; while (x < 0) { x = x + 1; } assert(x >= 0);}").unwrap();
        let fp = parse_formalized_proof(
            "[STEP 1: s]\n[Initial]\nx >= 0 // initial\n[Proof]\n(x > 0) ==> (x >= 1) // strict\n[Conclusion]\nx >= 1",
            &prog,
        )
        .unwrap();
        let pre = vec![e("x >= 0")];
        let out = check_step(&fp.steps[0], &pre, &BruteForceProver { bound: 5 }, &SolverBudget::default());
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].kind, ErrorKind::UnsupportedPremise);
        assert_eq!(out.errors[0].formula, e("x > 0"));
        let vars: BTreeSet<String> = ["x".to_string()].into();
        assert!(!brute_force_validity(&e("x >= 0"), &e("x > 0"), &vars, 5).is_valid());
        assert!(brute_force_validity(&e("x > 0"), &e("x >= 1"), &vars, 5).is_valid());
    }

    #[test]
    fn reflexive_step_is_clean() {
        let prog = counter_program();
        let fp = parse_formalized_proof("[Initial]\nx > 0 // initial\n[Proof]\n(x > 0) ==> (x > 0) // same\n", &prog)
            .unwrap();
        let out = check_step(&fp.steps[0], &[e("x > 0")], &BruteForceProver { bound: 3 }, &SolverBudget::default());
        assert!(out.errors.is_empty());
        assert_eq!(out.conds.len(), 2);
    }

    #[test]
    fn initial_conditions_checked_against_entry() {
        let prog = counter_program();
        let vc = crate::vcgen::generate_vcs(&prog, &crate::lang::InvariantSet::from_formulas(vec![e("c >= 1")]))
            .remove(0);
        let fp = parse_formalized_proof(
            "[STEP 1: entry]\n[Initial]\nx == 0 // initial\nc == 0 // initial\nc >= 7 // derived\n[Proof]\n[Conclusion]\nc >= 1",
            &prog,
        )
        .unwrap();
        let prover = BruteForceProver { bound: 3 };
        let errs = check_initial_conditions(&fp.steps[0], &prog, &vc, &prover, &SolverBudget::default());
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ErrorKind::BadInitialCondition);
        assert_eq!(errs[0].formula, e("c == 0"));

        let post = crate::vcgen::generate_vcs(&prog, &Default::default()).remove(0);
        assert!(check_initial_conditions(&fp.steps[0], &prog, &post, &prover, &SolverBudget::default()).is_empty());
    }

    #[test]
    fn carried_wrong_conclusion_is_not_blamed_again() {
        let prog = counter_program();
        let fp = parse_formalized_proof(
            "[STEP 1: a]\n[Initial]\nx >= 0 // initial\n[Proof]\n(x >= 0) ==> (x >= 3) // jump\n[Conclusion]\nx >= 3\n\n\
             [STEP 2: b]\n[Initial]\nx >= 3 // derived\n[Proof]\n(x >= 3) ==> (x >= 2) // weaken\n[Conclusion]\nx >= 2",
            &prog,
        )
        .unwrap();
        let vc = crate::vcgen::generate_vcs(&prog, &Default::default()).remove(0);
        let r = check_proof(&fp, &prog, &vc, &BruteForceProver { bound: 4 }, &SolverBudget::default());
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].step_label, "STEP 1: a");
        assert_eq!(r.checked_implications, 2);
    }

    #[test]
    fn empty_proof_empty_report() {
        let prog = counter_program();
        let vc = crate::vcgen::generate_vcs(&prog, &Default::default()).remove(0);
        let r = check_proof(&FormalizedProof::default(), &prog, &vc, &BruteForceProver { bound: 2 }, &SolverBudget::default());
        assert!(r.errors.is_empty());
        assert_eq!(r.checked_implications, 0);
    }
}
