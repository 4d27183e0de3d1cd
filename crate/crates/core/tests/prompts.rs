//! Rendered prompts compared against files in fixtures/snapshots/.
//! Run with UPDATE_SNAPSHOTS=1 to rewrite them after a template change.

use std::path::PathBuf;

use invsynth_core::checker::check_proof;
use invsynth_core::lang::{parse_invariant_block, parse_program, Program};
use invsynth_core::proof::{parse_formalized_proof, parse_structured_proof};
use invsynth_core::prompts::{
    fallback_feedback, render_feedback, render_formalize_request, render_initial, render_proof_request,
    PromptBundle, TEMPLATE_VERSION,
};
use invsynth_core::smt::{BruteForceProver, SmtSolver, SolverBudget};
use invsynth_core::vcgen::{check_vcs, generate_vcs, VcKind};

const SIGNED_WALK: &str = include_str!("../../../fixtures/walk.c");
const PARTIAL_INVARIANTS: &str = include_str!("../../../fixtures/walk_partial.inv");
const NATURAL_PROOF: &str = include_str!("../../../fixtures/walk_natural_proof.txt");
const EXIT_PROOF: &str = include_str!("../../../fixtures/walk_formal_proof.txt");
const LOCKSTEP: &str = include_str!("../../../fixtures/corpus/lockstep.c");

fn snapshot(name: &str, bundle: &PromptBundle) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/snapshots")
        .join(TEMPLATE_VERSION)
        .join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &bundle.text).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_SNAPSHOTS=1", path.display()));
    assert!(
        want == bundle.text,
        "{name} differs from {}\n--- rendered ---\n{}",
        path.display(),
        bundle.text
    );
}

fn walk() -> Program {
    parse_program(SIGNED_WALK).unwrap()
}

#[test]
fn initial_request() {
    snapshot("initial_walk", &render_initial(SIGNED_WALK));
}

#[test]
fn proof_request_for_postcondition() {
    let p = walk();
    let inv = parse_invariant_block(PARTIAL_INVARIANTS, &p).unwrap();
    let vc = generate_vcs(&p, &inv).into_iter().find(|v| v.kind == VcKind::PostCondition).unwrap();
    snapshot("proof_request_walk_post", &render_proof_request(&p, &inv, &vc));
}

#[test]
fn formalize_request() {
    let proof = parse_structured_proof(NATURAL_PROOF).unwrap();
    snapshot("formalize_walk", &render_formalize_request(&proof));
}

#[test]
fn reasoning_feedback() {
    let p = walk();
    let inv = parse_invariant_block(PARTIAL_INVARIANTS, &p).unwrap();
    let solver = SmtSolver::from_env().unwrap();
    let budget = SolverBudget::default();
    let results = check_vcs(&generate_vcs(&p, &inv), &solver, &budget);
    let post = results.iter().find(|r| r.vc.kind == VcKind::PostCondition).unwrap();
    let fp = parse_formalized_proof(EXIT_PROOF, &p).unwrap();
    let report = check_proof(&fp, &p, &post.vc, &solver, &budget);
    snapshot("feedback_walk_exit", &render_feedback(&report, &p, &inv, &results));
}

#[test]
fn counterexample_feedback() {
    // The exhaustive prover picks its witness deterministically.
    let p = parse_program(LOCKSTEP).unwrap();
    let inv = parse_invariant_block("```c\nassert(x == y);\n```", &p).unwrap();
    let results = check_vcs(&generate_vcs(&p, &inv), &BruteForceProver { bound: 3 }, &SolverBudget::default());
    let post = results.iter().find(|r| r.vc.kind == VcKind::PostCondition).unwrap();
    assert!(post.counterexample.is_some());
    snapshot("fallback_lockstep", &fallback_feedback(post, &p, &inv, &results));
}
