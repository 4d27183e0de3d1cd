use std::collections::BTreeSet;

use invsynth_core::eval::{brute_force_validity, explore, holds, ExploreBounds, OracleVerdict};
use invsynth_core::lang::{parse_expr_untyped, parse_invariant_block, parse_program, Expr, InvariantSet, Program};
use invsynth_core::sample::{mined_atoms, random_invariants, random_program};
use invsynth_core::smt::{BruteForceProver, SmtSolver, SolverBudget, Status};
use invsynth_core::vcgen::{check_vcs, entry_state, generate_vcs, wp, Fresh, VcKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIGNED_WALK: &str = include_str!("../../../fixtures/walk.c");
const PARTIAL_INVARIANTS: &str = include_str!("../../../fixtures/walk_partial.inv");
const REFINED_INVARIANTS: &str = include_str!("../../../fixtures/walk_refined.inv");

fn e(s: &str) -> Expr {
    parse_expr_untyped(s).unwrap()
}

fn walk() -> Program {
    parse_program(SIGNED_WALK).unwrap()
}

#[test]
fn refined_invariants_prove_walk() {
    let p = walk();
    let inv = parse_invariant_block(REFINED_INVARIANTS, &p).unwrap();
    let solver = SmtSolver::from_env().unwrap();
    let results = check_vcs(&generate_vcs(&p, &inv), &solver, &SolverBudget::default());
    assert_eq!(results.len(), 9);
    for r in &results {
        assert_eq!(r.status, Status::Valid, "{:?} {}", r.vc.kind, r.vc.target);
    }
}

#[test]
fn partial_invariants_fail_only_the_postcondition() {
    let p = walk();
    let inv = parse_invariant_block(PARTIAL_INVARIANTS, &p).unwrap();
    let solver = SmtSolver::from_env().unwrap();
    let results = check_vcs(&generate_vcs(&p, &inv), &solver, &SolverBudget::default());
    assert_eq!(results.len(), 7);
    for r in &results[..6] {
        assert_eq!(r.status, Status::Valid);
    }
    let post = &results[6];
    assert_eq!(post.vc.kind, VcKind::PostCondition);
    assert_eq!(post.status, Status::Invalid);
    let cex = post.counterexample.as_ref().unwrap();
    assert!(holds(&e("j >= m + 2"), cex).unwrap(), "{cex:?}");
    assert!(holds(&post.vc.hypothesis, cex).unwrap());
    assert!(!holds(&post.vc.goal, cex).unwrap());

    // Exhaustive search agrees and exhibits a concrete witness.
    match brute_force_validity(&post.vc.hypothesis, &post.vc.goal, &post.vc.quantified_vars, 3) {
        OracleVerdict::Invalid { witness, .. } => assert!(holds(&e("j >= m + 2"), &witness).unwrap()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn establishment_of_walk_is_valid() {
    let p = walk();
    let inv = parse_invariant_block(REFINED_INVARIANTS, &p).unwrap();
    let vcs = generate_vcs(&p, &inv);
    assert_eq!(vcs[0].hypothesis.to_string(), "a == 0 && m > 0 && j == 1");
    let solver = SmtSolver::from_env().unwrap();
    let r = check_vcs(&vcs[..1], &solver, &SolverBudget::default());
    assert_eq!(r[0].status, Status::Valid);
}

#[test]
fn trivially_true_assertion() {
    let p = parse_program("int main(){int x; x = 0; while (x < 3) { x = x + 1; } assert(1 == 1);}").unwrap();
    let vcs = generate_vcs(&p, &InvariantSet::default());
    assert_eq!(vcs.len(), 1);
    let r = check_vcs(&vcs, &BruteForceProver { bound: 3 }, &SolverBudget::default());
    assert_eq!(r[0].status, Status::Valid);
}

#[test]
fn results_keep_input_order() {
    let p = walk();
    let inv = parse_invariant_block(REFINED_INVARIANTS, &p).unwrap();
    let vcs = generate_vcs(&p, &inv);
    let solver = SmtSolver::from_env().unwrap();
    let a = check_vcs(&vcs, &solver, &SolverBudget::default());
    let b = check_vcs(&vcs, &solver, &SolverBudget::default());
    assert_eq!(a, b);
    for (r, vc) in a.iter().zip(&vcs) {
        assert_eq!(&r.vc, vc);
    }
}

// Establishment from the forward state agrees with `true ==> wp(pre, l)`.
#[test]
fn forward_and_backward_establishment_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..60 {
        let p = random_program(&mut rng);
        let mined = mined_atoms(&p, ExploreBounds::default());
        let inv = random_invariants(&mut rng, &p, &mined, 3);
        let (state, mut fwd_vars) = entry_state(&p);
        for i in inv.iter() {
            let mut q = p.var_set();
            let mut fresh = Fresh::avoiding(&p.vars);
            let back = wp(&p.pre, &i.formula, &mut fresh, &mut q);
            fwd_vars.extend(q.iter().cloned());
            let a = brute_force_validity(&state, &i.formula, &fwd_vars, 3).is_valid();
            let b = brute_force_validity(&Expr::tt(), &back, &q, 3).is_valid();
            assert_eq!(a, b, "{}\n{}", p, i.formula);
        }
    }
}

#[test]
fn bounded_soundness_on_samples() {
    let solver = SmtSolver::from_env().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut proved = 0;
    for _ in 0..40 {
        let p = random_program(&mut rng);
        let mined = mined_atoms(&p, ExploreBounds::default());
        let inv = random_invariants(&mut rng, &p, &mined, 4);
        let results = check_vcs(&generate_vcs(&p, &inv), &solver, &SolverBudget::default());
        if results.iter().all(|r| r.status == Status::Valid) {
            proved += 1;
            let run = explore(&p, ExploreBounds::default());
            assert!(run.violations.is_empty(), "{p}\n{inv}\n{:?}", run.violations);
        }
    }
    assert!(proved > 0);
}

fn vars_of(p: &Program) -> BTreeSet<String> {
    p.var_set()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vc_count_law(seed in any::<u64>(), max in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng);
        let inv = random_invariants(&mut rng, &p, &[], max);
        let vcs = generate_vcs(&p, &inv);
        prop_assert_eq!(vcs.len(), 2 * inv.len() + 1);
        for vc in &vcs {
            let mut free = vc.hypothesis.vars();
            free.extend(vc.goal.vars());
            prop_assert!(free.is_subset(&vc.quantified_vars));
            prop_assert!(vars_of(&p).is_subset(&vc.quantified_vars));
        }
    }

    // If Q1 ==> Q2 then wp(S, Q1) ==> wp(S, Q2), checked on the bounded box.
    #[test]
    fn wp_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng);
        let plain: Vec<String> = p.vars.iter().filter(|v| !v.starts_with("nondet")).cloned().collect();
        let q1 = invsynth_core::sample::atom(&mut rng, &plain, 2, false);
        let q2 = Expr::or(q1.clone(), invsynth_core::sample::atom(&mut rng, &plain, 2, false));
        let mut quantified = p.var_set();
        let fresh = Fresh::avoiding(&p.vars);
        // Same generator state on both sides, so havocs get the same names.
        let w1 = wp(&p.body, &q1, &mut fresh.clone(), &mut quantified);
        let w2 = wp(&p.body, &q2, &mut fresh.clone(), &mut quantified);
        prop_assert!(brute_force_validity(&w1, &w2, &quantified, 3).is_valid());
    }
}
