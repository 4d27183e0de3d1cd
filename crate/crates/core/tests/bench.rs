use std::collections::BTreeMap;
use std::path::Path;

use invsynth_core::bench::{clauses, jaccard, load_corpus, refinement_success_rate, run_corpus};
use invsynth_core::engine::{Classification, FeedbackKind, Outcome, RoundRecord, RunConfig, RunReport};
use invsynth_core::gateway::{load_transcript, Gateway, ReplayBackend};
use invsynth_core::lang::{parse_expr_untyped, InvariantSet};
use invsynth_core::sample::atom;
use invsynth_core::smt::SmtSolver;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn set(fs: &[&str]) -> InvariantSet {
    InvariantSet::from_formulas(fs.iter().map(|f| parse_expr_untyped(f).unwrap()))
}

fn random_set(rng: &mut ChaCha8Rng) -> InvariantSet {
    let vars = vec!["x".to_string(), "y".to_string()];
    let n = rng.random_range(0..5);
    // Small coefficients so the two sides share clauses often.
    InvariantSet::from_formulas((0..n).map(|_| atom(rng, &vars, 1, false)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn jaccard_identities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_set(&mut rng);
        let b = random_set(&mut rng);
        let ab = jaccard(&a, &b);
        prop_assert_eq!(ab, jaccard(&b, &a));
        prop_assert_eq!(jaccard(&a, &a), Ratio::from_integer(1));
        prop_assert!(ab >= Ratio::from_integer(0) && ab <= Ratio::from_integer(1));
        prop_assert_eq!(ab == Ratio::from_integer(1), clauses(&a) == clauses(&b));
    }
}

#[test]
fn walk_sets_overlap_by_half() {
    let partial = set(&["a >= -(j - 1) && a <= (j - 1)", "j >= 1", "m > 0"]);
    let refined = set(&["a >= -j + 1 && a <= j - 1", "j >= 1", "j <= m + 1", "m > 0"]);
    // Parenthesization is normalized away, so `a <= (j - 1)` matches.
    assert_eq!(jaccard(&partial, &refined), Ratio::new(1, 2));
}

fn round(index: usize, inv: InvariantSet, feedback: bool) -> RoundRecord {
    RoundRecord {
        index,
        invariants: Some(inv),
        feedback: feedback.then_some(FeedbackKind::Reasoning),
        ..RoundRecord::default()
    }
}

#[test]
fn three_iterations_two_improve() {
    let gold = set(&["x > 0", "y > 0", "z > 0"]);
    let rounds = vec![
        round(0, set(&["x > 0"]), true),
        round(1, set(&["x > 0", "y > 0"]), true),
        round(2, set(&["x > 0", "w > 0"]), true),
        round(3, set(&["x > 0", "y > 0", "z > 0"]), false),
    ];
    let report = RunReport {
        version: 1,
        program: "p".into(),
        seed: 0,
        outcome: Outcome::Solved,
        classification: Classification::FeedbackDrivenSuccess,
        feedback_rounds: 3,
        rounds,
        final_invariants: None,
        tokens: Default::default(),
        elapsed_ms: 0,
        diagnostic: None,
    };
    let mut golds = BTreeMap::new();
    golds.insert("p".to_string(), gold);
    let score = refinement_success_rate(std::slice::from_ref(&report), &golds);
    assert_eq!(score.iterations, 3);
    assert_eq!(score.rate(), Some(Ratio::new(2, 3)));

    let none = refinement_success_rate(&[report], &BTreeMap::new());
    assert_eq!(none.iterations, 0);
    assert_eq!(none.excluded_programs, vec!["p".to_string()]);
    assert_eq!(none.rate(), None);
}

#[test]
fn empty_directory_gives_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.c"), "int main( {").unwrap();
    let corpus = load_corpus(dir.path()).unwrap();
    assert!(corpus.entries.is_empty());
    assert_eq!(corpus.skipped.len(), 1);
    let solver = SmtSolver::from_env().unwrap();
    let res = run_corpus(&corpus, &RunConfig::default(), 1, 2, &solver, |_| unreachable!());
    assert!(res.runs.is_empty());
    assert_eq!(res.aggregates.total_runs, 0);
}

fn corpus_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus")
}

#[test]
fn bundled_corpus_replays_identically() {
    let corpus = load_corpus(&corpus_dir()).unwrap();
    assert_eq!(corpus.entries.len(), 10);
    assert!(corpus.skipped.is_empty());
    let solver = SmtSolver::from_env().unwrap();
    let gw = |e: &invsynth_core::bench::CorpusEntry| {
        let t = load_transcript(e.transcript.as_ref().unwrap())?;
        Ok(Gateway::new(Box::new(ReplayBackend::new(t))))
    };
    let cfg = RunConfig::default();
    let a = run_corpus(&corpus, &cfg, 1, 1, &solver, gw);
    let b = run_corpus(&corpus, &cfg, 1, 4, &solver, gw);
    assert_eq!(a.summary_json(), b.summary_json());
    assert_eq!(a.aggregates.solved_count, 9);
    assert_eq!(a.aggregates.direct_success, 3);
    assert_eq!(a.aggregates.feedback_driven_success, 6);
    assert_eq!(a.aggregates.fallback_feedback_rounds, 1);
}
