//! Corpus runs and their aggregate metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_synthesis, Classification, FeedbackKind, Outcome, RunConfig, RunReport};
use crate::gateway::{Gateway, GatewayError};
use crate::lang::{normalize_clause, parse_invariant_block, InvariantSet, Task};
use crate::smt::Prover;

pub const SUMMARY_VERSION: u32 = 1;

/// Normalized top-level conjuncts of every invariant in the set.
pub fn clauses(set: &InvariantSet) -> BTreeSet<String> {
    set.iter()
        .flat_map(|i| i.formula.conjuncts().into_iter().map(normalize_clause))
        .collect()
}

/// `|A ∩ B| / |A ∪ B|` over clauses; two empty sets score 1.
pub fn jaccard(a: &InvariantSet, b: &InvariantSet) -> Ratio<u64> {
    jaccard_clauses(&clauses(a), &clauses(b))
}

pub fn jaccard_clauses(a: &BTreeSet<String>, b: &BTreeSet<String>) -> Ratio<u64> {
    let union = a.union(b).count() as u64;
    if union == 0 {
        return Ratio::from_integer(1);
    }
    Ratio::new(a.intersection(b).count() as u64, union)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementScore {
    /// Feedback iterations whose new proposal is strictly closer to gold.
    pub improved: u64,
    pub iterations: u64,
    /// Programs skipped for lack of a gold set.
    pub excluded_programs: Vec<String>,
}

impl RefinementScore {
    pub fn rate(&self) -> Option<Ratio<u64>> {
        (self.iterations > 0).then(|| Ratio::new(self.improved, self.iterations))
    }

    pub fn percent(&self) -> Option<f64> {
        self.rate().map(|r| 100.0 * *r.numer() as f64 / *r.denom() as f64)
    }
}

/// Pairs of (set before feedback, set after) for each completed feedback round.
pub fn feedback_iterations(report: &RunReport) -> Vec<(&InvariantSet, &InvariantSet)> {
    report
        .rounds
        .windows(2)
        .filter(|w| w[0].feedback.is_some())
        .filter_map(|w| Some((w[0].invariants.as_ref()?, w[1].invariants.as_ref()?)))
        .collect()
}

pub fn refinement_success_rate(reports: &[RunReport], gold: &BTreeMap<String, InvariantSet>) -> RefinementScore {
    let mut score = RefinementScore::default();
    let mut excluded = BTreeSet::new();
    for r in reports {
        let Some(g) = gold.get(&r.program) else {
            excluded.insert(r.program.clone());
            continue;
        };
        let g = clauses(g);
        for (old, new) in feedback_iterations(r) {
            score.iterations += 1;
            if jaccard_clauses(&clauses(new), &g) > jaccard_clauses(&clauses(old), &g) {
                score.improved += 1;
            }
        }
    }
    score.excluded_programs = excluded.into_iter().collect();
    score
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub task: Task,
    pub gold: Option<InvariantSet>,
    /// `<name>.transcript.jsonl` next to the program, if present.
    pub transcript: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    pub skipped: Vec<SkippedFile>,
}

/// Reads every `*.c` file in `dir` (sorted by name) with its optional
/// `<name>.gold` and `<name>.transcript.jsonl` siblings. Files that do not
/// parse are listed in `skipped`.
pub fn load_corpus(dir: &Path) -> std::io::Result<Corpus> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "c"))
        .collect();
    paths.sort();
    let mut corpus = Corpus::default();
    for path in paths {
        let name = path.file_stem().unwrap().to_string_lossy().to_string();
        let file = path.file_name().unwrap().to_string_lossy().to_string();
        let source = std::fs::read_to_string(&path)?;
        let task = match Task::parse(&name, &source) {
            Ok(t) => t,
            Err(e) => {
                corpus.skipped.push(SkippedFile {
                    file,
                    error: e.to_string(),
                });
                continue;
            }
        };
        let gold_path = path.with_extension("gold");
        let gold = if gold_path.exists() {
            let text = std::fs::read_to_string(&gold_path)?;
            match parse_invariant_block(&text, &task.program) {
                Ok(g) => Some(g),
                Err(e) => {
                    corpus.skipped.push(SkippedFile {
                        file: format!("{name}.gold"),
                        error: e.to_string(),
                    });
                    None
                }
            }
        } else {
            None
        };
        let transcript = dir.join(format!("{name}.transcript.jsonl"));
        corpus.entries.push(CorpusEntry {
            name,
            path,
            task,
            gold,
            transcript: transcript.exists().then_some(transcript),
        });
    }
    Ok(corpus)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRow {
    pub program: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub classification: Classification,
    pub feedback_rounds: usize,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub elapsed_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

impl RunRow {
    fn of(r: &RunReport) -> RunRow {
        RunRow {
            program: r.program.clone(),
            seed: r.seed,
            outcome: r.outcome,
            classification: r.classification,
            feedback_rounds: r.feedback_rounds,
            tokens_in: r.tokens.input,
            tokens_out: r.tokens.output,
            elapsed_ms: r.elapsed_ms,
            diagnostic: r.diagnostic.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub programs: usize,
    pub total_runs: usize,
    pub successful_runs: usize,
    /// Programs with at least one successful run.
    pub solved_count: usize,
    pub success_rate: f64,
    pub mean_tokens_in_on_success: f64,
    pub mean_tokens_out_on_success: f64,
    pub mean_time_ms_on_success: f64,
    pub direct_success: usize,
    pub feedback_driven_success: usize,
    pub fallback_feedback_rounds: usize,
    pub refinement: RefinementScore,
    pub refinement_success_percent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusResult {
    pub version: u32,
    pub seed: u64,
    pub repeats: u32,
    pub runs: Vec<RunRow>,
    pub skipped: Vec<SkippedFile>,
    pub aggregates: Aggregates,
    #[serde(skip)]
    pub reports: Vec<RunReport>,
}

fn mean(xs: impl Iterator<Item = u64>) -> f64 {
    let v: Vec<u64> = xs.collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<u64>() as f64 / v.len() as f64
    }
}

pub fn aggregate(reports: &[RunReport], gold: &BTreeMap<String, InvariantSet>, programs: usize) -> Aggregates {
    let ok: Vec<&RunReport> = reports.iter().filter(|r| r.is_success()).collect();
    let solved: BTreeSet<&str> = ok.iter().map(|r| r.program.as_str()).collect();
    let refinement = refinement_success_rate(reports, gold);
    Aggregates {
        programs,
        total_runs: reports.len(),
        successful_runs: ok.len(),
        solved_count: solved.len(),
        success_rate: if reports.is_empty() {
            0.0
        } else {
            ok.len() as f64 / reports.len() as f64
        },
        mean_tokens_in_on_success: mean(ok.iter().map(|r| r.tokens.input)),
        mean_tokens_out_on_success: mean(ok.iter().map(|r| r.tokens.output)),
        mean_time_ms_on_success: mean(ok.iter().map(|r| r.elapsed_ms)),
        direct_success: ok
            .iter()
            .filter(|r| r.classification == Classification::DirectSuccess)
            .count(),
        feedback_driven_success: ok
            .iter()
            .filter(|r| r.classification == Classification::FeedbackDrivenSuccess)
            .count(),
        fallback_feedback_rounds: reports
            .iter()
            .flat_map(|r| &r.rounds)
            .filter(|x| x.feedback == Some(FeedbackKind::Fallback))
            .count(),
        refinement_success_percent: refinement.percent(),
        refinement,
    }
}

/// Runs every program `repeats` times with seeds `seed + k`, `jobs` at a
/// time. `gateway_for` builds a fresh gateway per run. Results are ordered by
/// program name, then seed, whatever order the runs finish in.
pub fn run_corpus<F>(
    corpus: &Corpus,
    cfg: &RunConfig,
    repeats: u32,
    jobs: usize,
    prover: &dyn Prover,
    gateway_for: F,
) -> CorpusResult
where
    F: Fn(&CorpusEntry) -> Result<Gateway, GatewayError> + Sync,
{
    let work: Vec<(&CorpusEntry, u64)> = corpus
        .entries
        .iter()
        .flat_map(|e| (0..repeats as u64).map(move |k| (e, cfg.rng_seed.wrapping_add(k))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let mut reports: Vec<RunReport> = pool.install(|| {
        work.par_iter()
            .map(|(entry, seed)| {
                let run_cfg = RunConfig {
                    rng_seed: *seed,
                    ..cfg.clone()
                };
                match gateway_for(entry) {
                    Ok(mut gw) => run_synthesis(&entry.task, &run_cfg, &mut gw, prover),
                    Err(e) => error_report(&entry.name, *seed, e.to_string()),
                }
            })
            .collect()
    });
    reports.sort_by(|a, b| (a.program.as_str(), a.seed).cmp(&(b.program.as_str(), b.seed)));
    let gold: BTreeMap<String, InvariantSet> = corpus
        .entries
        .iter()
        .filter_map(|e| Some((e.name.clone(), e.gold.clone()?)))
        .collect();
    CorpusResult {
        version: SUMMARY_VERSION,
        seed: cfg.rng_seed,
        repeats,
        runs: reports.iter().map(RunRow::of).collect(),
        skipped: corpus.skipped.clone(),
        aggregates: aggregate(&reports, &gold, corpus.entries.len()),
        reports,
    }
}

fn error_report(program: &str, seed: u64, message: String) -> RunReport {
    RunReport {
        version: crate::engine::REPORT_VERSION,
        program: program.to_string(),
        seed,
        outcome: Outcome::Error,
        classification: Classification::Failure,
        feedback_rounds: 0,
        rounds: Vec::new(),
        final_invariants: None,
        tokens: Default::default(),
        elapsed_ms: 0,
        diagnostic: Some(message),
    }
}

impl CorpusResult {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>6} {:<16} {:<22} {:>4} {:>9} {:>9}",
            "program", "seed", "outcome", "classification", "fb", "tok_in", "tok_out"
        );
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{:<24} {:>6} {:<16} {:<22} {:>4} {:>9} {:>9}",
                r.program,
                r.seed,
                format!("{:?}", r.outcome),
                format!("{:?}", r.classification),
                r.feedback_rounds,
                r.tokens_in,
                r.tokens_out
            );
        }
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "\nsolved {}/{} programs, {}/{} runs ({:.1}%), direct {}, feedback-driven {}",
            a.solved_count,
            a.programs,
            a.successful_runs,
            a.total_runs,
            100.0 * a.success_rate,
            a.direct_success,
            a.feedback_driven_success
        );
        match a.refinement_success_percent {
            Some(p) => {
                let _ = writeln!(
                    out,
                    "refinement success {}/{} iterations ({p:.1}%)",
                    a.refinement.improved, a.refinement.iterations
                );
            }
            None => {
                let _ = writeln!(out, "refinement success: no feedback iterations");
            }
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped {}: {}", s.file, s.error);
        }
        out
    }
}
