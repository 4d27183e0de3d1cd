//! The refinement loop: propose, verify, ask for a proof of one failed
//! obligation, formalize it, check it, and feed the located errors back.

mod report;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checker::check_proof;
use crate::gateway::{ChatSession, Gateway, GatewayError, Role, TokenCount};
use crate::lang::{parse_invariant_block, InvariantSet, Task};
use crate::proof::{parse_formalized_proof, parse_structured_proof};
use crate::prompts::{
    fallback_feedback, render_feedback, render_formalize_request, render_initial, render_proof_request, PromptBundle,
};
use crate::smt::{Prover, SolverBudget};
use crate::vcgen::{all_valid, generate_vcs, try_check_vcs, VcResult};

pub use report::{Classification, FeedbackKind, Outcome, RoundRecord, RunReport, Stage, REPORT_VERSION};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub wall_clock_budget: Duration,
    pub token_budget: u64,
    pub solver: SolverBudget,
    pub rng_seed: u64,
    /// `None` runs until a budget is spent.
    pub max_feedback_rounds: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            wall_clock_budget: Duration::from_secs(600),
            token_budget: 150_000,
            solver: SolverBudget::default(),
            rng_seed: 0,
            max_feedback_rounds: None,
        }
    }
}

/// Among the non-Valid results, the first obligation kind in deductive
/// order wins; ties within that kind are broken with `rng`.
pub fn select_failed_vc<'a, R: Rng>(results: &'a [VcResult], rng: &mut R) -> Option<&'a VcResult> {
    let kind = results.iter().filter(|r| !r.status.is_valid()).map(|r| r.vc.kind).min()?;
    let candidates: Vec<&VcResult> = results
        .iter()
        .filter(|r| !r.status.is_valid() && r.vc.kind == kind)
        .collect();
    if candidates.len() == 1 {
        return Some(candidates[0]);
    }
    Some(candidates[rng.random_range(0..candidates.len())])
}

/// Recorded latencies drive the clock on replay so reports do not depend on
/// machine speed.
enum Clock {
    Wall(Instant),
    Virtual(Duration),
}

impl Clock {
    fn elapsed(&self) -> Duration {
        match self {
            Clock::Wall(t) => t.elapsed(),
            Clock::Virtual(d) => *d,
        }
    }

    fn advance(&mut self, by: Duration) {
        if let Clock::Virtual(d) = self {
            *d += by;
        }
    }
}

enum Stop {
    Budget(String),
    Error(String),
}

struct Run<'a> {
    cfg: &'a RunConfig,
    gateway: &'a mut Gateway,
    prover: &'a dyn Prover,
    clock: Clock,
    tokens: TokenCount,
}

impl Run<'_> {
    fn check_budget(&self) -> Result<(), Stop> {
        if self.tokens.total() >= self.cfg.token_budget {
            return Err(Stop::Budget(format!(
                "token budget spent ({} of {})",
                self.tokens.total(),
                self.cfg.token_budget
            )));
        }
        let elapsed = self.clock.elapsed();
        if elapsed >= self.cfg.wall_clock_budget {
            return Err(Stop::Budget(format!(
                "time budget spent ({} ms of {} ms)",
                elapsed.as_millis(),
                self.cfg.wall_clock_budget.as_millis()
            )));
        }
        Ok(())
    }

    fn send(&mut self, session: &mut ChatSession, prompt: &PromptBundle, round: &mut RoundRecord) -> Result<String, Stop> {
        self.check_budget()?;
        let reply = self.gateway.send(session, prompt).map_err(|e: GatewayError| Stop::Error(e.to_string()))?;
        self.clock.advance(reply.latency);
        self.tokens += reply.tokens;
        round.tokens += reply.tokens;
        Ok(reply.text)
    }

    /// Sends `prompt`; if the reply does not parse, asks once more with a
    /// format reminder. Returns the raw text of the last reply and the result.
    fn ask<T>(
        &mut self,
        session: &mut ChatSession,
        prompt: &PromptBundle,
        round: &mut RoundRecord,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<(String, Option<T>), Stop> {
        let text = self.send(session, prompt, round)?;
        match parse(&text) {
            Ok(v) => Ok((text, Some(v))),
            Err(first) => {
                round.parse_errors.push(first.clone());
                let text = self.send(session, &prompt.with_reminder(&first), round)?;
                match parse(&text) {
                    Ok(v) => Ok((text, Some(v))),
                    Err(second) => {
                        round.parse_errors.push(second);
                        Ok((text, None))
                    }
                }
            }
        }
    }

    fn verify(&mut self, task: &Task, inv: &InvariantSet) -> Result<Vec<VcResult>, Stop> {
        self.check_budget()?;
        try_check_vcs(&generate_vcs(&task.program, inv), self.prover, &self.cfg.solver)
            .map_err(|e| Stop::Error(format!("solver: {e}")))
    }
}

fn finish(report: &mut RunReport, run: &Run<'_>) {
    report.tokens = run.tokens;
    report.elapsed_ms = run.clock.elapsed().as_millis() as u64;
    report.classification = match (report.outcome, report.feedback_rounds) {
        (Outcome::Solved, 0) => Classification::DirectSuccess,
        (Outcome::Solved, _) => Classification::FeedbackDrivenSuccess,
        _ => Classification::Failure,
    };
}

pub fn run_synthesis(task: &Task, cfg: &RunConfig, gateway: &mut Gateway, prover: &dyn Prover) -> RunReport {
    let clock = if gateway.is_replay() {
        Clock::Virtual(Duration::ZERO)
    } else {
        Clock::Wall(Instant::now())
    };
    let mut run = Run {
        cfg,
        gateway,
        prover,
        clock,
        tokens: TokenCount::default(),
    };
    let mut report = RunReport {
        version: REPORT_VERSION,
        program: task.program.name.clone(),
        seed: cfg.rng_seed,
        outcome: Outcome::Error,
        classification: Classification::Failure,
        feedback_rounds: 0,
        rounds: Vec::new(),
        final_invariants: None,
        tokens: TokenCount::default(),
        elapsed_ms: 0,
        diagnostic: None,
    };
    let stop = iterate(task, &mut run, &mut report);
    match stop {
        Ok(()) => report.outcome = Outcome::Solved,
        Err(Stop::Budget(msg)) => {
            report.outcome = Outcome::BudgetExhausted;
            report.diagnostic = Some(msg);
        }
        Err(Stop::Error(msg)) => {
            report.outcome = Outcome::Error;
            report.diagnostic = Some(msg);
        }
    }
    finish(&mut report, &run);
    report
}

fn invariant_parser(task: &Task) -> impl Fn(&str) -> Result<InvariantSet, String> + '_ {
    move |text| parse_invariant_block(text, &task.program).map_err(|e| e.to_string())
}

fn iterate(task: &Task, run: &mut Run<'_>, report: &mut RunReport) -> Result<(), Stop> {
    let mut rng = ChaCha8Rng::seed_from_u64(run.cfg.rng_seed);
    let mut synth = ChatSession::new(Role::Synthesizer);

    let mut round = RoundRecord::default();
    round.stages.push(Stage::Propose);
    let initial = render_initial(&task.source);
    let proposal = run.ask(&mut synth, &initial, &mut round, invariant_parser(task));
    let mut inv = match proposal {
        Ok((_, Some(inv))) => inv,
        Ok((_, None)) => InvariantSet::default(),
        Err(stop) => {
            report.rounds.push(round);
            return Err(stop);
        }
    };
    round.invariants = Some(inv.clone());

    loop {
        round.index = report.rounds.len();
        let outcome = one_round(task, run, &mut rng, &mut synth, &inv, &mut round, report);
        round.elapsed_ms = run.clock.elapsed().as_millis() as u64;
        match outcome {
            Ok(RoundEnd::Solved) => {
                report.rounds.push(round);
                // Confirm once more before claiming success.
                let again = run.verify(task, &inv)?;
                if !all_valid(&again) {
                    return Err(Stop::Error("final invariants did not re-verify".into()));
                }
                report.final_invariants = Some(inv);
                return Ok(());
            }
            Ok(RoundEnd::Refined(next)) => {
                report.rounds.push(round);
                report.feedback_rounds += 1;
                round = RoundRecord::default();
                match next {
                    Ok(n) => inv = n,
                    Err(errors) => round.parse_errors = errors,
                }
                round.invariants = Some(inv.clone());
            }
            Err(stop) => {
                report.rounds.push(round);
                return Err(stop);
            }
        }
    }
}

enum RoundEnd {
    Solved,
    /// The refined set, or the parse errors that kept the previous one.
    Refined(Result<InvariantSet, Vec<String>>),
}

fn one_round(
    task: &Task,
    run: &mut Run<'_>,
    rng: &mut ChaCha8Rng,
    synth: &mut ChatSession,
    inv: &InvariantSet,
    round: &mut RoundRecord,
    report: &RunReport,
) -> Result<RoundEnd, Stop> {
    let prog = &task.program;
    round.stages.push(Stage::CheckInvariants);
    let results = run.verify(task, inv)?;
    round.vc_results = results.clone();

    round.stages.push(Stage::TerminationTest);
    if all_valid(&results) {
        return Ok(RoundEnd::Solved);
    }
    let selected = select_failed_vc(&results, rng).expect("some result is not valid").clone();
    round.selected_vc = Some(selected.vc.clone());

    round.stages.push(Stage::NaturalProof);
    let request = render_proof_request(prog, inv, &selected.vc);
    let (proof_text, structured) = run.ask(synth, &request, round, |t| {
        parse_structured_proof(t).map_err(|e| e.to_string())
    })?;
    round.natural_proof = Some(proof_text);

    let mut check = None;
    if let Some(structured) = structured {
        round.stages.push(Stage::FormalizeProof);
        let mut formalizer = ChatSession::new(Role::Formalizer);
        let request = render_formalize_request(&structured);
        let (formal_text, formal) = run.ask(&mut formalizer, &request, round, |t| {
            parse_formalized_proof(t, prog).map_err(|e| e.to_string())
        })?;
        round.formalized_proof = Some(formal_text);
        if let Some(formal) = formal {
            round.stages.push(Stage::CheckProof);
            round.unmatched_steps = formal.unmatched_labels(&structured);
            let r = check_proof(&formal, prog, &selected.vc, run.prover, &run.cfg.solver);
            check = Some(r);
        }
    }

    let feedback = match &check {
        Some(r) if !r.errors.is_empty() => {
            round.feedback = Some(FeedbackKind::Reasoning);
            render_feedback(r, prog, inv, &results)
        }
        _ => {
            round.feedback = Some(FeedbackKind::Fallback);
            fallback_feedback(&selected, prog, inv, &results)
        }
    };
    round.check_report = check;

    if let Some(max) = run.cfg.max_feedback_rounds {
        if report.feedback_rounds >= max {
            return Err(Stop::Budget(format!("feedback round limit {max} reached")));
        }
    }
    round.stages.push(Stage::RefineInvariants);
    let (_, refined) = run.ask(synth, &feedback, round, invariant_parser(task))?;
    Ok(RoundEnd::Refined(refined.ok_or_else(|| round.parse_errors.clone())))
}
