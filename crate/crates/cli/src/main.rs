mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use invsynth_core::bench::{load_corpus, run_corpus};
use invsynth_core::checker::check_proof;
use invsynth_core::engine::{run_synthesis, select_failed_vc};
use invsynth_core::gateway::{
    load_transcript, Gateway, GatewayError, LiveBackend, ReplayBackend, ScriptedBackend, ScriptedReply, TranscriptWriter,
};
use invsynth_core::lang::{parse_invariant_block, InvariantSet, Task};
use invsynth_core::proof::{parse_formalized_proof, parse_structured_proof};
use invsynth_core::smt::{SmtSolver, SolverConfig};
use invsynth_core::vcgen::{check_vcs, generate_vcs, VcKind, VcResult, ASSERTION_TARGET};

use config::{Settings, Source};

const EXIT_INVALID: u8 = 1;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_SOFTWARE: u8 = 70;
const EXIT_CONFIG: u8 = 78;

/// Loop invariant synthesis with verifier and proof-checking feedback.
#[derive(Parser, Debug)]
#[command(name = "invsynth", version, after_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check candidate invariants: one line per verification condition.
    Verify {
        /// C program with one loop and an assertion after it.
        program: PathBuf,
        /// Invariants as `assert(...);` lines or a `loop invariant` block.
        #[arg(long)]
        invariants: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the refinement loop until the invariants verify or a budget runs out.
    Synthesize {
        program: PathBuf,
        #[command(flatten)]
        backend: Backend,
        /// Write the run report (JSON) here.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
        #[command(flatten)]
        common: Common,
    },
    /// Check a formalized proof against one verification condition.
    CheckProof {
        program: PathBuf,
        #[arg(long)]
        invariants: PathBuf,
        /// Formalized proof with [Initial]/[Proof]/[Conclusion] sections.
        #[arg(long)]
        proof: PathBuf,
        /// Structured natural-language proof; step labels are cross-referenced.
        #[arg(long)]
        natural: Option<PathBuf>,
        /// `postcondition`, `establishment:<id>` or `preservation:<id>`.
        /// Defaults to the obligation the refinement loop would pick.
        #[arg(long)]
        vc: Option<String>,
        /// Write the check report (JSON) here.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every program in a directory and summarize.
    Bench {
        /// Directory of `*.c` programs with optional `.gold` and `.transcript.jsonl` siblings.
        dir: PathBuf,
        /// Use the configured provider instead of per-program transcripts.
        #[arg(long)]
        live: bool,
        /// Runs per program; run k uses seed + k.
        #[arg(long, default_value_t = 1)]
        repeats: u32,
        /// Parallel runs (overrides `bench.jobs`).
        #[arg(long)]
        jobs: Option<usize>,
        /// Write the JSON summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Write one run report per run into this directory.
        #[arg(long)]
        reports: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for choosing among failed obligations.
    #[arg(long)]
    seed: Option<u64>,
    /// SMT solver binary.
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Per-query solver timeout in milliseconds.
    #[arg(long)]
    solver_timeout_ms: Option<u64>,
    /// Print effective settings and their sources.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct Backend {
    /// Answer model requests from a recorded transcript.
    #[arg(long, value_name = "TRANSCRIPT", group = "source")]
    replay: Option<PathBuf>,
    /// Call the configured provider.
    #[arg(long, group = "source")]
    live: bool,
    /// Answer with the replies in a JSON array, in order. Each reply is a string
    /// or `{"text": ..., "tokens": {"input": N, "output": N}, "latency_ms": N}`.
    #[arg(long, value_name = "REPLIES", group = "source")]
    script: Option<PathBuf>,
    /// Record every exchange to this transcript (with --live or --script).
    #[arg(long, value_name = "TRANSCRIPT", conflicts_with = "replay")]
    record: Option<PathBuf>,
    /// Provider model (overrides `provider.model`).
    #[arg(long)]
    model: Option<String>,
    /// Provider base URL (overrides `provider.base_url`).
    #[arg(long)]
    base_url: Option<String>,
}

#[derive(Args, Debug)]
struct Budgets {
    #[arg(long)]
    token_budget: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_budget: Option<u64>,
    #[arg(long)]
    max_rounds: Option<usize>,
}

fn config_help() -> String {
    let mut s = String::from("Configuration file keys (flags > environment > file):\n");
    for (k, d) in config::KEYS {
        s.push_str(&format!("  {k:<28} {d}\n"));
    }
    s.push_str("Environment: INVSYNTH_SOLVER (solver binary), INVSYNTH_SMT_DUMP (query dump dir), API key variable.\n");
    s.push_str("Exit codes: 0 solved/valid, 1 invalid, 2 budget exhausted, 3 run error, 64 usage, 65 bad input, 66 missing input, 78 config.");
    s
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("invsynth: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn settings(common: &Common, budgets: Option<&Budgets>) -> Result<Settings, Failure> {
    let mut s = match &common.config {
        Some(p) => Settings::load(p).map_err(|e| fail(EXIT_CONFIG, e.0))?,
        None => Settings::default(),
    };
    if let Ok(p) = std::env::var("INVSYNTH_SOLVER") {
        if !p.is_empty() {
            s.set("solver.path", p, Source::Env);
        }
    }
    if let Some(seed) = common.seed {
        s.set("seed", seed.to_string(), Source::Flag);
    }
    if let Some(p) = &common.solver {
        s.set("solver.path", p.display().to_string(), Source::Flag);
    }
    if let Some(ms) = common.solver_timeout_ms {
        s.set("solver.timeout_ms", ms.to_string(), Source::Flag);
    }
    if let Some(b) = budgets {
        if let Some(t) = b.token_budget {
            s.set("budget.tokens", t.to_string(), Source::Flag);
        }
        if let Some(t) = b.time_budget {
            s.set("budget.seconds", t.to_string(), Source::Flag);
        }
        if let Some(r) = b.max_rounds {
            s.set("budget.max_feedback_rounds", r.to_string(), Source::Flag);
        }
    }
    if common.verbose {
        eprint!("{}", s.dump());
    }
    Ok(s)
}

fn solver(s: &Settings) -> Result<SmtSolver, Failure> {
    let mut cfg = SolverConfig::from_env();
    if let Some(p) = s.solver_path() {
        cfg.command.program = p;
    }
    SmtSolver::new(cfg).map_err(|e| fail(EXIT_CONFIG, e.to_string()))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(EXIT_NO_INPUT, format!("{}: {e}", path.display())))
}

fn load_task(path: &Path) -> Result<Task, Failure> {
    let source = read(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    Task::parse(&name, &source).map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn load_invariants(path: &Path, task: &Task) -> Result<InvariantSet, Failure> {
    parse_invariant_block(&read(path)?, &task.program).map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| fail(EXIT_SOFTWARE, format!("{}: {e}", path.display())))
}

fn gateway(b: &Backend, s: &mut Settings) -> Result<Gateway, Failure> {
    if let Some(m) = &b.model {
        s.set("provider.model", m.clone(), Source::Flag);
    }
    if let Some(u) = &b.base_url {
        s.set("provider.base_url", u.clone(), Source::Flag);
    }
    let g = if let Some(t) = &b.replay {
        let transcript = load_transcript(t).map_err(|e| fail(EXIT_DATA, e.to_string()))?;
        Gateway::new(Box::new(ReplayBackend::new(transcript)))
    } else if let Some(path) = &b.script {
        let replies: Vec<ScriptedReply> = serde_json::from_str(&read(path)?)
            .map_err(|e| fail(EXIT_DATA, format!("{}: expected a JSON array of replies: {e}", path.display())))?;
        Gateway::new(Box::new(ScriptedBackend::new(replies)))
    } else if b.live {
        let p = s.provider().map_err(|e| fail(EXIT_CONFIG, e.0))?;
        Gateway::new(Box::new(LiveBackend::new(p).map_err(|e: GatewayError| fail(EXIT_CONFIG, e.to_string()))?))
    } else {
        return Err(fail(EXIT_USAGE, "choose a backend: --replay <TRANSCRIPT>, --live or --script <REPLIES>"));
    };
    match &b.record {
        Some(path) => Ok(g.recording(TranscriptWriter::create(path).map_err(|e| fail(EXIT_SOFTWARE, e.to_string()))?)),
        None => Ok(g),
    }
}

fn status_line(r: &VcResult) -> String {
    let mut line = format!("{:<14} {:<10} {}", r.vc.kind.to_string(), r.vc.target, r.status);
    if let Some(m) = &r.counterexample {
        let parts: Vec<String> = m.iter().map(|(k, v)| format!("{k}={v}")).collect();
        line.push_str(&format!("  [{}]", parts.join(", ")));
    }
    line
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Verify {
            program,
            invariants,
            common,
        } => {
            let s = settings(&common, None)?;
            let cfg = s.run_config().map_err(|e| fail(EXIT_CONFIG, e.0))?;
            let task = load_task(&program)?;
            let inv = load_invariants(&invariants, &task)?;
            let prover = solver(&s)?;
            let results = check_vcs(&generate_vcs(&task.program, &inv), &prover, &cfg.solver);
            for r in &results {
                println!("{}", status_line(r));
            }
            Ok(if results.iter().all(|r| r.status.is_valid()) { 0 } else { EXIT_INVALID })
        }
        Command::Synthesize {
            program,
            backend,
            output,
            budgets,
            common,
        } => {
            let mut s = settings(&common, Some(&budgets))?;
            let cfg = s.run_config().map_err(|e| fail(EXIT_CONFIG, e.0))?;
            let task = load_task(&program)?;
            let mut gw = gateway(&backend, &mut s)?;
            let prover = solver(&s)?;
            if common.verbose {
                eprintln!("backend: {}; solver: {}", gw.describe(), prover.version());
            }
            let report = run_synthesis(&task, &cfg, &mut gw, &prover);
            println!("outcome: {:?}", report.outcome);
            println!("classification: {:?}", report.classification);
            println!("feedback rounds: {}", report.feedback_rounds);
            println!("tokens: {} in, {} out", report.tokens.input, report.tokens.output);
            if let Some(inv) = &report.final_invariants {
                println!("invariants:\n{}", inv.to_asserts());
            }
            if let Some(d) = &report.diagnostic {
                println!("diagnostic: {d}");
            }
            if let Some(path) = output {
                write_file(&path, &report.to_json())?;
            }
            Ok(report.outcome.exit_code() as u8)
        }
        Command::CheckProof {
            program,
            invariants,
            proof,
            natural,
            vc,
            output,
            common,
        } => {
            let s = settings(&common, None)?;
            let cfg = s.run_config().map_err(|e| fail(EXIT_CONFIG, e.0))?;
            let task = load_task(&program)?;
            let inv = load_invariants(&invariants, &task)?;
            let formal = parse_formalized_proof(&read(&proof)?, &task.program)
                .map_err(|e| fail(EXIT_DATA, format!("{}: {e}", proof.display())))?;
            let prover = solver(&s)?;
            let vcs = generate_vcs(&task.program, &inv);
            let target = match vc {
                Some(sel) => select_vc(&sel, &vcs).ok_or_else(|| fail(EXIT_USAGE, format!("no verification condition `{sel}`")))?,
                None => {
                    let results = check_vcs(&vcs, &prover, &cfg.solver);
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.rng_seed);
                    match select_failed_vc(&results, &mut rng) {
                        Some(r) => r.vc.clone(),
                        None => {
                            println!("all verification conditions are valid; nothing to check");
                            return Ok(0);
                        }
                    }
                }
            };
            if let Some(n) = natural {
                let structured = parse_structured_proof(&read(&n)?)
                    .map_err(|e| fail(EXIT_DATA, format!("{}: {e}", n.display())))?;
                for label in formal.unmatched_labels(&structured) {
                    eprintln!("warning: formalized step `{label}` matches no step of the natural proof");
                }
            }
            let report = check_proof(&formal, &task.program, &target, &prover, &cfg.solver);
            println!("checking {} {}: {} implications", target.kind, target.target, report.checked_implications);
            for e in &report.errors {
                println!("{} | {:?} | {} | {} | \"{}\"", e.step_label, e.kind, e.solver_status, e.formula, e.comment);
            }
            if let Some(path) = output {
                let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
                text.push('\n');
                write_file(&path, &text)?;
            }
            Ok(if report.errors.is_empty() { 0 } else { EXIT_INVALID })
        }
        Command::Bench {
            dir,
            live,
            repeats,
            jobs,
            summary,
            reports,
            budgets,
            common,
        } => {
            let mut s = settings(&common, Some(&budgets))?;
            if let Some(j) = jobs {
                s.set("bench.jobs", j.to_string(), Source::Flag);
            }
            let cfg = s.run_config().map_err(|e| fail(EXIT_CONFIG, e.0))?;
            let jobs = s.jobs().map_err(|e| fail(EXIT_CONFIG, e.0))?;
            let corpus = load_corpus(&dir).map_err(|e| fail(EXIT_NO_INPUT, format!("{}: {e}", dir.display())))?;
            let prover = solver(&s)?;
            let provider = if live {
                Some(s.provider().map_err(|e| fail(EXIT_CONFIG, e.0))?)
            } else {
                None
            };
            let result = run_corpus(&corpus, &cfg, repeats, jobs, &prover, |entry| match &provider {
                Some(p) => Ok(Gateway::new(Box::new(LiveBackend::new(p.clone())?))),
                None => {
                    let path = entry.transcript.as_ref().ok_or_else(|| {
                        GatewayError::Transcript(format!("{} has no transcript", entry.name))
                    })?;
                    Ok(Gateway::new(Box::new(ReplayBackend::new(load_transcript(path)?))))
                }
            });
            print!("{}", result.table());
            if let Some(path) = summary {
                write_file(&path, &result.summary_json())?;
            }
            if let Some(dir) = reports {
                std::fs::create_dir_all(&dir).map_err(|e| fail(EXIT_SOFTWARE, format!("{}: {e}", dir.display())))?;
                for r in &result.reports {
                    write_file(&dir.join(format!("{}.seed{}.json", r.program, r.seed)), &r.to_json())?;
                }
            }
            Ok(0)
        }
    }
}

fn select_vc(sel: &str, vcs: &[invsynth_core::vcgen::VerificationCondition]) -> Option<invsynth_core::vcgen::VerificationCondition> {
    let (kind, target) = match sel.split_once(':') {
        Some(("establishment", id)) => (VcKind::Establishment, id),
        Some(("preservation", id)) => (VcKind::Preservation, id),
        None if sel == "postcondition" => (VcKind::PostCondition, ASSERTION_TARGET),
        _ => return None,
    };
    vcs.iter().find(|v| v.kind == kind && v.target == target).cloned()
}
