//! Validity and entailment queries over integer formulas.
//!
//! [`SmtSolver`] drives an external SMT-LIB 2 solver through a pool of
//! long-lived processes. [`BruteForceProver`] answers the same questions by
//! exhaustive evaluation over a small box and serves as the reference oracle.

mod encode;
mod session;
pub mod sexp;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::{brute_force_validity, Assignment, OracleVerdict};
use crate::lang::Expr;

pub use encode::{encode_query, select_logic, symbol, term, EncodedQuery};
pub use session::SolverCommand;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Logic {
    LinearInts,
    NonlinearInts,
}

impl Logic {
    pub fn smtlib_name(self) -> &'static str {
        match self {
            Logic::LinearInts => "QF_LIA",
            Logic::NonlinearInts => "QF_NIA",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Valid,
    Invalid,
    Unknown,
    Timeout,
}

impl Status {
    pub fn is_valid(self) -> bool {
        self == Status::Valid
    }

    /// Unknown and Timeout: the solver did not establish an answer.
    pub fn is_soft(self) -> bool {
        matches!(self, Status::Unknown | Status::Timeout)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Valid => "Valid",
            Status::Invalid => "Invalid",
            Status::Unknown => "Unknown",
            Status::Timeout => "Timeout",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverBudget {
    #[serde(with = "millis")]
    pub per_query_timeout: Duration,
    /// `None` selects the logic from the query.
    pub logic: Option<Logic>,
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            per_query_timeout: Duration::from_secs(5),
            logic: None,
        }
    }
}

impl SolverBudget {
    pub fn with_timeout(timeout: Duration) -> SolverBudget {
        assert!(!timeout.is_zero(), "per-query timeout must be positive");
        SolverBudget {
            per_query_timeout: timeout,
            logic: None,
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryVerdict {
    pub status: Status,
    /// A counterexample; present only when `status` is Invalid.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl QueryVerdict {
    pub fn valid() -> QueryVerdict {
        QueryVerdict {
            status: Status::Valid,
            model: None,
            reason: None,
        }
    }

    pub fn invalid(model: Assignment) -> QueryVerdict {
        QueryVerdict {
            status: Status::Invalid,
            model: Some(model),
            reason: None,
        }
    }

    pub fn with_status(status: Status, reason: Option<String>) -> QueryVerdict {
        QueryVerdict {
            status,
            model: None,
            reason,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SmtError {
    #[error("solver unavailable: {0}")]
    Unavailable(String),
    #[error("solver protocol error: {message}")]
    Protocol { message: String, transcript: String },
    #[error("solver crashed: {0}")]
    Crashed(String),
    #[error("solver did not answer in time")]
    WallTimeout,
}

/// Answers validity questions about integer formulas.
pub trait Prover: Send + Sync {
    /// Is `hypothesis ==> goal` true for every integer value of `vars`?
    fn check_validity(
        &self,
        hypothesis: &Expr,
        goal: &Expr,
        vars: &BTreeSet<String>,
        budget: &SolverBudget,
    ) -> Result<QueryVerdict, SmtError>;

    /// Does the conjunction of `conds` entail `p`?
    fn check_entailment(
        &self,
        conds: &[Expr],
        p: &Expr,
        vars: &BTreeSet<String>,
        budget: &SolverBudget,
    ) -> Result<QueryVerdict, SmtError> {
        self.check_validity(&Expr::conjoin(conds.iter().cloned()), p, vars, budget)
    }

    /// Identifies the decision procedure for reports.
    fn describe(&self) -> String;
}

#[derive(Clone, Debug, Default)]
pub struct SolverConfig {
    pub command: SolverCommand,
    /// Directory receiving one `.smt2` script per query.
    pub dump_dir: Option<PathBuf>,
}

impl SolverConfig {
    /// Reads `INVSYNTH_SOLVER` (binary path) and `INVSYNTH_SMT_DUMP`
    /// (script dump directory) over the defaults.
    pub fn from_env() -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Ok(path) = std::env::var("INVSYNTH_SOLVER") {
            if !path.is_empty() {
                cfg.command.program = PathBuf::from(path);
            }
        }
        if let Ok(dir) = std::env::var("INVSYNTH_SMT_DUMP") {
            if !dir.is_empty() {
                cfg.dump_dir = Some(PathBuf::from(dir));
            }
        }
        cfg
    }
}

/// A pooled external solver.
pub struct SmtSolver {
    pool: session::Pool,
    dump_dir: Option<PathBuf>,
    version: String,
}

impl SmtSolver {
    /// Starts one process to confirm the solver works.
    pub fn new(cfg: SolverConfig) -> Result<SmtSolver, SmtError> {
        let pool = session::Pool::new(cfg.command);
        let version = pool.version()?;
        if let Some(dir) = &cfg.dump_dir {
            std::fs::create_dir_all(dir).map_err(|e| {
                SmtError::Unavailable(format!("cannot create dump directory {}: {e}", dir.display()))
            })?;
        }
        Ok(SmtSolver {
            pool,
            dump_dir: cfg.dump_dir,
            version,
        })
    }

    pub fn from_env() -> Result<SmtSolver, SmtError> {
        SmtSolver::new(SolverConfig::from_env())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    fn dump(&self, q: &EncodedQuery, budget: &SolverBudget) {
        let Some(dir) = &self.dump_dir else { return };
        let script = q.script(budget.per_query_timeout.as_millis() as u64);
        let digest = hex::encode(Sha256::digest(script.as_bytes()));
        let _ = std::fs::write(dir.join(format!("query-{}.smt2", &digest[..16])), script);
    }
}

impl Prover for SmtSolver {
    fn check_validity(
        &self,
        hypothesis: &Expr,
        goal: &Expr,
        vars: &BTreeSet<String>,
        budget: &SolverBudget,
    ) -> Result<QueryVerdict, SmtError> {
        let q = encode_query(hypothesis, goal, vars, budget.logic);
        self.dump(&q, budget);
        self.pool.run(&q, budget.per_query_timeout)
    }

    fn describe(&self) -> String {
        format!("smt ({})", self.version)
    }
}

/// Exhaustive evaluation over `[-bound, bound]` per variable. Valid answers
/// are only as strong as the box; used for cross-checking and in tests.
#[derive(Clone, Copy, Debug)]
pub struct BruteForceProver {
    pub bound: i64,
}

impl Prover for BruteForceProver {
    fn check_validity(
        &self,
        hypothesis: &Expr,
        goal: &Expr,
        vars: &BTreeSet<String>,
        _budget: &SolverBudget,
    ) -> Result<QueryVerdict, SmtError> {
        let mut all = vars.clone();
        hypothesis.collect_vars(&mut all);
        goal.collect_vars(&mut all);
        Ok(match brute_force_validity(hypothesis, goal, &all, self.bound) {
            OracleVerdict::Valid { .. } => QueryVerdict::valid(),
            OracleVerdict::Invalid { witness, .. } => QueryVerdict::invalid(witness),
        })
    }

    fn describe(&self) -> String {
        format!("brute force (bound {})", self.bound)
    }
}
