//! Run records. The JSON shape is versioned by `REPORT_VERSION`.

use serde::{Deserialize, Serialize};

use crate::checker::CheckReport;
use crate::gateway::TokenCount;
use crate::lang::InvariantSet;
use crate::vcgen::{VcResult, VerificationCondition};

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Solved,
    BudgetExhausted,
    Error,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Solved => 0,
            Outcome::BudgetExhausted => 2,
            Outcome::Error => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    DirectSuccess,
    FeedbackDrivenSuccess,
    Failure,
}

/// The pipeline stages in the order a round performs them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Propose,
    CheckInvariants,
    TerminationTest,
    NaturalProof,
    FormalizeProof,
    CheckProof,
    RefineInvariants,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    /// Built from located reasoning errors.
    Reasoning,
    /// The proof checked clean or could not be read; names the failing
    /// obligation and its counterexample instead.
    Fallback,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub stages: Vec<Stage>,
    /// The candidate checked this round; absent if the reply was unreadable.
    pub invariants: Option<InvariantSet>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub parse_errors: Vec<String>,
    pub vc_results: Vec<VcResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected_vc: Option<VerificationCondition>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub natural_proof: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub formalized_proof: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub check_report: Option<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub feedback: Option<FeedbackKind>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unmatched_steps: Vec<String>,
    pub tokens: TokenCount,
    /// Run time when the round ended.
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub program: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub classification: Classification,
    pub feedback_rounds: usize,
    pub rounds: Vec<RoundRecord>,
    pub final_invariants: Option<InvariantSet>,
    pub tokens: TokenCount,
    pub elapsed_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Solved
    }
}
