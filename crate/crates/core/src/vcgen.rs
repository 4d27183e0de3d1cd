//! Verification conditions for `{P} while B do S {Q}` with a candidate
//! invariant set: establishment and preservation per invariant, plus one
//! post-condition obligation.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::Assignment;
use crate::lang::{Expr, InvariantSet, Program, Stmt};
use crate::smt::{Prover, SolverBudget, Status};

/// Ordered as the obligations are usually discharged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VcKind {
    Establishment,
    Preservation,
    PostCondition,
}

impl fmt::Display for VcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VcKind::Establishment => "Establishment",
            VcKind::Preservation => "Preservation",
            VcKind::PostCondition => "PostCondition",
        })
    }
}

pub const ASSERTION_TARGET: &str = "assertion";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationCondition {
    pub kind: VcKind,
    /// Invariant id, or `"assertion"`.
    pub target: String,
    pub hypothesis: Expr,
    pub goal: Expr,
    pub quantified_vars: BTreeSet<String>,
}

impl VerificationCondition {
    pub fn formula(&self) -> Expr {
        Expr::implies(Expr::paren(self.hypothesis.clone()), Expr::paren(self.goal.clone()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcResult {
    pub vc: VerificationCondition,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Assignment>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

/// Hands out names that collide with nothing seen so far.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    pub fn avoiding<'a, I: IntoIterator<Item = &'a String>>(names: I) -> Fresh {
        Fresh {
            used: names.into_iter().cloned().collect(),
        }
    }

    pub fn reserve(&mut self, e: &Expr) {
        e.collect_vars(&mut self.used);
    }

    pub fn next(&mut self, base: &str) -> String {
        let mut k = 0;
        loop {
            let candidate = format!("{base}_{k}");
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
            k += 1;
        }
    }
}

/// Weakest precondition of a loop-free statement list. Havoc targets are
/// renamed to fresh names, which are added to `quantified`.
pub fn wp(stmts: &[Stmt], post: &Expr, fresh: &mut Fresh, quantified: &mut BTreeSet<String>) -> Expr {
    stmts.iter().rev().fold(post.clone(), |q, stmt| match stmt {
        Stmt::Assign(v, e) => q.substitute_one(v, e),
        Stmt::Havoc(v) => {
            if !q.mentions(v) {
                return q;
            }
            let renamed = fresh.next(v);
            quantified.insert(renamed.clone());
            q.substitute_one(v, &Expr::var(renamed))
        }
        Stmt::Assume(e) => Expr::implies(e.clone(), q),
        Stmt::Skip => q,
        Stmt::If(c, then, els) => {
            let on_true = wp(then, &q, fresh, quantified);
            let on_false = wp(els, &q, fresh, quantified);
            Expr::and(
                Expr::implies(c.clone(), on_true),
                Expr::implies(c.negated(), on_false),
            )
        }
    })
}

/// Strongest postcondition of a loop-free statement list from `true`, as a
/// formula over the current variable names. Overwritten values are renamed
/// to fresh names, which are added to `quantified`.
pub fn sp(stmts: &[Stmt], fresh: &mut Fresh, quantified: &mut BTreeSet<String>) -> Expr {
    Expr::conjoin(sp_facts(stmts, Vec::new(), fresh, quantified))
}

fn sp_facts(
    stmts: &[Stmt],
    mut facts: Vec<Expr>,
    fresh: &mut Fresh,
    quantified: &mut BTreeSet<String>,
) -> Vec<Expr> {
    let rename = |facts: &mut Vec<Expr>, v: &str, fresh: &mut Fresh, quantified: &mut BTreeSet<String>| {
        let old = fresh.next(v);
        quantified.insert(old.clone());
        let old = Expr::var(old);
        for f in facts.iter_mut() {
            *f = f.substitute_one(v, &old);
        }
        old
    };
    for stmt in stmts {
        match stmt {
            Stmt::Assign(v, e) => {
                let e = if facts.iter().any(|f| f.mentions(v)) || e.mentions(v) {
                    let old = rename(&mut facts, v, fresh, quantified);
                    e.substitute_one(v, &old)
                } else {
                    e.clone()
                };
                facts.push(Expr::equals(Expr::var(v.clone()), e));
            }
            Stmt::Havoc(v) => {
                if facts.iter().any(|f| f.mentions(v)) {
                    rename(&mut facts, v, fresh, quantified);
                }
            }
            Stmt::Assume(e) => facts.push(e.clone()),
            Stmt::Skip => {}
            Stmt::If(c, then, els) => {
                let mut on_true = facts.clone();
                on_true.push(c.clone());
                let mut on_false = facts;
                on_false.push(c.negated());
                let t = Expr::conjoin(sp_facts(then, on_true, fresh, quantified));
                let f = Expr::conjoin(sp_facts(els, on_false, fresh, quantified));
                facts = vec![Expr::or(Expr::paren(t), Expr::paren(f))];
            }
        }
        facts.retain(|f| !f.is_true());
    }
    facts
}

fn fresh_for(prog: &Program, inv: &InvariantSet) -> Fresh {
    let mut fresh = Fresh::avoiding(&prog.vars);
    for i in inv.iter() {
        fresh.reserve(&i.formula);
    }
    fresh.reserve(&prog.loop_cond);
    fresh.reserve(&prog.assertion);
    fresh
}

/// The symbolic state at loop entry, used as the establishment hypothesis.
pub fn entry_state(prog: &Program) -> (Expr, BTreeSet<String>) {
    let mut fresh = Fresh::avoiding(&prog.vars);
    let mut quantified = prog.var_set();
    let state = sp(&prog.pre, &mut fresh, &mut quantified);
    (state, quantified)
}

pub fn generate_vcs(prog: &Program, inv: &InvariantSet) -> Vec<VerificationCondition> {
    let mut fresh = fresh_for(prog, inv);
    let mut entry_q = prog.var_set();
    let entry = sp(&prog.pre, &mut fresh, &mut entry_q);

    let mut out = Vec::with_capacity(2 * inv.len() + 1);
    for i in inv.iter() {
        out.push(VerificationCondition {
            kind: VcKind::Establishment,
            target: i.id.clone(),
            hypothesis: entry.clone(),
            goal: i.formula.clone(),
            quantified_vars: entry_q.clone(),
        });
    }
    let loop_hyp = Expr::conjoin(
        inv.iter()
            .map(|i| i.formula.clone())
            .chain(std::iter::once(prog.loop_cond.clone())),
    );
    for i in inv.iter() {
        let mut quantified = prog.var_set();
        let goal = wp(&prog.body, &i.formula, &mut fresh, &mut quantified);
        out.push(VerificationCondition {
            kind: VcKind::Preservation,
            target: i.id.clone(),
            hypothesis: loop_hyp.clone(),
            goal,
            quantified_vars: quantified,
        });
    }
    let exit_hyp = Expr::conjoin(
        inv.iter()
            .map(|i| i.formula.clone())
            .chain(std::iter::once(prog.loop_cond.negated())),
    );
    out.push(VerificationCondition {
        kind: VcKind::PostCondition,
        target: ASSERTION_TARGET.to_string(),
        hypothesis: exit_hyp,
        goal: prog.assertion.clone(),
        quantified_vars: prog.var_set(),
    });
    out
}

/// Discharges each VC independently. Results keep the input order; a solver
/// failure becomes an Unknown result carrying the error text.
pub fn check_vcs(vcs: &[VerificationCondition], prover: &dyn Prover, budget: &SolverBudget) -> Vec<VcResult> {
    vcs.par_iter()
        .map(|vc| check_vc(vc, prover, budget))
        .collect()
}

pub fn check_vc(vc: &VerificationCondition, prover: &dyn Prover, budget: &SolverBudget) -> VcResult {
    match prover.check_validity(&vc.hypothesis, &vc.goal, &vc.quantified_vars, budget) {
        Ok(v) => VcResult {
            vc: vc.clone(),
            status: v.status,
            counterexample: if v.status == Status::Invalid { v.model } else { None },
            diagnostic: v.reason,
        },
        Err(e) => VcResult {
            vc: vc.clone(),
            status: Status::Unknown,
            counterexample: None,
            diagnostic: Some(e.to_string()),
        },
    }
}

/// Like [`check_vcs`], but a solver that fails outright (missing binary,
/// protocol violation, repeated crash) is an error instead of Unknown.
pub fn try_check_vcs(
    vcs: &[VerificationCondition],
    prover: &dyn Prover,
    budget: &SolverBudget,
) -> Result<Vec<VcResult>, crate::smt::SmtError> {
    vcs.par_iter()
        .map(|vc| {
            let v = prover.check_validity(&vc.hypothesis, &vc.goal, &vc.quantified_vars, budget)?;
            Ok(VcResult {
                vc: vc.clone(),
                status: v.status,
                counterexample: if v.status == Status::Invalid { v.model } else { None },
                diagnostic: v.reason,
            })
        })
        .collect()
}

pub fn all_valid(results: &[VcResult]) -> bool {
    results.iter().all(|r| r.status.is_valid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_expr_untyped, parse_program};
    use crate::smt::BruteForceProver;

    fn e(s: &str) -> Expr {
        parse_expr_untyped(s).unwrap()
    }

    const SIGNED_WALK: &str = "extern int unknown();
int main() { int a = 0; int j, m; if (m <= 0) return 0;
  for (j = 1; j <= m; j++) { if (unknown()) a++; else a--; }
  assert(a >= -m && a <= m); return 0; }";

    #[test]
    fn wp_substitutes() {
        let mut q = BTreeSet::new();
        let r = wp(
            &[Stmt::Assign("a".into(), e("a + 1"))],
            &e("a <= j - 1"),
            &mut Fresh::default(),
            &mut q,
        );
        assert_eq!(r.to_string(), "a + 1 <= j - 1");
    }

    #[test]
    fn wp_of_false_assumption() {
        let mut q = BTreeSet::new();
        let r = wp(&[Stmt::Assume(e("false"))], &e("x > 0"), &mut Fresh::default(), &mut q);
        assert_eq!(r, Expr::implies(Expr::ff(), e("x > 0")));
    }

    #[test]
    fn wp_havoc_renames() {
        let mut q = BTreeSet::new();
        let mut fresh = Fresh::avoiding(&["x".to_string(), "x_0".to_string()]);
        let r = wp(&[Stmt::Havoc("x".into())], &e("x > 0"), &mut fresh, &mut q);
        assert_eq!(r.to_string(), "x_1 > 0");
        assert!(q.contains("x_1"));
    }

    #[test]
    fn establishment_hypothesis_for_walk() {
        let p = parse_program(SIGNED_WALK).unwrap();
        let (state, _) = entry_state(&p);
        assert_eq!(state.to_string(), "a == 0 && m > 0 && j == 1");
    }

    #[test]
    fn sp_renames_overwritten_values() {
        let p = parse_program("int main(){int x; x = x + 1; x = 2 * x; while(x<0){} assert(1==1);}").unwrap();
        let (state, q) = entry_state(&p);
        assert_eq!(state.to_string(), "x_1 == x_0 + 1 && x == 2 * x_1");
        assert!(q.contains("x_0") && q.contains("x_1"));
    }

    #[test]
    fn counts_and_empty_set() {
        let p = parse_program(SIGNED_WALK).unwrap();
        let vcs = generate_vcs(&p, &InvariantSet::default());
        assert_eq!(vcs.len(), 1);
        assert_eq!(vcs[0].kind, VcKind::PostCondition);
        assert_eq!(vcs[0].hypothesis.to_string(), "j > m");
    }

    #[test]
    fn refined_valid_by_bounded_check() {
        let p = parse_program(SIGNED_WALK).unwrap();
        let inv = InvariantSet::from_formulas(
            ["a >= -j + 1 && a <= j - 1", "j >= 1", "j <= m + 1", "m > 0"].map(e),
        );
        let vcs = generate_vcs(&p, &inv);
        assert_eq!(vcs.len(), 9);
        let results = check_vcs(&vcs, &BruteForceProver { bound: 4 }, &SolverBudget::default());
        assert!(all_valid(&results), "{results:#?}");
    }
}
