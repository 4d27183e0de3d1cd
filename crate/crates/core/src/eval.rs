//! Concrete evaluation: expression evaluator, exhaustive validity oracle,
//! and a bounded explicit-state interpreter for whole programs.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::lang::{BinOp, Expr, Program, Stmt, UnOp};
use crate::num::IntScalar;

/// A variable assignment reported to users (counterexamples, witnesses).
pub type Assignment = BTreeMap<String, BigInt>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value<T> {
    Int(T),
    Bool(bool),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("ill-typed operand")]
    Type,
}

/// Variable lookup used by the evaluator.
pub trait Env<T> {
    fn lookup(&self, name: &str) -> Option<&T>;
}

impl<T> Env<T> for BTreeMap<String, T> {
    fn lookup(&self, name: &str) -> Option<&T> {
        self.get(name)
    }
}

/// Positional environment: `names[k]` is bound to `values[k]`.
pub struct Slots<'a, T> {
    pub names: &'a [String],
    pub values: &'a [T],
}

impl<T> Env<T> for Slots<'_, T> {
    fn lookup(&self, name: &str) -> Option<&T> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| &self.values[k])
    }
}

pub fn eval<T: IntScalar, E: Env<T> + ?Sized>(e: &Expr, env: &E) -> Result<Value<T>, EvalError> {
    Ok(match e {
        Expr::Int(v) => Value::Int(T::from_big(v).ok_or(EvalError::Overflow)?),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var(v) => Value::Int(
            env.lookup(v)
                .cloned()
                .ok_or_else(|| EvalError::Unbound(v.clone()))?,
        ),
        Expr::Paren(inner) => eval(inner, env)?,
        Expr::Unary(UnOp::Neg, inner) => {
            let v = eval_int(inner, env)?;
            Value::Int(T::zero().checked_sub(&v).ok_or(EvalError::Overflow)?)
        }
        Expr::Unary(UnOp::Not, inner) => Value::Bool(!eval_bool(inner, env)?),
        Expr::Binary(op, a, b) => match op {
            BinOp::And => Value::Bool(eval_bool(a, env)? && eval_bool(b, env)?),
            BinOp::Or => Value::Bool(eval_bool(a, env)? || eval_bool(b, env)?),
            BinOp::Implies => Value::Bool(!eval_bool(a, env)? || eval_bool(b, env)?),
            _ => {
                let x = eval_int(a, env)?;
                let y = eval_int(b, env)?;
                match op {
                    BinOp::Add => Value::Int(x.checked_add(&y).ok_or(EvalError::Overflow)?),
                    BinOp::Sub => Value::Int(x.checked_sub(&y).ok_or(EvalError::Overflow)?),
                    BinOp::Mul => Value::Int(x.checked_mul(&y).ok_or(EvalError::Overflow)?),
                    BinOp::Div | BinOp::Rem => {
                        if y.is_zero() {
                            return Err(EvalError::DivByZero);
                        }
                        let r = if *op == BinOp::Div {
                            x.trunc_div(&y)
                        } else {
                            x.trunc_rem(&y)
                        };
                        Value::Int(r.ok_or(EvalError::Overflow)?)
                    }
                    BinOp::Lt => Value::Bool(x < y),
                    BinOp::Le => Value::Bool(x <= y),
                    BinOp::Gt => Value::Bool(x > y),
                    BinOp::Ge => Value::Bool(x >= y),
                    BinOp::Eq => Value::Bool(x == y),
                    BinOp::Ne => Value::Bool(x != y),
                    BinOp::And | BinOp::Or | BinOp::Implies => unreachable!(),
                }
            }
        },
    })
}

pub fn eval_bool<T: IntScalar, E: Env<T> + ?Sized>(e: &Expr, env: &E) -> Result<bool, EvalError> {
    match eval(e, env)? {
        Value::Bool(b) => Ok(b),
        Value::Int(_) => Err(EvalError::Type),
    }
}

pub fn eval_int<T: IntScalar, E: Env<T> + ?Sized>(e: &Expr, env: &E) -> Result<T, EvalError> {
    match eval(e, env)? {
        Value::Int(v) => Ok(v),
        Value::Bool(_) => Err(EvalError::Type),
    }
}

/// Evaluates a boolean formula under a reported assignment.
pub fn holds(e: &Expr, assignment: &Assignment) -> Result<bool, EvalError> {
    eval_bool::<BigInt, _>(e, assignment)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OracleVerdict {
    Valid {
        /// Points where evaluation failed (division by zero, overflow).
        skipped: u64,
    },
    Invalid {
        witness: Assignment,
        skipped: u64,
    },
}

impl OracleVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, OracleVerdict::Valid { .. })
    }
}

/// Calls `visit` on every point of `[-bound, bound]^k` in lexicographic
/// order; the first slot is most significant. Stops when `visit` returns false.
pub fn for_each_point<T: IntScalar>(k: usize, bound: i64, mut visit: impl FnMut(&[T]) -> bool) {
    let mut point: Vec<T> = vec![T::from_i64(-bound); k];
    loop {
        if !visit(&point) {
            return;
        }
        let mut slot = k;
        loop {
            if slot == 0 {
                return;
            }
            slot -= 1;
            if point[slot] < T::from_i64(bound) {
                point[slot] = point[slot].clone() + T::one();
                break;
            }
            point[slot] = T::from_i64(-bound);
        }
    }
}

/// Exhaustive check of `hypothesis ==> goal` over `[-bound, bound]` for each
/// variable. Variables are ordered by name and the witness is the first
/// counterexample in lexicographic order.
pub fn brute_force_validity(
    hypothesis: &Expr,
    goal: &Expr,
    vars: &BTreeSet<String>,
    bound: i64,
) -> OracleVerdict {
    assert!(bound >= 1, "bound must be positive");
    let names: Vec<String> = vars.iter().cloned().collect();
    let mut skipped = 0u64;
    let mut witness = None;
    for_each_point::<i128>(names.len(), bound, |point| {
        let env = Slots {
            names: &names,
            values: point,
        };
        let verdict = eval_bool(hypothesis, &env).and_then(|h| {
            if !h {
                return Ok(true);
            }
            eval_bool(goal, &env)
        });
        match verdict {
            Ok(true) => true,
            Ok(false) => {
                witness = Some(to_assignment(&names, point));
                false
            }
            Err(_) => {
                skipped += 1;
                true
            }
        }
    });
    match witness {
        Some(witness) => OracleVerdict::Invalid { witness, skipped },
        None => OracleVerdict::Valid { skipped },
    }
}

/// Limits for [`explore`].
#[derive(Clone, Copy, Debug)]
pub struct ExploreBounds {
    /// Initial values and havoc results range over `[-value_bound, value_bound]`.
    pub value_bound: i64,
    pub max_iterations: usize,
}

impl Default for ExploreBounds {
    fn default() -> Self {
        ExploreBounds {
            value_bound: 3,
            max_iterations: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Loop iterations completed before the exit.
    pub iterations: usize,
    pub state: Assignment,
}

#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub violations: Vec<Violation>,
    pub exits_checked: usize,
    /// States still in the loop after the iteration limit.
    pub truncated: usize,
    /// States dropped because a statement could not be evaluated.
    pub blocked: usize,
    /// Distinct states reaching the loop head, filled by [`explore_heads`].
    pub head_states: Vec<Assignment>,
}

type State = Vec<i128>;

fn exec(
    stmts: &[Stmt],
    names: &[String],
    states: HashSet<State>,
    bound: i64,
    blocked: &mut usize,
) -> HashSet<State> {
    let mut current = states;
    for stmt in stmts {
        let mut next = HashSet::new();
        match stmt {
            Stmt::Skip => next = current,
            Stmt::Assign(v, e) => {
                let slot = slot_of(names, v);
                for mut s in current {
                    match eval_int::<i128, _>(e, &Slots { names, values: &s }) {
                        Ok(value) => {
                            s[slot] = value;
                            next.insert(s);
                        }
                        Err(_) => *blocked += 1,
                    }
                }
            }
            Stmt::Havoc(v) => {
                let slot = slot_of(names, v);
                for s in current {
                    for value in -bound..=bound {
                        let mut t = s.clone();
                        t[slot] = value as i128;
                        next.insert(t);
                    }
                }
            }
            Stmt::Assume(e) => {
                for s in current {
                    match eval_bool::<i128, _>(e, &Slots { names, values: &s }) {
                        Ok(true) => {
                            next.insert(s);
                        }
                        Ok(false) => {}
                        Err(_) => *blocked += 1,
                    }
                }
            }
            Stmt::If(c, then, els) => {
                let mut yes = HashSet::new();
                let mut no = HashSet::new();
                for s in current {
                    match eval_bool::<i128, _>(c, &Slots { names, values: &s }) {
                        Ok(true) => {
                            yes.insert(s);
                        }
                        Ok(false) => {
                            no.insert(s);
                        }
                        Err(_) => *blocked += 1,
                    }
                }
                next = exec(then, names, yes, bound, blocked);
                next.extend(exec(els, names, no, bound, blocked));
            }
        }
        current = next;
    }
    current
}

fn to_assignment(names: &[String], s: &[i128]) -> Assignment {
    names
        .iter()
        .cloned()
        .zip(s.iter().map(|v| BigInt::from(*v)))
        .collect()
}

fn slot_of(names: &[String], v: &str) -> usize {
    names
        .iter()
        .position(|n| n == v)
        .unwrap_or_else(|| panic!("assignment to undeclared variable `{v}`"))
}

/// Runs every execution of `prog` from every initial state in the value box,
/// for at most `max_iterations` loop iterations, and checks the assertion at
/// each loop exit.
pub fn explore(prog: &Program, bounds: ExploreBounds) -> Exploration {
    run_explore(prog, bounds, false)
}

/// Like [`explore`], also collecting every loop-head state.
pub fn explore_heads(prog: &Program, bounds: ExploreBounds) -> Exploration {
    run_explore(prog, bounds, true)
}

fn run_explore(prog: &Program, bounds: ExploreBounds, record_heads: bool) -> Exploration {
    let names = &prog.vars;
    let b = bounds.value_bound;
    let mut initial = HashSet::new();
    for_each_point::<i128>(names.len(), b, |p| {
        initial.insert(p.to_vec());
        true
    });

    let mut out = Exploration::default();
    let mut states = exec(&prog.pre, names, initial, b, &mut out.blocked);
    let mut seen_exits: HashSet<State> = HashSet::new();
    let mut heads: HashSet<State> = HashSet::new();
    for iteration in 0..=bounds.max_iterations {
        let mut running = HashSet::new();
        let mut ordered: Vec<State> = states.into_iter().collect();
        ordered.sort();
        for s in ordered {
            if record_heads && heads.insert(s.clone()) {
                out.head_states.push(to_assignment(names, &s));
            }
            let env = Slots { names, values: &s };
            match eval_bool::<i128, _>(&prog.loop_cond, &env) {
                Ok(true) => {
                    running.insert(s);
                }
                Ok(false) => {
                    if !seen_exits.insert(s.clone()) {
                        continue;
                    }
                    out.exits_checked += 1;
                    match eval_bool::<i128, _>(&prog.assertion, &env) {
                        Ok(true) => {}
                        Ok(false) => out.violations.push(Violation {
                            iterations: iteration,
                            state: to_assignment(names, &s),
                        }),
                        Err(_) => out.blocked += 1,
                    }
                }
                Err(_) => out.blocked += 1,
            }
        }
        if iteration == bounds.max_iterations {
            out.truncated = running.len();
            break;
        }
        states = exec(&prog.body, names, running, b, &mut out.blocked);
        if states.is_empty() {
            break;
        }
    }
    out
}
