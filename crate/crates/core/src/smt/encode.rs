//! SMT-LIB 2 rendering of validity queries.
//!
//! `/` and `%` truncate toward zero, so they are expressed with the theory's
//! Euclidean `div`: `a / b = ite(a >= 0, div(a, b), -div(-a, b))` and
//! `a % b = a - b * (a / b)`.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_traits::Signed;

use crate::lang::{BinOp, Expr, UnOp};

use super::Logic;

const RESERVED: &[&str] = &[
    "_", "!", "as", "let", "exists", "forall", "match", "par", "BINARY", "DECIMAL", "HEXADECIMAL",
    "NUMERAL", "STRING", "true", "false", "not", "and", "or", "xor", "distinct", "ite", "div",
    "mod", "abs", "rem", "to_real", "to_int", "is_int", "Int", "Bool", "Real", "assert",
    "check-sat", "push", "pop",
];

pub fn symbol(name: &str) -> String {
    let simple = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if simple && !RESERVED.contains(&name) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn term(e: &Expr) -> String {
    let mut out = String::new();
    write_term(&mut out, e);
    out
}

fn write_term(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(v) if v.is_negative() => {
            let _ = write!(out, "(- {})", -v);
        }
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(&symbol(v)),
        Expr::Paren(inner) => write_term(out, inner),
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Neg => "(- ",
                UnOp::Not => "(not ",
            });
            write_term(out, inner);
            out.push(')');
        }
        Expr::Binary(BinOp::Div, a, b) => {
            let (a, b) = (term(a), term(b));
            let _ = write!(out, "{}", trunc_div(&a, &b));
        }
        Expr::Binary(BinOp::Rem, a, b) => {
            let (a, b) = (term(a), term(b));
            let _ = write!(out, "(- {a} (* {b} {}))", trunc_div(&a, &b));
        }
        Expr::Binary(BinOp::Ne, a, b) => {
            out.push_str("(not (= ");
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push_str("))");
        }
        Expr::Binary(op, a, b) => {
            let head = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Lt => "<",
                BinOp::Le => "<=",
                BinOp::Gt => ">",
                BinOp::Ge => ">=",
                BinOp::Eq => "=",
                BinOp::And => "and",
                BinOp::Or => "or",
                BinOp::Implies => "=>",
                BinOp::Div | BinOp::Rem | BinOp::Ne => unreachable!(),
            };
            let _ = write!(out, "({head} ");
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
    }
}

fn trunc_div(a: &str, b: &str) -> String {
    format!("(ite (>= {a} 0) (div {a} {b}) (- (div (- {a}) {b})))")
}

pub fn select_logic(formulas: &[&Expr]) -> Logic {
    if formulas.iter().any(|f| f.is_nonlinear()) {
        Logic::NonlinearInts
    } else {
        Logic::LinearInts
    }
}

/// A validity query ready to be sent: the satisfiability of
/// `hypothesis && !goal` over the listed integer constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedQuery {
    pub logic: Logic,
    /// Sorted; includes every variable of both formulas.
    pub vars: Vec<String>,
    /// Declarations and the assertion, one command per line.
    pub body: String,
}

pub fn encode_query(
    hypothesis: &Expr,
    goal: &Expr,
    vars: &BTreeSet<String>,
    logic: Option<Logic>,
) -> EncodedQuery {
    let mut all = vars.clone();
    hypothesis.collect_vars(&mut all);
    goal.collect_vars(&mut all);
    let mut body = String::new();
    for v in &all {
        let _ = writeln!(body, "(declare-const {} Int)", symbol(v));
    }
    let _ = writeln!(
        body,
        "(assert (not (=> {} {})))",
        term(hypothesis),
        term(goal)
    );
    EncodedQuery {
        logic: logic.unwrap_or_else(|| select_logic(&[hypothesis, goal])),
        vars: all.into_iter().collect(),
        body,
    }
}

impl EncodedQuery {
    /// A self-contained script that any conforming solver can run.
    pub fn script(&self, timeout_ms: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(set-option :produce-models true)");
        let _ = writeln!(out, "(set-option :timeout {timeout_ms})");
        let _ = writeln!(out, "(set-logic {})", self.logic.smtlib_name());
        out.push_str(&self.body);
        out.push_str("(check-sat)\n(get-model)\n");
        out
    }

    pub fn value_request(&self) -> Option<String> {
        if self.vars.is_empty() {
            return None;
        }
        let names: Vec<String> = self.vars.iter().map(|v| symbol(v)).collect();
        Some(format!("(get-value ({}))", names.join(" ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_expr_untyped;

    fn e(s: &str) -> Expr {
        parse_expr_untyped(s).unwrap()
    }

    #[test]
    fn terms() {
        assert_eq!(term(&e("a >= -(j - 1)")), "(>= a (- (- j 1)))");
        assert_eq!(term(&e("x != -3")), "(not (= x (- 3)))");
        assert_eq!(term(&e("p > 0 ==> q > 0")), "(=> (> p 0) (> q 0))");
        assert_eq!(
            term(&e("x / 2")),
            "(ite (>= x 0) (div x 2) (- (div (- x) 2)))"
        );
    }

    #[test]
    fn reserved_names_are_quoted() {
        assert_eq!(symbol("div"), "|div|");
        assert_eq!(symbol("nondet_1"), "nondet_1");
    }

    #[test]
    fn logic_selection() {
        assert_eq!(select_logic(&[&e("2 * x + y / 3 > 0")]), Logic::LinearInts);
        assert_eq!(select_logic(&[&e("x * y > 0")]), Logic::NonlinearInts);
        assert_eq!(select_logic(&[&e("x % y > 0")]), Logic::NonlinearInts);
    }

    #[test]
    fn encoding_is_stable() {
        let vars = ["m", "j", "a"].iter().map(|s| s.to_string()).collect();
        let q1 = encode_query(&e("j > m"), &e("j == m + 1"), &vars, None);
        let q2 = encode_query(&e("j > m"), &e("j == m + 1"), &vars, None);
        assert_eq!(q1.script(5000), q2.script(5000));
        assert_eq!(
            q1.body,
            "(declare-const a Int)\n(declare-const j Int)\n(declare-const m Int)\n(assert (not (=> (> j m) (= j (+ m 1)))))\n"
        );
    }
}
