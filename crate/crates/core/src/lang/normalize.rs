//! Syntactic canonical form of boolean clauses, used to compare invariants.
//!
//! Rewrites: grouping dropped, `a > b` to `b < a`, `a >= b` to `b <= a`,
//! `!!e` to `e`, and operands of `==`, `!=`, `&&`, `||` sorted by their
//! canonical text (`&&`/`||` chains are flattened first).

use super::ast::{BinOp, Expr, UnOp};

pub fn canonicalize(e: &Expr) -> Expr {
    match e {
        Expr::Paren(inner) => canonicalize(inner),
        Expr::Unary(UnOp::Not, inner) => match inner.peel() {
            Expr::Unary(UnOp::Not, twice) => canonicalize(twice),
            _ => Expr::not(canonicalize(inner)),
        },
        Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(canonicalize(inner))),
        Expr::Binary(op @ (BinOp::And | BinOp::Or), _, _) => {
            let mut parts = Vec::new();
            flatten(e, *op, &mut parts);
            let mut keyed: Vec<(String, Expr)> = parts
                .into_iter()
                .map(|p| {
                    let c = canonicalize(p);
                    (c.to_string(), c)
                })
                .collect();
            keyed.sort_by(|a, b| a.0.cmp(&b.0));
            keyed
                .into_iter()
                .map(|(_, c)| c)
                .reduce(|acc, c| Expr::binary(*op, acc, c))
                .expect("chain has at least two operands")
        }
        Expr::Binary(BinOp::Gt, a, b) => Expr::binary(BinOp::Lt, canonicalize(b), canonicalize(a)),
        Expr::Binary(BinOp::Ge, a, b) => Expr::binary(BinOp::Le, canonicalize(b), canonicalize(a)),
        Expr::Binary(op @ (BinOp::Eq | BinOp::Ne), a, b) => {
            let (a, b) = (canonicalize(a), canonicalize(b));
            if a.to_string() <= b.to_string() {
                Expr::binary(*op, a, b)
            } else {
                Expr::binary(*op, b, a)
            }
        }
        Expr::Binary(op, a, b) => Expr::binary(*op, canonicalize(a), canonicalize(b)),
        leaf => leaf.clone(),
    }
}

fn flatten<'a>(e: &'a Expr, op: BinOp, out: &mut Vec<&'a Expr>) {
    match e.peel() {
        Expr::Binary(o, a, b) if *o == op => {
            flatten(a, op, out);
            flatten(b, op, out);
        }
        other => out.push(other),
    }
}

/// Canonical text of a clause.
pub fn normalize_clause(e: &Expr) -> String {
    canonicalize(e).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_expr_untyped;

    fn norm(s: &str) -> String {
        normalize_clause(&parse_expr_untyped(s).unwrap())
    }

    #[test]
    fn greater_than_flips() {
        assert_eq!(norm("m   >  0"), norm("0 < m"));
        assert_eq!(norm("m > 0"), "0 < m");
        assert_eq!(norm("x >= y + 1"), "y + 1 <= x");
    }

    #[test]
    fn fixed_point() {
        assert_eq!(norm("j <= m + 1"), "j <= m + 1");
    }

    #[test]
    fn conjunct_order_and_grouping_ignored() {
        assert_eq!(
            norm("(a<=j-1) && (a>=-(j-1))"),
            norm("a >= -(j-1) && a <= (j-1)")
        );
        assert_eq!(norm("a && (b && c)"), norm("(c && a) && b"));
    }

    #[test]
    fn double_negation_and_equality_sides() {
        assert_eq!(norm("!!(x == y)"), norm("y == x"));
        assert_eq!(norm("!(!(x != 0))"), "0 != x");
    }

    #[test]
    fn distinct_arithmetic_forms_stay_distinct() {
        assert_ne!(norm("a >= -(j - 1)"), norm("a >= -j + 1"));
    }
}
