use std::fmt::{self, Write};

use num_traits::Signed;

use super::ast::{Expr, InvariantSet, Program, Stmt, UnOp, ATOM_PRECEDENCE, UNARY_PRECEDENCE};

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Int(v) if v.is_negative() => UNARY_PRECEDENCE,
        Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Paren(_) => ATOM_PRECEDENCE,
        Expr::Unary(..) => UNARY_PRECEDENCE,
        Expr::Binary(op, ..) => op.precedence(),
    }
}

fn write_expr(out: &mut String, e: &Expr, required: u8) {
    let wrap = precedence(e) < required;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(v),
        Expr::Paren(inner) => {
            out.push('(');
            write_expr(out, inner, 0);
            out.push(')');
        }
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            });
            let mut operand = String::new();
            write_expr(&mut operand, inner, UNARY_PRECEDENCE);
            if *op == UnOp::Neg && operand.starts_with('-') {
                out.push('(');
                out.push_str(&operand);
                out.push(')');
            } else {
                out.push_str(&operand);
            }
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let (lreq, rreq) = if op.is_right_assoc() {
                (p + 1, p)
            } else {
                (p, p + 1)
            };
            write_expr(out, a, lreq);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, b, rreq);
        }
    }
    if wrap {
        out.push(')');
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, 0);
        f.write_str(&s)
    }
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        write_stmt(out, s, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Assign(v, e) => {
            let _ = writeln!(out, "{v} = {e};");
        }
        Stmt::Havoc(v) => {
            let _ = writeln!(out, "{v} = unknown();");
        }
        Stmt::Assume(e) => {
            let _ = writeln!(out, "assume({e});");
        }
        Stmt::Skip => out.push_str(";\n"),
        Stmt::If(c, then, els) => {
            let _ = writeln!(out, "if ({c}) {{");
            write_block(out, then, depth + 1);
            indent(out, depth);
            if els.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                write_block(out, els, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
    }
}

fn has_havoc(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Havoc(_) => true,
        Stmt::If(_, a, b) => has_havoc(a) || has_havoc(b),
        _ => false,
    })
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        if has_havoc(&self.pre) || has_havoc(&self.body) {
            out.push_str("extern int unknown();\n\n");
        }
        out.push_str("int main() {\n");
        if !self.vars.is_empty() {
            let _ = writeln!(out, "    int {};", self.vars.join(", "));
        }
        write_block(&mut out, &self.pre, 1);
        let _ = writeln!(out, "    while ({}) {{", self.loop_cond);
        write_block(&mut out, &self.body, 2);
        out.push_str("    }\n");
        let _ = writeln!(out, "    assert({});", self.assertion);
        out.push_str("}\n");
        f.write_str(&out)
    }
}

impl InvariantSet {
    /// The `/*@ loop invariant ... */` annotation form.
    pub fn to_annotation(&self) -> String {
        let mut out = String::from("/*@\n");
        for inv in &self.items {
            let _ = writeln!(out, "    loop invariant {}: {};", inv.id, inv.formula);
        }
        out.push_str("*/");
        out
    }

    /// One `assert(...);` line per invariant.
    pub fn to_asserts(&self) -> String {
        self.items
            .iter()
            .map(|inv| format!("assert({});", inv.formula))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Display for InvariantSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_annotation())
    }
}

/// Things with a canonical source rendering.
pub trait Pretty {
    fn pretty(&self) -> String;
}

impl Pretty for Expr {
    fn pretty(&self) -> String {
        self.to_string()
    }
}

impl Pretty for Program {
    fn pretty(&self) -> String {
        self.to_string()
    }
}

impl Pretty for InvariantSet {
    fn pretty(&self) -> String {
        self.to_annotation()
    }
}

pub fn pretty_print<T: Pretty + ?Sized>(x: &T) -> String {
    x.pretty()
}

/// `(p) ==> (q)` with each side grouped exactly once.
pub fn implication_text(premise: &Expr, conclusion: &Expr) -> String {
    format!("({}) ==> ({})", premise.peel(), conclusion.peel())
}
