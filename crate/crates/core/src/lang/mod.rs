//! Front end for the supported C subset: parsing, type elaboration,
//! printing, and clause normalization.
//!
//! Programs have one top-level loop and one assertion after it. Early
//! `if (g) return ...;` exits before the loop become `assume(!g)`, and each
//! `unknown()` in expression position becomes a havoc of a fresh variable.

mod annot;
mod ast;
mod error;
mod lexer;
mod normalize;
mod parser;
mod printer;

pub use annot::{last_fenced_block, parse_invariant_block};
pub use ast::{BinOp, Expr, Invariant, InvariantSet, Program, Stmt, UnOp};
pub use error::{DiagCode, LangError};
pub use normalize::{canonicalize, normalize_clause};
pub use parser::{parse_expr_in, parse_expr_untyped, parse_formula, parse_program, Scope, Ty};
pub use printer::{implication_text, pretty_print, Pretty};

/// A parsed program together with the text it came from.
#[derive(Clone, Debug)]
pub struct Task {
    pub source: String,
    pub program: Program,
}

impl Task {
    pub fn parse(name: &str, source: &str) -> Result<Task, LangError> {
        Ok(Task {
            source: source.to_string(),
            program: parse_program(source)?.with_name(name),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SIGNED_WALK: &str = r#"extern int unknown();

int main() {
    int a = 0;
    int j, m;
    if(m <= 0) return 0;

    for(j = 1; j <= m; j++) {
        if(unknown())
            a++;
        else
            a--;
    }

    assert(a >= -m && a <= m);
    return 0;
}
"#;

    const HAVOC_LOOP: &str = r#"int main() {
    int j, k, flag;
    j = 2;
    k = 0;

    while(unknown()) {
        if(flag)
            j = j + 4;
        else {
            j = j + 2;
            k = k + 1;
        }
    }

    assert((k == 0) || j == 2 * k + 2);
}
"#;

    fn e(s: &str) -> Expr {
        parse_expr_untyped(s).unwrap()
    }

    #[test]
    fn walk_program_shape() {
        let p = parse_program(SIGNED_WALK).unwrap();
        assert_eq!(p.vars, vec!["a", "j", "m", "nondet_1"]);
        assert_eq!(p.loop_cond, e("j <= m"));
        assert_eq!(p.assertion, e("a >= -m && a <= m"));
        assert_eq!(
            p.pre,
            vec![
                Stmt::Assign("a".into(), e("0")),
                Stmt::Assume(e("m > 0")),
                Stmt::Assign("j".into(), e("1")),
            ]
        );
        assert_eq!(
            p.body,
            vec![
                Stmt::Havoc("nondet_1".into()),
                Stmt::If(
                    e("nondet_1 != 0"),
                    vec![Stmt::Assign("a".into(), e("a + 1"))],
                    vec![Stmt::Assign("a".into(), e("a - 1"))],
                ),
                Stmt::Assign("j".into(), e("j + 1")),
            ]
        );
    }

    #[test]
    fn minimal_program() {
        let p = parse_program("int main(){int x; x=0; while(x<0){x=x+1;} assert(x==0);}").unwrap();
        assert_eq!(p.pre, vec![Stmt::Assign("x".into(), e("0"))]);
        assert_eq!(p.body, vec![Stmt::Assign("x".into(), e("x + 1"))]);
    }

    #[test]
    fn nondeterministic_loop_condition() {
        let p = parse_program(HAVOC_LOOP).unwrap();
        assert_eq!(p.assertion, e("(k == 0) || j == 2 * k + 2"));
        assert_eq!(p.loop_cond, e("nondet_1 != 0"));
        assert_eq!(p.pre.last(), Some(&Stmt::Havoc("nondet_1".into())));
        assert_eq!(p.body.last(), Some(&Stmt::Havoc("nondet_1".into())));
        match &p.body[0] {
            Stmt::If(c, _, _) => assert_eq!(c, &e("flag != 0")),
            other => panic!("expected branch, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_walk() {
        let p = parse_program(SIGNED_WALK).unwrap();
        let again = parse_program(&pretty_print(&p)).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn expression_printing() {
        assert_eq!(e("a>=-(j-1)&&a<=(j-1)").to_string(), "a >= -(j - 1) && a <= (j - 1)");
        assert_eq!(e("!(j <= m)").to_string(), "!(j <= m)");
        assert_eq!(Expr::not(e("j <= m")).to_string(), "!(j <= m)");
        let sub = e("2 * x").substitute_one("x", &e("a + 1"));
        assert_eq!(sub.to_string(), "2 * (a + 1)");
        assert_eq!(Expr::neg(Expr::int(-3)).to_string(), "-(-3)");
        assert_eq!(e("a - (b - c)").to_string(), "a - (b - c)");
        assert_eq!(
            Expr::binary(BinOp::Sub, e("a"), Expr::binary(BinOp::Sub, e("b"), e("c"))).to_string(),
            "a - (b - c)"
        );
    }

    #[test]
    fn implication_is_right_associative_and_lowest() {
        let x = e("a ==> b ==> c");
        match &x {
            Expr::Binary(BinOp::Implies, l, r) => {
                assert_eq!(**l, e("a != 0"));
                assert!(matches!(r.peel(), Expr::Binary(BinOp::Implies, ..)));
            }
            _ => panic!(),
        }
        assert_eq!(e("p > 0 || q > 0 ==> r > 0").to_string(), "p > 0 || q > 0 ==> r > 0");
        assert_eq!(e("(a > 0 ==> b > 0) ==> c > 0").to_string(), "(a > 0 ==> b > 0) ==> c > 0");
    }

    fn code(src: &str) -> DiagCode {
        parse_program(src).unwrap_err().code
    }

    #[test]
    fn rejects_unsupported_programs() {
        assert_eq!(
            code("int main(){int x; while(x<3){x++;} while(x<5){x++;} assert(x>0);}"),
            DiagCode::MultipleLoops
        );
        assert_eq!(
            code("int main(){int x,y; while(x<3){ while(y<2){y++;} x++;} assert(x>0);}"),
            DiagCode::NestedLoop
        );
        assert_eq!(
            code("int main(){int x; x = 1.5; while(x<3){x++;} assert(x>0);}"),
            DiagCode::FloatLiteral
        );
        assert_eq!(
            code("int main(){int x; while(x<3){ if (x == 2) return 0; x++;} assert(x>0);}"),
            DiagCode::ReturnInLoop
        );
        assert_eq!(
            code("int main(){int x; while(x<3){x++;} assert(y>0);}"),
            DiagCode::UndeclaredVariable
        );
        assert_eq!(
            code("int main(){float x; while(x<3){x++;} assert(x>0);}"),
            DiagCode::UnsupportedType
        );
        assert_eq!(code("int main(){int x; x = 0; assert(x>0);}"), DiagCode::MissingLoop);
        assert_eq!(
            code("int main(){int x; while(x<3){x++;}}"),
            DiagCode::AssertionCount
        );
        assert_eq!(
            code("int main(){int x; while(x<3){x = f(x);} assert(x>0);}"),
            DiagCode::FunctionCall
        );
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_program("int main() {\n  int x\n  while (x) {}\n}").unwrap_err();
        assert_eq!(err.code, DiagCode::Syntax);
        assert_eq!(err.line, 3);
    }

    #[test]
    fn type_errors() {
        let names = ["x".to_string()].into_iter().collect();
        let err = parse_formula("(x > 0) + 1 > 2", &names).unwrap_err();
        assert_eq!(err.code, DiagCode::Type);
        assert_eq!(parse_formula("x", &names).unwrap(), e("x != 0"));
    }

    const PARTIAL_INVARIANTS: &str = "/*@
    loop invariant i1: a >= -(j - 1) && a <= (j - 1);
    loop invariant i2: j >= 1;
    loop invariant i3: m > 0;
*/";

    const REFINED_INVARIANTS: &str = "/*@
    loop invariant i1: a >= -j + 1 && a <= j - 1;
    loop invariant i2: j >= 1;
    loop invariant i3: j <= m + 1;
    loop invariant i4: m > 0;
*/";

    #[test]
    fn invariant_blocks() {
        let p = parse_program(SIGNED_WALK).unwrap();
        let partial = parse_invariant_block(PARTIAL_INVARIANTS, &p).unwrap();
        assert_eq!(partial.len(), 3);
        assert_eq!(partial.items[0].id, "i1");
        assert_eq!(partial.items[0].formula, e("a >= -(j-1) && a <= (j-1)"));

        let refined = parse_invariant_block(REFINED_INVARIANTS, &p).unwrap();
        assert_eq!(refined.len(), 4);
        assert_eq!(refined.get("i3").unwrap().formula, e("j <= m + 1"));

        let trivial = parse_invariant_block("```c\nassert(1 == 1);\n```", &p).unwrap();
        assert_eq!(trivial.len(), 1);
        assert_eq!(trivial.items[0].formula, e("1 == 1"));

        let empty = parse_invariant_block("```c\n```", &p).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn last_fenced_block_wins() {
        let p = parse_program(SIGNED_WALK).unwrap();
        let reply = "Format:\n```c\n    assert(...);\n```\nAnswer:\n```c\n    assert(j >= 1);\n    assert(m > 0);\n```\n";
        let set = parse_invariant_block(reply, &p).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.items[1].id, "i2");
    }

    #[test]
    fn invariant_block_errors_are_distinct() {
        let p = parse_program(SIGNED_WALK).unwrap();
        assert_eq!(
            parse_invariant_block("no code here", &p).unwrap_err().code,
            DiagCode::NoCodeBlock
        );
        assert_eq!(
            parse_invariant_block("```c\nassert(j >= );\n```", &p).unwrap_err().code,
            DiagCode::Syntax
        );
        assert_eq!(
            parse_invariant_block("```c\nassert(q >= 0);\n```", &p).unwrap_err().code,
            DiagCode::UndeclaredVariable
        );
    }
}
