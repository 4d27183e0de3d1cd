//! Seeded random formulas, programs and candidate invariants for
//! cross-checking the verifier against concrete execution.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::eval::{explore_heads, holds, ExploreBounds};
use crate::lang::{BinOp, Expr, InvariantSet, Program, Stmt};

const COMPARISONS: [BinOp; 6] = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne];

/// `c1*v1 + ... + ck*vk + c0` with coefficients in `[-coef, coef]`.
pub fn linear_term<R: Rng>(rng: &mut R, vars: &[String], coef: i64) -> Expr {
    let mut term: Option<Expr> = None;
    for v in vars {
        let c = rng.random_range(-coef..=coef);
        if c == 0 {
            continue;
        }
        let monomial = if c == 1 {
            Expr::var(v.clone())
        } else {
            Expr::binary(BinOp::Mul, Expr::int(c), Expr::var(v.clone()))
        };
        term = Some(match term {
            None => monomial,
            Some(t) => Expr::binary(BinOp::Add, t, monomial),
        });
    }
    let c0 = rng.random_range(-coef..=coef);
    match term {
        None => Expr::int(c0),
        Some(t) if c0 == 0 => t,
        Some(t) => Expr::binary(BinOp::Add, t, Expr::int(c0)),
    }
}

pub fn atom<R: Rng>(rng: &mut R, vars: &[String], coef: i64, nonlinear: bool) -> Expr {
    let mut lhs = linear_term(rng, vars, coef);
    if nonlinear && rng.random_bool(0.3) {
        let a = vars.choose(rng).expect("at least one variable").clone();
        let b = vars.choose(rng).expect("at least one variable").clone();
        lhs = Expr::binary(
            BinOp::Add,
            lhs,
            Expr::binary(BinOp::Mul, Expr::var(a), Expr::var(b)),
        );
    }
    let op = *COMPARISONS.choose(rng).unwrap();
    Expr::binary(op, lhs, Expr::int(rng.random_range(-coef..=coef)))
}

pub fn formula<R: Rng>(rng: &mut R, vars: &[String], coef: i64, depth: u32, nonlinear: bool) -> Expr {
    if depth == 0 || rng.random_bool(0.35) {
        return atom(rng, vars, coef, nonlinear);
    }
    let a = formula(rng, vars, coef, depth - 1, nonlinear);
    match rng.random_range(0..4) {
        0 => Expr::and(a, formula(rng, vars, coef, depth - 1, nonlinear)),
        1 => Expr::or(a, formula(rng, vars, coef, depth - 1, nonlinear)),
        2 => Expr::implies(a, formula(rng, vars, coef, depth - 1, nonlinear)),
        _ => Expr::not(a),
    }
}

#[derive(Clone, Debug)]
pub struct RandomQuery {
    pub vars: BTreeSet<String>,
    pub hypothesis: Expr,
    pub goal: Expr,
}

/// Box constraints `-bound <= v <= bound` for every variable.
pub fn box_constraint(vars: &BTreeSet<String>, bound: i64) -> Expr {
    Expr::conjoin(vars.iter().flat_map(|v| {
        [
            Expr::binary(BinOp::Ge, Expr::var(v.clone()), Expr::int(-bound)),
            Expr::binary(BinOp::Le, Expr::var(v.clone()), Expr::int(bound)),
        ]
    }))
}

/// A query over at most three variables with coefficients in `[-4, 4]`,
/// without division. The hypothesis includes the box `[-box_bound, box_bound]`
/// so that exhaustive evaluation over that box decides it exactly.
pub fn random_query<R: Rng>(rng: &mut R, box_bound: i64) -> RandomQuery {
    let k = rng.random_range(1..=3);
    let names: Vec<String> = ["x", "y", "z"][..k].iter().map(|s| s.to_string()).collect();
    let vars: BTreeSet<String> = names.iter().cloned().collect();
    let nonlinear = rng.random_bool(0.25);
    let hyp = formula(rng, &names, 4, 2, nonlinear);
    let goal = formula(rng, &names, 4, 2, nonlinear);
    RandomQuery {
        hypothesis: Expr::and(box_constraint(&vars, box_bound), Expr::paren(hyp)),
        goal,
        vars,
    }
}

fn small_update<R: Rng>(rng: &mut R, v: &str, vars: &[String]) -> Stmt {
    let rhs = match rng.random_range(0..4) {
        0 => Expr::binary(BinOp::Add, Expr::var(v), Expr::int(rng.random_range(1..=2))),
        1 => Expr::binary(BinOp::Sub, Expr::var(v), Expr::int(rng.random_range(1..=2))),
        2 => {
            let other = vars.choose(rng).unwrap();
            Expr::binary(BinOp::Add, Expr::var(v), Expr::var(other.clone()))
        }
        _ => Expr::int(rng.random_range(-2..=2)),
    };
    Stmt::Assign(v.to_string(), rhs)
}

/// A single-loop program over two or three variables with optional
/// nondeterministic branching, small loop bounds and a linear assertion.
pub fn random_program<R: Rng>(rng: &mut R) -> Program {
    let k = rng.random_range(2..=3);
    let mut vars: Vec<String> = ["x", "y", "z"][..k].iter().map(|s| s.to_string()).collect();
    let mut pre = Vec::new();
    for v in &vars {
        match rng.random_range(0..3) {
            0 => pre.push(Stmt::Assign(v.clone(), Expr::int(rng.random_range(-2..=2)))),
            1 => pre.push(Stmt::Assume(Expr::binary(
                BinOp::Ge,
                Expr::var(v.clone()),
                Expr::int(rng.random_range(-1..=1)),
            ))),
            _ => {}
        }
    }
    let counter = vars[0].clone();
    let loop_cond = if rng.random_bool(0.5) {
        Expr::binary(BinOp::Lt, Expr::var(counter.clone()), Expr::int(rng.random_range(0..=4)))
    } else {
        Expr::binary(BinOp::Lt, Expr::var(counter.clone()), Expr::var(vars[1].clone()))
    };
    let mut body = Vec::new();
    let nondet = rng.random_bool(0.4);
    let branch_var = "nondet_1".to_string();
    if nondet {
        body.push(Stmt::Havoc(branch_var.clone()));
        let target = vars[rng.random_range(1..vars.len())].clone();
        let then = vec![small_update(rng, &target, &vars)];
        let els = if rng.random_bool(0.5) {
            vec![small_update(rng, &target, &vars)]
        } else {
            vec![]
        };
        body.push(Stmt::If(
            Expr::binary(BinOp::Ne, Expr::var(branch_var.clone()), Expr::int(0)),
            then,
            els,
        ));
    } else if rng.random_bool(0.5) {
        let target = vars[rng.random_range(1..vars.len())].clone();
        body.push(small_update(rng, &target, &vars));
    }
    body.push(Stmt::Assign(
        counter.clone(),
        Expr::binary(BinOp::Add, Expr::var(counter.clone()), Expr::int(1)),
    ));
    if nondet {
        vars.push(branch_var);
    }
    let plain: Vec<String> = vars.iter().filter(|v| !v.starts_with("nondet")).cloned().collect();
    let assertion = atom(rng, &plain, 2, false);
    Program {
        name: "random".into(),
        vars,
        pre,
        loop_cond,
        body,
        assertion,
    }
}

/// Linear atoms over the program's variables (coefficients in {-1, 0, 1})
/// that hold at every loop-head state reached by bounded execution.
pub fn mined_atoms(prog: &Program, bounds: ExploreBounds) -> Vec<Expr> {
    let heads = explore_heads(prog, bounds).head_states;
    let vars: Vec<String> = prog
        .vars
        .iter()
        .filter(|v| !v.starts_with("nondet"))
        .cloned()
        .collect();
    let mut pool = Vec::new();
    let coeffs = [-1i64, 0, 1];
    let mut combos: Vec<Vec<i64>> = vec![vec![]];
    for _ in &vars {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                coeffs.iter().map(move |k| {
                    let mut c = c.clone();
                    c.push(*k);
                    c
                })
            })
            .collect();
    }
    for combo in combos {
        if combo.iter().all(|c| *c == 0) {
            continue;
        }
        let mut term: Option<Expr> = None;
        for (v, c) in vars.iter().zip(&combo) {
            let m = match c {
                0 => continue,
                1 => Expr::var(v.clone()),
                _ => Expr::neg(Expr::var(v.clone())),
            };
            term = Some(match term {
                None => m,
                Some(t) => Expr::binary(BinOp::Add, t, m),
            });
        }
        let term = term.unwrap();
        for c in -3..=4 {
            pool.push(Expr::binary(BinOp::Le, term.clone(), Expr::int(c)));
        }
    }
    pool.retain(|a| heads.iter().all(|h| holds(a, h).unwrap_or(false)));
    pool
}

/// Up to `max` invariants: mostly atoms that survive bounded execution,
/// sometimes arbitrary ones.
pub fn random_invariants<R: Rng>(rng: &mut R, prog: &Program, mined: &[Expr], max: usize) -> InvariantSet {
    let n = rng.random_range(0..=max);
    let plain: Vec<String> = prog.vars.iter().filter(|v| !v.starts_with("nondet")).cloned().collect();
    let mut picked = Vec::new();
    for _ in 0..n {
        if !mined.is_empty() && rng.random_bool(0.85) {
            picked.push(mined.choose(rng).unwrap().clone());
        } else {
            picked.push(atom(rng, &plain, 2, false));
        }
    }
    InvariantSet::from_formulas(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_program, pretty_print};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_reparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p = random_program(&mut rng);
            let text = pretty_print(&p);
            let again = parse_program(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(again.body, p.body, "{text}");
            assert_eq!(again.assertion, p.assertion);
        }
    }

    #[test]
    fn queries_are_boxed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_query(&mut rng, 6);
        assert!(q.hypothesis.to_string().contains(">= -6"));
    }
}
