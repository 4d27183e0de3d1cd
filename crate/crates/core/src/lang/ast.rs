//! Abstract syntax for the single-loop integer language and its logic fragment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 7,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        matches!(self, BinOp::Implies)
    }

    pub fn is_arith(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem
        )
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Implies)
    }
}

pub(crate) const UNARY_PRECEDENCE: u8 = 8;
pub(crate) const ATOM_PRECEDENCE: u8 = 9;

/// An integer or boolean expression.
///
/// `Paren` records grouping written in the source so that printed text keeps
/// the author's parentheses. It carries no meaning: equality ignores it.
#[derive(Clone, Debug)]
pub enum Expr {
    Int(BigInt),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self.peel(), other.peel()) {
            (Expr::Int(a), Expr::Int(b)) => a == b,
            (Expr::Bool(a), Expr::Bool(b)) => a == b,
            (Expr::Var(a), Expr::Var(b)) => a == b,
            (Expr::Unary(o1, a), Expr::Unary(o2, b)) => o1 == o2 && a == b,
            (Expr::Binary(o1, a1, b1), Expr::Binary(o2, a2, b2)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Expr {
    pub fn int(v: impl Into<BigInt>) -> Expr {
        Expr::Int(v.into())
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn tt() -> Expr {
        Expr::Bool(true)
    }

    pub fn ff() -> Expr {
        Expr::Bool(false)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Unary(UnOp::Neg, Box::new(e))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::And, lhs, rhs)
    }

    pub fn or(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Or, lhs, rhs)
    }

    pub fn implies(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Implies, lhs, rhs)
    }

    pub fn equals(lhs: Expr, rhs: Expr) -> Expr {
        Expr::binary(BinOp::Eq, lhs, rhs)
    }

    pub fn paren(e: Expr) -> Expr {
        match e {
            Expr::Paren(_) => e,
            other => Expr::Paren(Box::new(other)),
        }
    }

    /// Left-nested conjunction; `true` for an empty iterator.
    pub fn conjoin<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        items
            .into_iter()
            .reduce(Expr::and)
            .unwrap_or_else(Expr::tt)
    }

    /// The expression with outer grouping removed.
    pub fn peel(&self) -> &Expr {
        let mut e = self;
        while let Expr::Paren(inner) = e {
            e = inner;
        }
        e
    }

    pub fn into_peeled(self) -> Expr {
        match self {
            Expr::Paren(inner) => inner.into_peeled(),
            other => other,
        }
    }

    /// Drops every `Paren` node in the tree.
    pub fn strip_parens(&self) -> Expr {
        match self {
            Expr::Paren(inner) => inner.strip_parens(),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.strip_parens())),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.strip_parens()), Box::new(b.strip_parens()))
            }
            leaf => leaf.clone(),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self.peel(), Expr::Bool(true))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, e) | Expr::Paren(e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Int(_) | Expr::Bool(_) => {}
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Expr::Var(v) => v == name,
            Expr::Unary(_, e) | Expr::Paren(e) => e.mentions(name),
            Expr::Binary(_, a, b) => a.mentions(name) || b.mentions(name),
            Expr::Int(_) | Expr::Bool(_) => false,
        }
    }

    /// Simultaneous substitution of variables.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Var(v) => match map.get(v) {
                Some(replacement) => replacement.clone(),
                None => self.clone(),
            },
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.substitute(map))),
            Expr::Paren(e) => Expr::Paren(Box::new(e.substitute(map))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            leaf => leaf.clone(),
        }
    }

    pub fn substitute_one(&self, name: &str, replacement: &Expr) -> Expr {
        let mut map = BTreeMap::new();
        map.insert(name.to_string(), replacement.clone());
        self.substitute(&map)
    }

    /// Splits at top-level `&&`, looking through grouping.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e.peel() {
                Expr::Binary(BinOp::And, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// True if some product, quotient or remainder has two non-constant operands.
    pub fn is_nonlinear(&self) -> bool {
        match self {
            Expr::Binary(op, a, b) => {
                let here = match op {
                    BinOp::Mul => !a.is_constant() && !b.is_constant(),
                    BinOp::Div | BinOp::Rem => !b.is_constant(),
                    _ => false,
                };
                here || a.is_nonlinear() || b.is_nonlinear()
            }
            Expr::Unary(_, e) | Expr::Paren(e) => e.is_nonlinear(),
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => false,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Bool(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, e) | Expr::Paren(e) => e.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Logical negation that flips comparisons and removes a double `!`.
    pub fn negated(&self) -> Expr {
        match self.peel() {
            Expr::Bool(b) => Expr::Bool(!b),
            Expr::Unary(UnOp::Not, inner) => inner.as_ref().clone().into_peeled(),
            Expr::Binary(op, a, b) if op.is_comparison() => {
                let flipped = match op {
                    BinOp::Lt => BinOp::Ge,
                    BinOp::Le => BinOp::Gt,
                    BinOp::Gt => BinOp::Le,
                    BinOp::Ge => BinOp::Lt,
                    BinOp::Eq => BinOp::Ne,
                    BinOp::Ne => BinOp::Eq,
                    _ => unreachable!(),
                };
                Expr::Binary(flipped, a.clone(), b.clone())
            }
            other => Expr::not(Expr::paren(other.clone())),
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        crate::lang::parse_expr_untyped(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, Expr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    /// Assigns an arbitrary value; models `unknown()`.
    Havoc(String),
    Assume(Expr),
    Skip,
}

/// `{P} while B do S {Q}` over integer variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    /// Declaration order, including fresh variables introduced for `unknown()`.
    pub vars: Vec<String>,
    pub pre: Vec<Stmt>,
    pub loop_cond: Expr,
    pub body: Vec<Stmt>,
    pub assertion: Expr,
}

impl Program {
    pub fn with_name(mut self, name: impl Into<String>) -> Program {
        self.name = name.into();
        self
    }

    pub fn var_set(&self) -> BTreeSet<String> {
        self.vars.iter().cloned().collect()
    }

    pub fn declares(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariant {
    pub id: String,
    pub formula: Expr,
}

/// Ordered candidate invariants; their conjunction is the loop invariant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InvariantSet {
    pub items: Vec<Invariant>,
}

impl InvariantSet {
    pub fn new(items: Vec<Invariant>) -> InvariantSet {
        InvariantSet { items }
    }

    /// Numbers formulas `i1..iN` in order.
    pub fn from_formulas<I: IntoIterator<Item = Expr>>(formulas: I) -> InvariantSet {
        InvariantSet {
            items: formulas
                .into_iter()
                .enumerate()
                .map(|(k, formula)| Invariant {
                    id: format!("i{}", k + 1),
                    formula,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Invariant> {
        self.items.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Invariant> {
        self.items.iter().find(|inv| inv.id == id)
    }

    pub fn conjunction(&self) -> Expr {
        Expr::conjoin(self.items.iter().map(|inv| inv.formula.clone()))
    }
}

impl fmt::Display for UnOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
        })
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
