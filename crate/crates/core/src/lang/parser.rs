use std::collections::{BTreeSet, HashSet};

use super::ast::{BinOp, Expr, Program, Stmt, UnOp};
use super::error::{DiagCode, LangError};
use super::lexer::{tokenize, Tok, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
}

/// Which names an expression may reference.
#[derive(Clone, Copy, Debug)]
pub enum Scope<'a> {
    Any,
    Names(&'a BTreeSet<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Program,
    Logic,
}

const RESERVED: &[&str] = &[
    "int", "if", "else", "while", "for", "do", "return", "assert", "assume", "extern", "void",
    "break", "continue", "goto", "switch", "case", "default", "unsigned", "signed", "long",
    "short", "char", "float", "double", "struct", "union", "enum", "typedef", "static", "const",
    "sizeof", "true", "false", "unknown", "_Bool", "bool",
];

const UNSUPPORTED_TYPES: &[&str] = &[
    "unsigned", "signed", "long", "short", "char", "float", "double", "_Bool", "bool", "struct",
    "union", "enum", "const", "static",
];

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    mode: Mode,
    scope: Scope<'s>,
    /// Declared program variables, in order.
    vars: Vec<String>,
    /// Fresh variables introduced by `unknown()` in the expression being parsed.
    pending_havocs: Vec<String>,
    used_names: HashSet<String>,
    fresh_counter: usize,
}

type PResult<T> = Result<T, LangError>;

impl<'s> Parser<'s> {
    fn new(src: &str, mode: Mode, scope: Scope<'s>) -> PResult<Parser<'s>> {
        let toks = tokenize(src)?;
        let used_names = toks
            .iter()
            .filter_map(|t| match &t.tok {
                Tok::Ident(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        Ok(Parser {
            toks,
            pos: 0,
            mode,
            scope,
            vars: Vec::new(),
            pending_havocs: Vec::new(),
            used_names,
            fresh_counter: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn at_ident(&self, name: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == name)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, code: DiagCode, msg: impl Into<String>) -> LangError {
        let t = self.peek();
        LangError::new(code, msg, t.line, t.col)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Int(v) => format!("`{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here(
                DiagCode::Syntax,
                format!("expected `{p}`, found {}", Self::describe(&self.peek().tok)),
            ))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, usize, usize)> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok((s.clone(), t.line, t.col))
            }
            other => Err(LangError::new(
                DiagCode::Syntax,
                format!("expected identifier, found {}", Self::describe(other)),
                t.line,
                t.col,
            )),
        }
    }

    fn fresh_name(&mut self, base: &str) -> String {
        loop {
            self.fresh_counter += 1;
            let candidate = format!("{base}_{}", self.fresh_counter);
            if !self.used_names.contains(&candidate) {
                self.used_names.insert(candidate.clone());
                return candidate;
            }
        }
    }

    fn is_known(&self, name: &str) -> bool {
        match self.mode {
            Mode::Program => self.vars.iter().any(|v| v == name),
            Mode::Logic => match self.scope {
                Scope::Any => true,
                Scope::Names(set) => set.contains(name),
            },
        }
    }

    // ---- expressions -------------------------------------------------

    fn coerce_bool(&self, e: Expr, ty: Ty) -> Expr {
        match ty {
            Ty::Bool => e,
            Ty::Int => Expr::binary(BinOp::Ne, e, Expr::int(0)),
        }
    }

    fn require_int(&self, ty: Ty, at: &Token, what: &str) -> PResult<()> {
        match ty {
            Ty::Int => Ok(()),
            Ty::Bool => Err(LangError::new(
                DiagCode::Type,
                format!("operand of {what} must be an integer, found a boolean"),
                at.line,
                at.col,
            )),
        }
    }

    fn expr(&mut self) -> PResult<(Expr, Ty)> {
        self.expr_implies()
    }

    fn expr_implies(&mut self) -> PResult<(Expr, Ty)> {
        let (lhs, lty) = self.expr_binary(BinOp::Or.precedence())?;
        if self.at_punct("==>") {
            if self.mode == Mode::Program {
                return Err(self.error_here(
                    DiagCode::Syntax,
                    "`==>` is only allowed in annotations and proofs",
                ));
            }
            self.bump();
            let (rhs, rty) = self.expr_implies()?;
            let lhs = self.coerce_bool(lhs, lty);
            let rhs = self.coerce_bool(rhs, rty);
            return Ok((Expr::implies(lhs, rhs), Ty::Bool));
        }
        Ok((lhs, lty))
    }

    fn binop_here(&self) -> Option<BinOp> {
        let p = match &self.peek().tok {
            Tok::Punct(p) => *p,
            _ => return None,
        };
        Some(match p {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing over the left-associative binary operators.
    fn expr_binary(&mut self, min_prec: u8) -> PResult<(Expr, Ty)> {
        let (mut lhs, mut lty) = self.expr_unary()?;
        while let Some(op) = self.binop_here() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_tok = self.bump();
            let (rhs, rty) = self.expr_binary(prec + 1)?;
            let (e, ty) = self.combine(op, lhs, lty, rhs, rty, &op_tok)?;
            lhs = e;
            lty = ty;
        }
        Ok((lhs, lty))
    }

    fn combine(
        &self,
        op: BinOp,
        lhs: Expr,
        lty: Ty,
        rhs: Expr,
        rty: Ty,
        at: &Token,
    ) -> PResult<(Expr, Ty)> {
        if op.is_logical() {
            let lhs = self.coerce_bool(lhs, lty);
            let rhs = self.coerce_bool(rhs, rty);
            Ok((Expr::binary(op, lhs, rhs), Ty::Bool))
        } else if op.is_comparison() {
            self.require_int(lty, at, &format!("`{}`", op.symbol()))?;
            self.require_int(rty, at, &format!("`{}`", op.symbol()))?;
            Ok((Expr::binary(op, lhs, rhs), Ty::Bool))
        } else {
            self.require_int(lty, at, &format!("`{}`", op.symbol()))?;
            self.require_int(rty, at, &format!("`{}`", op.symbol()))?;
            Ok((Expr::binary(op, lhs, rhs), Ty::Int))
        }
    }

    fn expr_unary(&mut self) -> PResult<(Expr, Ty)> {
        if self.at_punct("!") {
            self.bump();
            let (e, ty) = self.expr_unary()?;
            return Ok((Expr::not(self.coerce_bool(e, ty)), Ty::Bool));
        }
        if self.at_punct("-") {
            let op_tok = self.bump();
            if let Tok::Int(v) = &self.peek().tok {
                // `-3` is read as a single literal.
                let v = v.clone();
                self.bump();
                return Ok((Expr::Int(-v), Ty::Int));
            }
            let (e, ty) = self.expr_unary()?;
            self.require_int(ty, &op_tok, "unary `-`")?;
            return Ok((Expr::Unary(UnOp::Neg, Box::new(e)), Ty::Int));
        }
        if self.at_punct("+") {
            let op_tok = self.bump();
            let (e, ty) = self.expr_unary()?;
            self.require_int(ty, &op_tok, "unary `+`")?;
            return Ok((e, ty));
        }
        if self.at_punct("++") || self.at_punct("--") || self.at_punct("&") || self.at_punct("*")
        {
            return Err(self.error_here(
                DiagCode::Unsupported,
                "side effects and pointers are not supported inside expressions",
            ));
        }
        self.expr_atom()
    }

    fn expr_atom(&mut self) -> PResult<(Expr, Ty)> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok((Expr::Int(v.clone()), Ty::Int))
            }
            Tok::Punct("(") => {
                self.bump();
                if let Tok::Ident(s) = &self.peek().tok {
                    if UNSUPPORTED_TYPES.contains(&s.as_str()) || s == "int" {
                        return Err(self.error_here(
                            DiagCode::UnsupportedType,
                            format!("casts to `{s}` are not supported"),
                        ));
                    }
                }
                let (e, ty) = self.expr()?;
                self.expect_punct(")")?;
                Ok((Expr::Paren(Box::new(e)), ty))
            }
            Tok::Ident(name) => {
                let name = name.clone();
                self.bump();
                if self.at_punct("(") {
                    return self.call(&name, &t);
                }
                match name.as_str() {
                    "true" => return Ok((Expr::Bool(true), Ty::Bool)),
                    "false" => return Ok((Expr::Bool(false), Ty::Bool)),
                    _ => {}
                }
                if RESERVED.contains(&name.as_str()) {
                    return Err(LangError::new(
                        DiagCode::Syntax,
                        format!("unexpected keyword `{name}` in expression"),
                        t.line,
                        t.col,
                    ));
                }
                if !self.is_known(&name) {
                    return Err(LangError::new(
                        DiagCode::UndeclaredVariable,
                        format!("use of undeclared variable `{name}`"),
                        t.line,
                        t.col,
                    ));
                }
                Ok((Expr::Var(name), Ty::Int))
            }
            other => Err(LangError::new(
                DiagCode::Syntax,
                format!("expected expression, found {}", Self::describe(other)),
                t.line,
                t.col,
            )),
        }
    }

    fn call(&mut self, name: &str, at: &Token) -> PResult<(Expr, Ty)> {
        if name == "unknown" && self.mode == Mode::Program {
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            let fresh = self.fresh_name("nondet");
            self.vars.push(fresh.clone());
            self.pending_havocs.push(fresh.clone());
            return Ok((Expr::Var(fresh), Ty::Int));
        }
        Err(LangError::new(
            DiagCode::FunctionCall,
            format!("function call `{name}(...)` is not allowed here"),
            at.line,
            at.col,
        ))
    }

    fn take_havocs(&mut self) -> Vec<Stmt> {
        self.pending_havocs.drain(..).map(Stmt::Havoc).collect()
    }

    fn bool_expr(&mut self) -> PResult<Expr> {
        let (e, ty) = self.expr()?;
        Ok(self.coerce_bool(e, ty))
    }

    fn int_expr(&mut self) -> PResult<Expr> {
        let at = self.peek().clone();
        let (e, ty) = self.expr()?;
        self.require_int(ty, &at, "an assignment")?;
        Ok(e)
    }

    // ---- statements --------------------------------------------------

    fn translation_unit(&mut self) -> PResult<Vec<CStmt>> {
        let mut body = None;
        let mut globals = Vec::new();
        while self.peek().tok != Tok::Eof {
            if self.at_ident("extern") {
                self.skip_through(";")?;
                continue;
            }
            if self.at_punct("#") {
                let line = self.peek().line;
                while self.peek().tok != Tok::Eof && self.peek().line == line {
                    self.bump();
                }
                continue;
            }
            let t = self.peek().clone();
            match &t.tok {
                Tok::Ident(kw) if kw == "int" || kw == "void" => {
                    let is_main = matches!(self.peek_at(1), Tok::Ident(n) if n == "main")
                        && matches!(self.peek_at(2), Tok::Punct("("));
                    let is_proto = matches!(self.peek_at(1), Tok::Ident(_))
                        && matches!(self.peek_at(2), Tok::Punct("("));
                    if is_main {
                        if body.is_some() {
                            return Err(self.error_here(
                                DiagCode::Unsupported,
                                "more than one `main` function",
                            ));
                        }
                        self.bump();
                        self.bump();
                        self.expect_punct("(")?;
                        if self.at_ident("void") {
                            self.bump();
                        }
                        self.expect_punct(")")?;
                        self.expect_punct("{")?;
                        let mut stmts = Vec::new();
                        while !self.at_punct("}") {
                            if self.peek().tok == Tok::Eof {
                                return Err(self.error_here(DiagCode::Syntax, "missing `}`"));
                            }
                            stmts.push(self.stmt()?);
                        }
                        self.bump();
                        body = Some(stmts);
                    } else if is_proto {
                        // `int unknown();` prototypes are accepted; other functions are not.
                        let name = match self.peek_at(1) {
                            Tok::Ident(n) => n.clone(),
                            _ => unreachable!(),
                        };
                        self.bump();
                        self.bump();
                        self.skip_balanced_parens()?;
                        if self.at_punct("{") {
                            return Err(self.error_here(
                                DiagCode::Unsupported,
                                format!("function definition `{name}` (only `main` is supported)"),
                            ));
                        }
                        self.expect_punct(";")?;
                    } else if kw == "int" {
                        // Globals are hoisted into main's prefix.
                        globals.push(self.declaration()?);
                    } else {
                        return Err(self.error_here(DiagCode::Syntax, "unexpected `void`"));
                    }
                }
                Tok::Ident(kw) if UNSUPPORTED_TYPES.contains(&kw.as_str()) => {
                    return Err(self.error_here(
                        DiagCode::UnsupportedType,
                        format!("type `{kw}` is not supported (only `int`)"),
                    ));
                }
                other => {
                    return Err(LangError::new(
                        DiagCode::Syntax,
                        format!("expected a declaration or `main`, found {}", Self::describe(other)),
                        t.line,
                        t.col,
                    ))
                }
            }
        }
        let body = body.ok_or_else(|| self.error_here(DiagCode::Syntax, "no `main` function found"))?;
        globals.extend(body);
        Ok(globals)
    }

    fn skip_through(&mut self, p: &str) -> PResult<()> {
        while !self.at_punct(p) {
            if self.peek().tok == Tok::Eof {
                return Err(self.error_here(DiagCode::Syntax, format!("expected `{p}`")));
            }
            self.bump();
        }
        self.bump();
        Ok(())
    }

    fn skip_balanced_parens(&mut self) -> PResult<()> {
        self.expect_punct("(")?;
        let mut depth = 1;
        while depth > 0 {
            match &self.peek().tok {
                Tok::Punct("(") => depth += 1,
                Tok::Punct(")") => depth -= 1,
                Tok::Eof => return Err(self.error_here(DiagCode::Syntax, "unbalanced `(`")),
                _ => {}
            }
            self.bump();
        }
        Ok(())
    }

    fn declare(&mut self, name: &str, line: usize, col: usize) -> PResult<()> {
        if self.vars.iter().any(|v| v == name) {
            return Err(LangError::new(
                DiagCode::DuplicateDeclaration,
                format!("variable `{name}` declared twice"),
                line,
                col,
            ));
        }
        self.vars.push(name.to_string());
        Ok(())
    }

    /// `int a, b = e, ...;`
    fn declaration(&mut self) -> PResult<CStmt> {
        self.bump(); // int
        let mut out = Vec::new();
        loop {
            let (name, line, col) = self.expect_ident()?;
            if self.at_punct("[") {
                return Err(self.error_here(DiagCode::Unsupported, "arrays are not supported"));
            }
            if self.eat_punct("=") {
                let stmts = self.assignment_rhs(&name)?;
                self.declare(&name, line, col)?;
                out.extend(stmts);
            } else {
                self.declare(&name, line, col)?;
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(CStmt::Simple(out))
    }

    /// Parses the right-hand side of `name = ...`, including chained assignments.
    fn assignment_rhs(&mut self, name: &str) -> PResult<Vec<Stmt>> {
        if matches!(self.peek().tok, Tok::Ident(ref n) if n == "unknown")
            && matches!(self.peek_at(1), Tok::Punct("("))
            && matches!(self.peek_at(2), Tok::Punct(")"))
            && !matches!(self.peek_at(3), Tok::Punct(p) if is_binary_punct(p))
        {
            self.bump();
            self.bump();
            self.bump();
            return Ok(vec![Stmt::Havoc(name.to_string())]);
        }
        if let Tok::Ident(next) = &self.peek().tok {
            if matches!(self.peek_at(1), Tok::Punct("=")) && !RESERVED.contains(&next.as_str()) {
                let (inner, line, col) = self.expect_ident()?;
                if !self.is_known(&inner) {
                    return Err(LangError::new(
                        DiagCode::UndeclaredVariable,
                        format!("assignment to undeclared variable `{inner}`"),
                        line,
                        col,
                    ));
                }
                self.bump();
                let mut stmts = self.assignment_rhs(&inner)?;
                stmts.push(Stmt::Assign(name.to_string(), Expr::var(inner)));
                return Ok(stmts);
            }
        }
        let rhs = self.int_expr()?;
        let mut stmts = self.take_havocs();
        stmts.push(Stmt::Assign(name.to_string(), rhs));
        Ok(stmts)
    }

    fn block_or_stmt(&mut self) -> PResult<Vec<CStmt>> {
        if self.eat_punct("{") {
            let mut out = Vec::new();
            while !self.at_punct("}") {
                if self.peek().tok == Tok::Eof {
                    return Err(self.error_here(DiagCode::Syntax, "missing `}`"));
                }
                out.push(self.stmt()?);
            }
            self.bump();
            Ok(out)
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn paren_cond(&mut self) -> PResult<(Expr, Vec<Stmt>)> {
        self.expect_punct("(")?;
        let cond = self.bool_expr()?;
        self.expect_punct(")")?;
        Ok((cond, self.take_havocs()))
    }

    fn stmt(&mut self) -> PResult<CStmt> {
        let t = self.peek().clone();
        let pos = (t.line, t.col);
        let kw = match &t.tok {
            Tok::Ident(s) => s.clone(),
            Tok::Punct(";") => {
                self.bump();
                return Ok(CStmt::Simple(vec![]));
            }
            Tok::Punct("{") => return Ok(CStmt::Block(self.block_or_stmt()?)),
            Tok::Punct("++") | Tok::Punct("--") => {
                let delta = if self.at_punct("++") { 1 } else { -1 };
                self.bump();
                let (name, line, col) = self.expect_ident()?;
                self.expect_punct(";")?;
                return self.incdec(name, delta, line, col);
            }
            other => {
                return Err(LangError::new(
                    DiagCode::Syntax,
                    format!("expected statement, found {}", Self::describe(other)),
                    t.line,
                    t.col,
                ))
            }
        };
        match kw.as_str() {
            "int" => self.declaration(),
            "if" => {
                self.bump();
                let (cond, havocs) = self.paren_cond()?;
                let then = self.block_or_stmt()?;
                let els = if self.at_ident("else") {
                    self.bump();
                    self.block_or_stmt()?
                } else {
                    vec![]
                };
                Ok(CStmt::If {
                    cond,
                    havocs,
                    then,
                    els,
                    pos,
                })
            }
            "while" => {
                self.bump();
                let (cond, havocs) = self.paren_cond()?;
                let body = self.block_or_stmt()?;
                Ok(CStmt::Loop {
                    cond,
                    cond_havocs: havocs,
                    init: vec![],
                    step: vec![],
                    body,
                    pos,
                })
            }
            "for" => {
                self.bump();
                self.expect_punct("(")?;
                let init = if self.at_ident("int") {
                    vec![self.declaration()?]
                } else {
                    let s = self.simple_list(";")?;
                    self.expect_punct(";")?;
                    s
                };
                let (cond, cond_havocs) = if self.at_punct(";") {
                    (Expr::tt(), vec![])
                } else {
                    let c = self.bool_expr()?;
                    (c, self.take_havocs())
                };
                self.expect_punct(";")?;
                let step = self.simple_list(")")?;
                self.expect_punct(")")?;
                let body = self.block_or_stmt()?;
                Ok(CStmt::Loop {
                    cond,
                    cond_havocs,
                    init,
                    step,
                    body,
                    pos,
                })
            }
            "do" => Err(self.error_here(DiagCode::Unsupported, "`do ... while` loops are not supported")),
            "break" | "continue" | "goto" | "switch" => Err(self.error_here(
                DiagCode::Unsupported,
                format!("`{kw}` is not supported"),
            )),
            "assert" | "assume" => {
                self.bump();
                self.expect_punct("(")?;
                let e = self.bool_expr()?;
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                let havocs = self.take_havocs();
                if kw == "assert" {
                    if !havocs.is_empty() {
                        return Err(LangError::new(
                            DiagCode::Unsupported,
                            "`unknown()` inside an assertion is not supported",
                            pos.0,
                            pos.1,
                        ));
                    }
                    Ok(CStmt::Assert(e, pos))
                } else {
                    let mut out = havocs;
                    out.push(Stmt::Assume(e));
                    Ok(CStmt::Simple(out))
                }
            }
            "return" => {
                self.bump();
                if !self.at_punct(";") {
                    self.expr()?;
                    self.pending_havocs.clear();
                }
                self.expect_punct(";")?;
                Ok(CStmt::Return(pos))
            }
            k if UNSUPPORTED_TYPES.contains(&k) => Err(self.error_here(
                DiagCode::UnsupportedType,
                format!("type `{k}` is not supported (only `int`)"),
            )),
            _ => {
                let s = self.simple()?;
                self.expect_punct(";")?;
                Ok(CStmt::Simple(s))
            }
        }
    }

    fn incdec(&mut self, name: String, delta: i64, line: usize, col: usize) -> PResult<CStmt> {
        if !self.is_known(&name) {
            return Err(LangError::new(
                DiagCode::UndeclaredVariable,
                format!("assignment to undeclared variable `{name}`"),
                line,
                col,
            ));
        }
        let op = if delta > 0 { BinOp::Add } else { BinOp::Sub };
        Ok(CStmt::Simple(vec![Stmt::Assign(
            name.clone(),
            Expr::binary(op, Expr::var(name), Expr::int(1)),
        )]))
    }

    /// Comma-separated simple statements (for-loop init/step).
    fn simple_list(&mut self, terminator: &str) -> PResult<Vec<CStmt>> {
        let mut out = Vec::new();
        if self.at_punct(terminator) {
            return Ok(out);
        }
        loop {
            out.push(CStmt::Simple(self.simple()?));
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(out)
    }

    /// Assignment, compound assignment, increment or `unknown();`.
    fn simple(&mut self) -> PResult<Vec<Stmt>> {
        if self.at_punct("++") || self.at_punct("--") {
            let delta = if self.at_punct("++") { 1 } else { -1 };
            self.bump();
            let (name, line, col) = self.expect_ident()?;
            return match self.incdec(name, delta, line, col)? {
                CStmt::Simple(s) => Ok(s),
                _ => unreachable!(),
            };
        }
        if self.at_ident("unknown") && matches!(self.peek_at(1), Tok::Punct("(")) {
            self.bump();
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            return Ok(vec![]);
        }
        let (name, line, col) = self.expect_ident()?;
        if self.at_punct("(") {
            return Err(LangError::new(
                DiagCode::FunctionCall,
                format!("call to `{name}` is not supported (only `unknown()`)"),
                line,
                col,
            ));
        }
        if !self.is_known(&name) {
            return Err(LangError::new(
                DiagCode::UndeclaredVariable,
                format!("assignment to undeclared variable `{name}`"),
                line,
                col,
            ));
        }
        let t = self.bump();
        let compound = match &t.tok {
            Tok::Punct("=") => return self.assignment_rhs(&name),
            Tok::Punct("++") | Tok::Punct("--") => {
                let delta = if t.tok == Tok::Punct("++") { 1 } else { -1 };
                return match self.incdec(name, delta, line, col)? {
                    CStmt::Simple(s) => Ok(s),
                    _ => unreachable!(),
                };
            }
            Tok::Punct("+=") => BinOp::Add,
            Tok::Punct("-=") => BinOp::Sub,
            Tok::Punct("*=") => BinOp::Mul,
            Tok::Punct("/=") => BinOp::Div,
            Tok::Punct("%=") => BinOp::Rem,
            other => {
                return Err(LangError::new(
                    DiagCode::Syntax,
                    format!("expected assignment, found {}", Self::describe(other)),
                    t.line,
                    t.col,
                ))
            }
        };
        let rhs = self.int_expr()?;
        let mut out = self.take_havocs();
        out.push(Stmt::Assign(
            name.clone(),
            Expr::binary(compound, Expr::var(name), rhs),
        ));
        Ok(out)
    }
}

fn is_binary_punct(p: &str) -> bool {
    matches!(
        p,
        "+" | "-" | "*" | "/" | "%" | "<" | "<=" | ">" | ">=" | "==" | "!=" | "&&" | "||"
    )
}

/// Statement tree before the single loop is singled out.
#[derive(Debug)]
enum CStmt {
    Simple(Vec<Stmt>),
    Block(Vec<CStmt>),
    If {
        cond: Expr,
        havocs: Vec<Stmt>,
        then: Vec<CStmt>,
        els: Vec<CStmt>,
        pos: (usize, usize),
    },
    Loop {
        cond: Expr,
        cond_havocs: Vec<Stmt>,
        init: Vec<CStmt>,
        step: Vec<CStmt>,
        body: Vec<CStmt>,
        pos: (usize, usize),
    },
    Assert(Expr, (usize, usize)),
    Return((usize, usize)),
}

fn flatten(stmts: Vec<CStmt>) -> Vec<CStmt> {
    let mut out = Vec::new();
    for s in stmts {
        match s {
            CStmt::Block(inner) => out.extend(flatten(inner)),
            other => out.push(other),
        }
    }
    out
}

fn first_loop(stmts: &[CStmt]) -> Option<(usize, usize)> {
    stmts.iter().find_map(|s| match s {
        CStmt::Loop { pos, .. } => Some(*pos),
        CStmt::Block(inner) => first_loop(inner),
        CStmt::If { then, els, .. } => first_loop(then).or_else(|| first_loop(els)),
        _ => None,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    Pre,
    Body,
}

fn lower_block(stmts: Vec<CStmt>, region: Region) -> PResult<Vec<Stmt>> {
    let mut out = Vec::new();
    for s in flatten(stmts) {
        match s {
            CStmt::Simple(v) => out.extend(v),
            CStmt::Block(_) => unreachable!("flattened"),
            CStmt::If {
                cond,
                havocs,
                then,
                els,
                pos,
            } => {
                let then = flatten(then);
                let els = flatten(els);
                let returns_only = |b: &[CStmt]| {
                    b.iter().any(|s| matches!(s, CStmt::Return(_)))
                        && b.iter().all(|s| match s {
                            CStmt::Return(_) => true,
                            CStmt::Simple(v) => v.is_empty(),
                            _ => false,
                        })
                };
                if region == Region::Pre && els.is_empty() && returns_only(&then) {
                    out.extend(havocs);
                    out.push(Stmt::Assume(cond.negated()));
                    continue;
                }
                if contains_return(&then) || contains_return(&els) {
                    let code = if region == Region::Body {
                        DiagCode::ReturnInLoop
                    } else {
                        DiagCode::Unsupported
                    };
                    return Err(LangError::new(
                        code,
                        "`return` is only supported as an early exit `if (c) return;` before the loop",
                        pos.0,
                        pos.1,
                    ));
                }
                out.extend(havocs);
                out.push(Stmt::If(
                    cond,
                    lower_block(then, region)?,
                    lower_block(els, region)?,
                ));
            }
            CStmt::Loop { pos, .. } => {
                return Err(LangError::new(
                    DiagCode::NestedLoop,
                    "nested loops are not supported",
                    pos.0,
                    pos.1,
                ))
            }
            CStmt::Assert(_, pos) => {
                return Err(LangError::new(
                    DiagCode::AssertionCount,
                    "only a single assertion after the loop is supported",
                    pos.0,
                    pos.1,
                ))
            }
            CStmt::Return(pos) => {
                let code = if region == Region::Body {
                    DiagCode::ReturnInLoop
                } else {
                    DiagCode::Unsupported
                };
                return Err(LangError::new(
                    code,
                    "unconditional `return` before the assertion",
                    pos.0,
                    pos.1,
                ));
            }
        }
    }
    Ok(out)
}

fn contains_return(stmts: &[CStmt]) -> bool {
    stmts.iter().any(|s| match s {
        CStmt::Return(_) => true,
        CStmt::Block(inner) => contains_return(inner),
        CStmt::If { then, els, .. } => contains_return(then) || contains_return(els),
        _ => false,
    })
}

/// Parses a program in the supported C subset.
pub fn parse_program(source: &str) -> Result<Program, LangError> {
    let mut p = Parser::new(source, Mode::Program, Scope::Any)?;
    let stmts = flatten(p.translation_unit()?);

    let loops: Vec<usize> = stmts
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, CStmt::Loop { .. }))
        .map(|(i, _)| i)
        .collect();
    if loops.len() > 1 {
        let pos = match &stmts[loops[1]] {
            CStmt::Loop { pos, .. } => *pos,
            _ => unreachable!(),
        };
        return Err(LangError::new(
            DiagCode::MultipleLoops,
            "programs with more than one loop are not supported",
            pos.0,
            pos.1,
        ));
    }
    let Some(&loop_idx) = loops.first() else {
        if let Some(pos) = first_loop(&stmts) {
            return Err(LangError::new(
                DiagCode::NestedLoop,
                "the loop must be at the top level of `main`",
                pos.0,
                pos.1,
            ));
        }
        return Err(LangError::new(
            DiagCode::MissingLoop,
            "program has no loop",
            1,
            1,
        ));
    };

    let mut stmts = stmts;
    let post: Vec<CStmt> = stmts.split_off(loop_idx + 1);
    let the_loop = stmts.pop().expect("loop present");
    let pre_c = stmts;

    let CStmt::Loop {
        cond,
        cond_havocs,
        init,
        step,
        body,
        ..
    } = the_loop
    else {
        unreachable!()
    };

    if let Some(pos) = first_loop(&body) {
        return Err(LangError::new(
            DiagCode::NestedLoop,
            "nested loops are not supported",
            pos.0,
            pos.1,
        ));
    }
    if let Some(pos) = first_loop(&pre_c) {
        return Err(LangError::new(
            DiagCode::NestedLoop,
            "loops inside branches are not supported",
            pos.0,
            pos.1,
        ));
    }

    let mut pre = lower_block(pre_c, Region::Pre)?;
    pre.extend(lower_block(init, Region::Pre)?);
    pre.extend(cond_havocs.iter().cloned());

    let mut body_stmts = lower_block(body, Region::Body)?;
    body_stmts.extend(lower_block(step, Region::Body)?);
    body_stmts.extend(cond_havocs);

    let mut assertion = None;
    let mut returned = false;
    for s in flatten(post) {
        match s {
            CStmt::Assert(e, pos) => {
                if assertion.is_some() {
                    return Err(LangError::new(
                        DiagCode::AssertionCount,
                        "only a single assertion after the loop is supported",
                        pos.0,
                        pos.1,
                    ));
                }
                if returned {
                    return Err(LangError::new(
                        DiagCode::StatementAfterLoop,
                        "assertion after `return` is unreachable",
                        pos.0,
                        pos.1,
                    ));
                }
                assertion = Some(e);
            }
            CStmt::Return(_) => returned = true,
            CStmt::Simple(v) if v.is_empty() => {}
            other => {
                let pos = match &other {
                    CStmt::If { pos, .. } | CStmt::Loop { pos, .. } => *pos,
                    _ => (0, 0),
                };
                if matches!(other, CStmt::Loop { .. }) {
                    return Err(LangError::new(
                        DiagCode::MultipleLoops,
                        "programs with more than one loop are not supported",
                        pos.0,
                        pos.1,
                    ));
                }
                return Err(LangError::new(
                    DiagCode::StatementAfterLoop,
                    "only the assertion (and `return`) may follow the loop",
                    pos.0,
                    pos.1,
                ));
            }
        }
    }
    let Some(assertion) = assertion else {
        let t = p.peek();
        return Err(LangError::new(
            DiagCode::AssertionCount,
            "program has no assertion after the loop",
            t.line,
            t.col,
        ));
    };

    Ok(Program {
        name: "main".to_string(),
        vars: p.vars,
        pre,
        loop_cond: cond,
        body: body_stmts,
        assertion,
    })
}

fn parse_logic(text: &str, scope: Scope<'_>) -> Result<(Expr, Ty), LangError> {
    let mut p = Parser::new(text, Mode::Logic, scope)?;
    let (e, ty) = p.expr()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error_here(
            DiagCode::Syntax,
            format!("unexpected {} after expression", Parser::describe(&p.peek().tok)),
        ));
    }
    Ok((e, ty))
}

/// Parses a boolean formula over the given names; integers in boolean
/// position mean `!= 0`.
pub fn parse_formula(text: &str, names: &BTreeSet<String>) -> Result<Expr, LangError> {
    let (e, ty) = parse_logic(text, Scope::Names(names))?;
    Ok(match ty {
        Ty::Bool => e,
        Ty::Int => Expr::binary(BinOp::Ne, e, Expr::int(0)),
    })
}

/// Parses any expression without a scope check.
pub fn parse_expr_untyped(text: &str) -> Result<Expr, LangError> {
    parse_logic(text, Scope::Any).map(|(e, _)| e)
}

pub fn parse_expr_in(text: &str, scope: Scope<'_>) -> Result<(Expr, Ty), LangError> {
    parse_logic(text, scope)
}
