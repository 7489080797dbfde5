//! Recursive-descent parser for `.ni` programs.
//!
//! Sugar handled here, all of it eliminated before the core AST is built:
//!   * `let x = e1 in e2`   becomes `(fun x => e2) e1`
//!   * `e1; e2`             becomes `let _ = e1 in e2`
//!   * `let (a, b) = e1 in e2` binds the pair and projects the components
//!   * records `{f = e; g = e'}` become right-nested pairs, with a
//!     file-wide field registry so `r.f` can be rewritten to `fst`/`snd`
//!     chains
//!   * `none` / `some e`    become `inl ()` / `inr e`
//!   * multi-binder `fun`/`rec` curry into nested single-binder functions,
//!     composing the intermediate arrow ascriptions when all binders and
//!     the result are annotated
//!
//! Inside record literals `;` separates fields, so field bodies that need
//! sequencing must be parenthesized. In `def`/`main` declarations a `;` at
//! top level terminates the declaration when the next token starts a new
//! declaration (or ends the file); otherwise it is ordinary sequencing.

use super::ast::{BinOpKind, Binder, Expr, ExprKind, FnAnnot, Name, Span, Val};
use super::lexer::{lex, LexError, Tok, Token};
use crate::program::Program;
use crate::typesys::{Label, SecType};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
#[error("parse error at {span}: {msg}")]
pub struct ParseError {
    pub span: Span,
    pub msg: String,
    /// Tokens that would have been accepted at this point.
    pub expected: Vec<String>,
}

impl From<LexError> for ParseError {
    fn from(e: LexError) -> Self {
        ParseError {
            span: e.span,
            msg: e.msg,
            expected: vec![],
        }
    }
}

/// Parse a whole `.ni` program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = lex(src)?;
    let registry = scan_records(&tokens)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        registry,
        no_seq_depths: Vec::new(),
        brace_depth: 0,
    };
    p.program()
}

/// Parse a standalone expression (used by tests and the REPL-less CLI).
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let registry = scan_records(&tokens)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        registry,
        no_seq_depths: Vec::new(),
        brace_depth: 0,
    };
    let e = p.expr(false)?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

/// Parse a security type written in the surface syntax.
pub fn parse_type(src: &str) -> Result<SecType, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        registry: BTreeMap::new(),
        no_seq_depths: Vec::new(),
        brace_depth: 0,
    };
    let t = p.ty()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Field registry: field name -> (index, record arity). Built by a token
/// pre-scan so projections may appear before the literal that declares the
/// record shape.
type Registry = BTreeMap<String, (usize, usize)>;

/// Scan the token stream for record literals `{ id = ... ; id = ... }` and
/// record each field's position. Conflicting positions are an error.
fn scan_records(tokens: &[Token]) -> Result<Registry, ParseError> {
    let mut registry = Registry::new();
    let mut i = 0;
    while i < tokens.len() {
        let is_record_open = tokens[i].tok == Tok::LBrace
            && matches!(tokens.get(i + 1).map(|t| &t.tok), Some(Tok::Ident(_)))
            && tokens.get(i + 2).map(|t| &t.tok) == Some(&Tok::Assign)
            && (i == 0 || tokens[i - 1].tok != Tok::Fork);
        if is_record_open {
            let open_span = tokens[i].span;
            let mut fields: Vec<String> = Vec::new();
            let mut depth = 0usize;
            let mut j = i;
            // walk the braces; at depth 1, an `ident =` after `{` or `;`
            // starts a field
            loop {
                match &tokens[j].tok {
                    Tok::LBrace => depth += 1,
                    Tok::RBrace => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Tok::Eof => {
                        return Err(ParseError {
                            span: open_span,
                            msg: "unterminated record literal".into(),
                            expected: vec!["`}`".into()],
                        })
                    }
                    _ => {}
                }
                if depth == 1 && matches!(tokens[j].tok, Tok::LBrace | Tok::Semi) {
                    if let (Some(Tok::Ident(name)), Some(Tok::Assign)) = (
                        tokens.get(j + 1).map(|t| &t.tok),
                        tokens.get(j + 2).map(|t| &t.tok),
                    ) {
                        fields.push(name.clone());
                    }
                }
                j += 1;
            }
            let arity = fields.len();
            for (idx, name) in fields.iter().enumerate() {
                match registry.get(name) {
                    Some(&(i0, a0)) if (i0, a0) != (idx, arity) => {
                        return Err(ParseError {
                            span: open_span,
                            msg: format!(
                                "record field `{name}` declared at position {idx} of {arity} \
                                 but previously at position {i0} of {a0}"
                            ),
                            expected: vec![],
                        })
                    }
                    _ => {
                        registry.insert(name.clone(), (idx, arity));
                    }
                }
            }
        }
        i += 1;
    }
    Ok(registry)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    registry: Registry,
    /// Brace depths at which `;` separates record fields instead of
    /// sequencing.
    no_seq_depths: Vec<usize>,
    brace_depth: usize,
}

/// One parsed binder with an optional ascription.
struct Param {
    binder: Binder,
    ty: Option<SecType>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: Tok) -> bool {
        if *self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Span, ParseError> {
        let sp = self.span();
        if *self.peek() == t {
            self.bump();
            Ok(sp)
        } else {
            Err(self.err_expected(&[format!("{t}")]))
        }
    }

    fn err_expected(&self, expected: &[String]) -> ParseError {
        ParseError {
            span: self.span(),
            msg: format!(
                "unexpected {} (expected {})",
                self.peek(),
                expected.join(" or ")
            ),
            expected: expected.to_vec(),
        }
    }

    fn ident(&mut self) -> Result<(Name, Span), ParseError> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((Arc::from(s.as_str()), sp))
            }
            _ => Err(self.err_expected(&["identifier".into()])),
        }
    }

    // ---------------- programs ----------------

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut outputs: Vec<Name> = Vec::new();
        let mut highs: Vec<(Name, BTreeSet<i64>)> = Vec::new();
        let mut externs: Vec<(Name, SecType)> = Vec::new();
        let mut defs: Vec<(Name, Expr)> = Vec::new();
        let mut impls: Vec<(Name, Expr)> = Vec::new();
        let mut main: Option<Expr> = None;
        let mut seen: BTreeSet<Name> = BTreeSet::new();

        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Output => {
                    self.bump();
                    let (name, sp) = self.ident()?;
                    self.expect(Tok::Semi)?;
                    if !seen.insert(name.clone()) {
                        return Err(ParseError {
                            span: sp,
                            msg: format!("duplicate declaration of `{name}`"),
                            expected: vec![],
                        });
                    }
                    outputs.push(name);
                }
                Tok::High => {
                    self.bump();
                    let (name, sp) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let dom = self.domain()?;
                    self.expect(Tok::Semi)?;
                    if !seen.insert(name.clone()) {
                        return Err(ParseError {
                            span: sp,
                            msg: format!("duplicate declaration of `{name}`"),
                            expected: vec![],
                        });
                    }
                    highs.push((name, dom));
                }
                Tok::Extern => {
                    self.bump();
                    let (name, sp) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let ty = self.ty()?;
                    self.expect(Tok::Semi)?;
                    if !seen.insert(name.clone()) {
                        return Err(ParseError {
                            span: sp,
                            msg: format!("duplicate declaration of `{name}`"),
                            expected: vec![],
                        });
                    }
                    externs.push((name, ty));
                }
                Tok::Def => {
                    self.bump();
                    let (name, sp) = self.ident()?;
                    self.expect(Tok::Assign)?;
                    let body = self.expr(true)?;
                    self.expect(Tok::Semi)?;
                    if !seen.insert(name.clone()) {
                        return Err(ParseError {
                            span: sp,
                            msg: format!("duplicate declaration of `{name}`"),
                            expected: vec![],
                        });
                    }
                    defs.push((name, body));
                }
                Tok::Impl => {
                    self.bump();
                    let (name, _) = self.ident()?;
                    self.expect(Tok::Assign)?;
                    let body = self.expr(true)?;
                    self.expect(Tok::Semi)?;
                    impls.push((name, body));
                }
                Tok::Main => {
                    self.bump();
                    self.expect(Tok::Assign)?;
                    let body = self.expr(true)?;
                    self.expect(Tok::Semi)?;
                    if main.is_some() {
                        return Err(ParseError {
                            span: self.span(),
                            msg: "`main` declared twice".into(),
                            expected: vec![],
                        });
                    }
                    main = Some(body);
                }
                _ => {
                    return Err(self.err_expected(&[
                        "`output`".into(),
                        "`high`".into(),
                        "`extern`".into(),
                        "`def`".into(),
                        "`impl`".into(),
                        "`main`".into(),
                    ]))
                }
            }
        }

        let main = main.ok_or_else(|| ParseError {
            span: self.span(),
            msg: "program has no `main` declaration".into(),
            expected: vec!["`main`".into()],
        })?;
        Ok(Program {
            outputs,
            highs,
            externs,
            defs,
            extern_impls: impls,
            main,
        })
    }

    fn domain(&mut self) -> Result<BTreeSet<i64>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut dom = BTreeSet::new();
        loop {
            let lo = self.signed_int()?;
            if self.eat(Tok::DotDot) {
                let hi = self.signed_int()?;
                if lo > hi {
                    return Err(ParseError {
                        span: self.span(),
                        msg: format!("empty range {lo}..{hi}"),
                        expected: vec![],
                    });
                }
                dom.extend(lo..=hi);
            } else {
                dom.insert(lo);
            }
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(dom)
    }

    fn signed_int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat(Tok::Minus);
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.err_expected(&["integer".into()])),
        }
    }

    // ---------------- declaration boundary ----------------

    /// At a top-level `;` inside a `def`/`main` body: does the next token
    /// start a new declaration (or end the file)?
    fn at_decl_boundary(&self) -> bool {
        matches!(
            self.peek2(),
            Tok::Output | Tok::High | Tok::Extern | Tok::Def | Tok::Impl | Tok::Main | Tok::Eof
        )
    }

    fn seq_disabled(&self) -> bool {
        self.no_seq_depths.last() == Some(&self.brace_depth)
    }

    // ---------------- expressions ----------------

    /// `decl_top` is true when parsing the body of a declaration, where a
    /// top-level `;` followed by a declaration keyword ends the body.
    fn expr(&mut self, decl_top: bool) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Let | Tok::Fun | Tok::Rec | Tok::If | Tok::Match => self.prefix_construct(decl_top),
            _ => {
                let lhs = self.store_expr(decl_top)?;
                self.maybe_seq(lhs, decl_top)
            }
        }
    }

    fn maybe_seq(&mut self, lhs: Expr, decl_top: bool) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Semi
            && !self.seq_disabled()
            && !(decl_top && self.at_decl_boundary())
        {
            let sp = self.span();
            self.bump();
            let rhs = self.expr(decl_top)?;
            Ok(seq(lhs, rhs, sp))
        } else {
            Ok(lhs)
        }
    }

    fn prefix_construct(&mut self, decl_top: bool) -> Result<Expr, ParseError> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Let => {
                self.bump();
                self.let_expr(sp, decl_top)
            }
            Tok::Fun => {
                self.bump();
                let params = self.params()?;
                self.expect(Tok::FatArrow)?;
                let body = self.expr(decl_top)?;
                Ok(make_fun(None, params, None, None, body, sp))
            }
            Tok::Rec => {
                self.bump();
                let fname = match self.binder()? {
                    Binder::Named(n) => Some(n),
                    Binder::Anon => None,
                };
                let params = self.params()?;
                if params.is_empty() {
                    return Err(self.err_expected(&["binder".into()]));
                }
                let ret = if self.eat(Tok::Colon) {
                    Some(self.ty()?)
                } else {
                    None
                };
                let label = if self.eat(Tok::At) {
                    Some(self.label()?)
                } else {
                    None
                };
                self.expect(Tok::FatArrow)?;
                let body = self.expr(decl_top)?;
                Ok(make_fun(fname, params, ret, label, body, sp))
            }
            Tok::If => {
                self.bump();
                let cond = self.expr(false)?;
                self.expect(Tok::Then)?;
                let then = self.expr(false)?;
                self.expect(Tok::Else)?;
                let els = self.expr(decl_top)?;
                Ok(Expr::new(
                    ExprKind::If(Arc::new(cond), Arc::new(then), Arc::new(els)),
                    sp,
                ))
            }
            Tok::Match => {
                self.bump();
                let scrut = self.expr(false)?;
                self.expect(Tok::With)?;
                self.expect(Tok::Inl)?;
                let lbind = self.binder()?;
                self.expect(Tok::FatArrow)?;
                let larm = self.expr(false)?;
                self.expect(Tok::Pipe)?;
                self.expect(Tok::Inr)?;
                let rbind = self.binder()?;
                self.expect(Tok::FatArrow)?;
                let rarm = self.expr(false)?;
                self.expect(Tok::End)?;
                Ok(Expr::new(
                    ExprKind::Match {
                        scrut: Arc::new(scrut),
                        lbind,
                        larm: Arc::new(larm),
                        rbind,
                        rarm: Arc::new(rarm),
                    },
                    sp,
                ))
            }
            _ => unreachable!(),
        }
    }

    fn let_expr(&mut self, sp: Span, decl_top: bool) -> Result<Expr, ParseError> {
        // let (a, b) = e in e'   (pair pattern)
        // let (x : ty) = e in e' (ascribed binder)
        // let x = e in e'
        if *self.peek() == Tok::LParen {
            match self.peek2().clone() {
                Tok::Ident(_) | Tok::Underscore => {
                    // look one further to disambiguate pattern vs ascription
                    let t3 = self.tokens[(self.pos + 2).min(self.tokens.len() - 1)]
                        .tok
                        .clone();
                    if t3 == Tok::Comma {
                        self.bump(); // (
                        let a = self.binder()?;
                        self.expect(Tok::Comma)?;
                        let b = self.binder()?;
                        self.expect(Tok::RParen)?;
                        self.expect(Tok::Assign)?;
                        let rhs = self.expr(false)?;
                        self.expect(Tok::In)?;
                        let body = self.expr(decl_top)?;
                        return Ok(let_pair(a, b, rhs, body, sp));
                    }
                }
                _ => {}
            }
        }
        let param = self.param()?;
        self.expect(Tok::Assign)?;
        let rhs = self.expr(false)?;
        self.expect(Tok::In)?;
        let body = self.expr(decl_top)?;
        Ok(make_let(param, rhs, body, sp))
    }

    fn binder(&mut self) -> Result<Binder, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Binder::named(&s))
            }
            Tok::Underscore => {
                self.bump();
                Ok(Binder::Anon)
            }
            _ => Err(self.err_expected(&["identifier".into(), "`_`".into()])),
        }
    }

    /// One function parameter: `x`, `_`, `()`, or `(x : ty)`.
    fn param(&mut self) -> Result<Param, ParseError> {
        match self.peek().clone() {
            Tok::Ident(_) | Tok::Underscore => Ok(Param {
                binder: self.binder()?,
                ty: None,
            }),
            Tok::LParen => {
                if *self.peek2() == Tok::RParen {
                    self.bump();
                    self.bump();
                    return Ok(Param {
                        binder: Binder::Anon,
                        ty: Some(SecType::Unit),
                    });
                }
                self.bump();
                let b = self.binder()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(Param {
                    binder: b,
                    ty: Some(ty),
                })
            }
            _ => Err(self.err_expected(&["binder".into(), "`(`".into()])),
        }
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut ps = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) | Tok::Underscore | Tok::LParen => ps.push(self.param()?),
                _ => break,
            }
        }
        if ps.is_empty() {
            return Err(self.err_expected(&["binder".into()]));
        }
        Ok(ps)
    }

    fn store_expr(&mut self, decl_top: bool) -> Result<Expr, ParseError> {
        let lhs = self.or_expr()?;
        if *self.peek() == Tok::LArrow {
            let sp = self.span();
            self.bump();
            let rhs = match self.peek() {
                Tok::Let | Tok::Fun | Tok::Rec | Tok::If | Tok::Match => {
                    self.prefix_construct(decl_top)?
                }
                _ => self.or_expr()?,
            };
            Ok(Expr::new(
                ExprKind::Store(Arc::new(lhs), Arc::new(rhs)),
                sp,
            ))
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::OrOr {
            let sp = self.span();
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr::new(
                ExprKind::BinOp(BinOpKind::Or, Arc::new(lhs), Arc::new(rhs)),
                sp,
            );
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while *self.peek() == Tok::AndAnd {
            let sp = self.span();
            self.bump();
            let rhs = self.cmp_expr()?;
            lhs = Expr::new(
                ExprKind::BinOp(BinOpKind::And, Arc::new(lhs), Arc::new(rhs)),
                sp,
            );
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::Assign => BinOpKind::Eq,
            Tok::Lt => BinOpKind::Lt,
            _ => return Ok(lhs),
        };
        let sp = self.span();
        self.bump();
        let rhs = self.add_expr()?;
        Ok(Expr::new(
            ExprKind::BinOp(op, Arc::new(lhs), Arc::new(rhs)),
            sp,
        ))
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOpKind::Add,
                Tok::Minus => BinOpKind::Sub,
                _ => break,
            };
            let sp = self.span();
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::new(ExprKind::BinOp(op, Arc::new(lhs), Arc::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.app_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOpKind::Mul,
                Tok::Slash => BinOpKind::Div,
                _ => break,
            };
            let sp = self.span();
            self.bump();
            let rhs = self.app_expr()?;
            lhs = Expr::new(ExprKind::BinOp(op, Arc::new(lhs), Arc::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn starts_unary(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Bang
                | Tok::Fst
                | Tok::Snd
                | Tok::Inl
                | Tok::Inr
                | Tok::SomeKw
                | Tok::RefKw
                | Tok::Int(_)
                | Tok::True
                | Tok::False
                | Tok::LParen
                | Tok::Ident(_)
                | Tok::Hash
                | Tok::Fork
                | Tok::LBrace
                | Tok::Cas
                | Tok::Faa
                | Tok::ArrayMake
                | Tok::ArrayGet
                | Tok::ArraySet
                | Tok::NoneKw
        )
    }

    fn app_expr(&mut self) -> Result<Expr, ParseError> {
        let mut f = self.unary_expr()?;
        while self.starts_unary() {
            let sp = self.span();
            let a = self.unary_expr()?;
            f = Expr::new(ExprKind::App(Arc::new(f), Arc::new(a)), sp);
        }
        Ok(f)
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        let sp = self.span();
        macro_rules! un {
            ($mk:expr) => {{
                self.bump();
                let e = self.unary_expr()?;
                #[allow(clippy::redundant_closure_call)]
                Ok(Expr::new($mk(Arc::new(e)), sp))
            }};
        }
        match self.peek() {
            Tok::Bang => un!(ExprKind::Load),
            Tok::Fst => un!(ExprKind::Fst),
            Tok::Snd => un!(ExprKind::Snd),
            Tok::Inl => un!(ExprKind::InjL),
            Tok::Inr => un!(ExprKind::InjR),
            Tok::SomeKw => un!(ExprKind::InjR),
            Tok::RefKw => un!(ExprKind::Ref),
            _ => self.postfix_expr(),
        }
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Dot {
            let sp = self.span();
            self.bump();
            let (field, fsp) = self.ident()?;
            let &(idx, arity) = self.registry.get(field.as_ref()).ok_or(ParseError {
                span: fsp,
                msg: format!("unknown record field `{field}`"),
                expected: vec![],
            })?;
            e = project(e, idx, arity, sp);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Val::Int(n)), sp))
            }
            Tok::Minus => {
                // negative literal; only valid immediately before an int
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Expr::new(ExprKind::Lit(Val::Int(-n)), sp))
                    }
                    _ => Err(self.err_expected(&["integer".into()])),
                }
            }
            Tok::True => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Val::Bool(true)), sp))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Val::Bool(false)), sp))
            }
            Tok::NoneKw => {
                self.bump();
                Ok(Expr::new(
                    ExprKind::InjL(Arc::new(Expr::new(ExprKind::Lit(Val::Unit), sp))),
                    sp,
                ))
            }
            Tok::Hash => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) if n >= 0 => {
                        self.bump();
                        Ok(Expr::new(ExprKind::Lit(Val::Loc(n as u64)), sp))
                    }
                    _ => Err(self.err_expected(&["location number".into()])),
                }
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Var(Arc::from(s.as_str())), sp))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(Tok::RParen) {
                    return Ok(Expr::new(ExprKind::Lit(Val::Unit), sp));
                }
                let first = self.expr(false)?;
                if self.eat(Tok::Comma) {
                    let second = self.expr(false)?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::new(
                        ExprKind::Pair(Arc::new(first), Arc::new(second)),
                        sp,
                    ))
                } else {
                    self.expect(Tok::RParen)?;
                    Ok(first)
                }
            }
            Tok::Fork => {
                self.bump();
                self.expect(Tok::LBrace)?;
                self.brace_depth += 1;
                let body = self.expr(false)?;
                self.brace_depth -= 1;
                self.expect(Tok::RBrace)?;
                Ok(Expr::new(ExprKind::Fork(Arc::new(body)), sp))
            }
            Tok::LBrace => self.record(sp),
            Tok::Cas => {
                self.bump();
                let (a, b, c) = self.triple()?;
                Ok(Expr::new(
                    ExprKind::Cas(Arc::new(a), Arc::new(b), Arc::new(c)),
                    sp,
                ))
            }
            Tok::Faa => {
                self.bump();
                let (a, b) = self.pair_args()?;
                Ok(Expr::new(ExprKind::Faa(Arc::new(a), Arc::new(b)), sp))
            }
            Tok::ArrayMake => {
                self.bump();
                let (a, b) = self.pair_args()?;
                Ok(Expr::new(
                    ExprKind::ArrayMake(Arc::new(a), Arc::new(b)),
                    sp,
                ))
            }
            Tok::ArrayGet => {
                self.bump();
                let (a, b) = self.pair_args()?;
                Ok(Expr::new(ExprKind::ArrayGet(Arc::new(a), Arc::new(b)), sp))
            }
            Tok::ArraySet => {
                self.bump();
                let (a, b, c) = self.triple()?;
                Ok(Expr::new(
                    ExprKind::ArraySet(Arc::new(a), Arc::new(b), Arc::new(c)),
                    sp,
                ))
            }
            _ => Err(self.err_expected(&["expression".into()])),
        }
    }

    fn pair_args(&mut self) -> Result<(Expr, Expr), ParseError> {
        self.expect(Tok::LParen)?;
        let a = self.expr(false)?;
        self.expect(Tok::Comma)?;
        let b = self.expr(false)?;
        self.expect(Tok::RParen)?;
        Ok((a, b))
    }

    fn triple(&mut self) -> Result<(Expr, Expr, Expr), ParseError> {
        self.expect(Tok::LParen)?;
        let a = self.expr(false)?;
        self.expect(Tok::Comma)?;
        let b = self.expr(false)?;
        self.expect(Tok::Comma)?;
        let c = self.expr(false)?;
        self.expect(Tok::RParen)?;
        Ok((a, b, c))
    }

    fn record(&mut self, sp: Span) -> Result<Expr, ParseError> {
        self.expect(Tok::LBrace)?;
        self.brace_depth += 1;
        self.no_seq_depths.push(self.brace_depth);
        let mut fields: Vec<(String, Expr)> = Vec::new();
        loop {
            let (name, _) = self.ident()?;
            self.expect(Tok::Assign)?;
            let value = self.expr(false)?;
            fields.push((name.to_string(), value));
            if !self.eat(Tok::Semi) {
                break;
            }
        }
        self.no_seq_depths.pop();
        self.brace_depth -= 1;
        self.expect(Tok::RBrace)?;
        if fields.is_empty() {
            return Err(ParseError {
                span: sp,
                msg: "empty record literal".into(),
                expected: vec![],
            });
        }
        // verify the field order matches the registry
        for (idx, (name, _)) in fields.iter().enumerate() {
            let &(i0, a0) = self.registry.get(name).expect("registered by pre-scan");
            if (i0, a0) != (idx, fields.len()) {
                return Err(ParseError {
                    span: sp,
                    msg: format!("record field `{name}` out of order"),
                    expected: vec![],
                });
            }
        }
        // right-nested pairs
        let mut iter = fields.into_iter().rev();
        let (_, last) = iter.next().unwrap();
        let e = iter.fold(last, |acc, (_, field)| {
            Expr::new(ExprKind::Pair(Arc::new(field), Arc::new(acc)), sp)
        });
        Ok(e)
    }

    // ---------------- types ----------------

    fn ty(&mut self) -> Result<SecType, ParseError> {
        let lhs = self.ty_prod()?;
        if self.eat(Tok::ThinArrow) {
            let rhs = self.ty()?;
            // unparenthesized arrows default to label L
            Ok(SecType::arrow(lhs, rhs, Label::L))
        } else {
            Ok(lhs)
        }
    }

    fn ty_prod(&mut self) -> Result<SecType, ParseError> {
        let first = self.ty_ref()?;
        if self.eat(Tok::Star) {
            let rest = self.ty_prod()?;
            Ok(SecType::prod(first, rest))
        } else {
            Ok(first)
        }
    }

    fn ty_ref(&mut self) -> Result<SecType, ParseError> {
        if self.eat(Tok::RefKw) {
            let inner = self.ty_ref()?;
            Ok(SecType::reference(inner))
        } else {
            self.ty_atom()
        }
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "L" => {
                self.bump();
                Ok(Label::L)
            }
            Tok::Ident(s) if s == "H" => {
                self.bump();
                Ok(Label::H)
            }
            _ => Err(self.err_expected(&["`L`".into(), "`H`".into()])),
        }
    }

    fn ty_atom(&mut self) -> Result<SecType, ParseError> {
        match self.peek().clone() {
            Tok::UnitTy => {
                self.bump();
                Ok(SecType::Unit)
            }
            Tok::IntTy => {
                self.bump();
                let l = if self.eat(Tok::Caret) {
                    self.label()?
                } else {
                    Label::L
                };
                Ok(SecType::Int(l))
            }
            Tok::BoolTy => {
                self.bump();
                let l = if self.eat(Tok::Caret) {
                    self.label()?
                } else {
                    Label::L
                };
                Ok(SecType::Bool(l))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.ty()?;
                self.expect(Tok::RParen)?;
                if self.eat(Tok::Caret) {
                    let l = self.label()?;
                    match inner {
                        SecType::Arrow(a, r, _) => Ok(SecType::Arrow(a, r, l)),
                        _ => Err(ParseError {
                            span: self.span(),
                            msg: "`^` label after parentheses requires a function type".into(),
                            expected: vec![],
                        }),
                    }
                } else {
                    Ok(inner)
                }
            }
            _ => Err(self.err_expected(&["type".into()])),
        }
    }
}

// ---------------- desugaring helpers ----------------

/// `e1; e2` is `let _ = e1 in e2`.
fn seq(e1: Expr, e2: Expr, sp: Span) -> Expr {
    let lam = Expr::new(
        ExprKind::Rec {
            fname: Binder::Anon,
            arg: Binder::Anon,
            annot: FnAnnot::NONE,
            body: Arc::new(e2),
        },
        sp,
    );
    Expr::new(ExprKind::App(Arc::new(lam), Arc::new(e1)), sp)
}

fn make_let(param: Param, rhs: Expr, body: Expr, sp: Span) -> Expr {
    let lam = Expr::new(
        ExprKind::Rec {
            fname: Binder::Anon,
            arg: param.binder,
            annot: FnAnnot {
                arg: param.ty,
                ret: None,
                label: None,
            },
            body: Arc::new(body),
        },
        sp,
    );
    Expr::new(ExprKind::App(Arc::new(lam), Arc::new(rhs)), sp)
}

/// `let (a, b) = e in body` binds the pair once and projects components.
/// The `__pair` temporary is reserved; programs should not use `__`-prefixed
/// names.
fn let_pair(a: Binder, b: Binder, rhs: Expr, body: Expr, sp: Span) -> Expr {
    let tmp: Name = Arc::from("__pair");
    let tmp_var = Expr::new(ExprKind::Var(tmp.clone()), sp);
    let bind_b = make_let(
        Param {
            binder: b,
            ty: None,
        },
        Expr::new(ExprKind::Snd(Arc::new(tmp_var.clone())), sp),
        body,
        sp,
    );
    let bind_a = make_let(
        Param {
            binder: a,
            ty: None,
        },
        Expr::new(ExprKind::Fst(Arc::new(tmp_var)), sp),
        bind_b,
        sp,
    );
    make_let(
        Param {
            binder: Binder::Named(tmp),
            ty: None,
        },
        rhs,
        bind_a,
        sp,
    )
}

/// Build a possibly-curried function. When every binder is ascribed and a
/// return type is present, the intermediate arrow ascriptions are composed
/// so each nested lambda is fully annotated; the declared label lands on
/// the innermost arrow and the outer partial applications are labeled `L`.
fn make_fun(
    fname: Option<Name>,
    params: Vec<Param>,
    ret: Option<SecType>,
    label: Option<Label>,
    body: Expr,
    sp: Span,
) -> Expr {
    let all_annotated = params.iter().all(|p| p.ty.is_some());
    // ret_tys[i] = return type of the lambda binding params[i]
    let mut ret_tys: Vec<Option<SecType>> = vec![None; params.len()];
    let mut labels: Vec<Option<Label>> = vec![None; params.len()];
    if let (Some(ret), true) = (&ret, all_annotated) {
        let n = params.len();
        labels[n - 1] = Some(label.unwrap_or(Label::L));
        ret_tys[n - 1] = Some(ret.clone());
        for i in (0..n - 1).rev() {
            let inner = SecType::arrow(
                params[i + 1].ty.clone().unwrap(),
                ret_tys[i + 1].clone().unwrap(),
                labels[i + 1].unwrap(),
            );
            ret_tys[i] = Some(inner);
            labels[i] = Some(Label::L);
        }
    } else if params.len() == 1 {
        ret_tys[0] = ret;
        labels[0] = label;
    }

    let mut acc = body;
    for (i, p) in params.into_iter().enumerate().rev() {
        let fb = if i == 0 {
            fname
                .as_ref()
                .map(|n| Binder::Named(n.clone()))
                .unwrap_or(Binder::Anon)
        } else {
            Binder::Anon
        };
        acc = Expr::new(
            ExprKind::Rec {
                fname: fb,
                arg: p.binder,
                annot: FnAnnot {
                    arg: p.ty,
                    ret: ret_tys[i].clone(),
                    label: labels[i],
                },
                body: Arc::new(acc),
            },
            sp,
        );
    }
    acc
}

/// Field projection as a fst/snd chain over right-nested pairs.
fn project(e: Expr, idx: usize, arity: usize, sp: Span) -> Expr {
    let mut acc = e;
    for _ in 0..idx {
        acc = Expr::new(ExprKind::Snd(Arc::new(acc)), sp);
    }
    if idx < arity - 1 {
        acc = Expr::new(ExprKind::Fst(Arc::new(acc)), sp);
    }
    Expr::new(acc.kind, sp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(src: &str) -> ExprKind {
        parse_expr(src).unwrap().kind
    }

    #[test]
    fn parses_store_of_literal() {
        let p = parse_program("output out; main = out <- 1;").unwrap();
        assert_eq!(p.outputs.len(), 1);
        assert_eq!(p.outputs[0].as_ref(), "out");
        match &p.main.kind {
            ExprKind::Store(l, r) => {
                assert_eq!(l.kind, ExprKind::Var(Arc::from("out")));
                assert_eq!(r.kind, ExprKind::Lit(Val::Int(1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn let_desugars_to_application() {
        // let x = ref true in !x  ==>  (fun x => !x) (ref true)
        let e = parse_expr("let x = ref true in !x").unwrap();
        match &e.kind {
            ExprKind::App(f, a) => {
                match &f.kind {
                    ExprKind::Rec { fname, arg, body, .. } => {
                        assert_eq!(*fname, Binder::Anon);
                        assert_eq!(*arg, Binder::named("x"));
                        assert!(matches!(body.kind, ExprKind::Load(_)));
                    }
                    other => panic!("unexpected fun {other:?}"),
                }
                assert!(matches!(a.kind, ExprKind::Ref(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn high_decl_with_fork() {
        let p = parse_program("high h : {0,1}; main = fork { h };").unwrap();
        assert_eq!(p.highs.len(), 1);
        assert_eq!(p.highs[0].1, BTreeSet::from([0, 1]));
        assert!(matches!(p.main.kind, ExprKind::Fork(_)));
    }

    #[test]
    fn domain_ranges() {
        let p = parse_program("high h : {0..3}; main = h;").unwrap();
        assert_eq!(p.highs[0].1, BTreeSet::from([0, 1, 2, 3]));
    }

    #[test]
    fn seq_is_let_with_anon_binder() {
        let e = parse_expr("1; 2").unwrap();
        match &e.kind {
            ExprKind::App(f, a) => {
                assert_eq!(a.kind, ExprKind::Lit(Val::Int(1)));
                match &f.kind {
                    ExprKind::Rec { arg, body, .. } => {
                        assert_eq!(*arg, Binder::Anon);
                        assert_eq!(body.kind, ExprKind::Lit(Val::Int(2)));
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn application_is_left_associative() {
        match kind("f a b") {
            ExprKind::App(fa, b) => {
                assert_eq!(b.kind, ExprKind::Var(Arc::from("b")));
                assert!(matches!(fa.kind, ExprKind::App(_, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn records_become_pairs_and_projections() {
        let p = parse_program(
            "def t = fun r => r.is_classified;\
             main = { data = 1; is_classified = true };",
        )
        .unwrap();
        match &p.main.kind {
            ExprKind::Pair(a, b) => {
                assert_eq!(a.kind, ExprKind::Lit(Val::Int(1)));
                assert_eq!(b.kind, ExprKind::Lit(Val::Bool(true)));
            }
            other => panic!("unexpected {other:?}"),
        }
        // r.is_classified  ==>  snd r
        match &p.defs[0].1.kind {
            ExprKind::Rec { body, .. } => assert!(matches!(body.kind, ExprKind::Snd(_))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn three_field_record_projection() {
        let p = parse_program(
            "def f = fun r => r.b; main = { a = 1; b = 2; c = 3 };",
        )
        .unwrap();
        // {a;b;c} = (1, (2, 3)); r.b = fst (snd r)
        match &p.defs[0].1.kind {
            ExprKind::Rec { body, .. } => match &body.kind {
                ExprKind::Fst(inner) => assert!(matches!(inner.kind, ExprKind::Snd(_))),
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rec_with_ascriptions() {
        let e = parse_expr("rec f (x : int^H) : bool^H @ L => true").unwrap();
        match &e.kind {
            ExprKind::Rec { annot, .. } => {
                assert_eq!(annot.arg, Some(SecType::Int(Label::H)));
                assert_eq!(annot.ret, Some(SecType::Bool(Label::H)));
                assert_eq!(annot.label, Some(Label::L));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn curried_rec_composes_annotations() {
        let e = parse_expr("rec f (x : int^L) (y : int^H) : int^H @ L => y").unwrap();
        match &e.kind {
            ExprKind::Rec { fname, annot, body, .. } => {
                assert_eq!(*fname, Binder::named("f"));
                assert_eq!(annot.arg, Some(SecType::Int(Label::L)));
                assert_eq!(
                    annot.ret,
                    Some(SecType::arrow(
                        SecType::Int(Label::H),
                        SecType::Int(Label::H),
                        Label::L
                    ))
                );
                match &body.kind {
                    ExprKind::Rec { fname, annot, .. } => {
                        assert_eq!(*fname, Binder::Anon);
                        assert_eq!(annot.ret, Some(SecType::Int(Label::H)));
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_syntax() {
        assert_eq!(
            parse_type("(int^H -> bool^H)^L").unwrap(),
            SecType::arrow(SecType::Int(Label::H), SecType::Bool(Label::H), Label::L)
        );
        assert_eq!(
            parse_type("ref int^L").unwrap(),
            SecType::reference(SecType::Int(Label::L))
        );
        assert_eq!(
            parse_type("int^H * bool^H").unwrap(),
            SecType::prod(SecType::Int(Label::H), SecType::Bool(Label::H))
        );
        // bare int defaults to L; bare arrows default to L
        assert_eq!(
            parse_type("int -> int").unwrap(),
            SecType::arrow(SecType::Int(Label::L), SecType::Int(Label::L), Label::L)
        );
    }

    #[test]
    fn def_bodies_may_contain_sequencing() {
        let p = parse_program("def f = fun r => (r <- 1; r <- 2); main = f;").unwrap();
        assert_eq!(p.defs.len(), 1);
        assert!(matches!(p.main.kind, ExprKind::Var(_)));
    }

    #[test]
    fn decl_boundary_semicolon_terminates() {
        // the `;` before `def` ends main's body; g is a definition
        let p = parse_program("def g = 1; main = g;").unwrap();
        assert_eq!(p.defs.len(), 1);
    }

    #[test]
    fn parse_error_carries_position_and_expectations() {
        let err = parse_program("main = (1;").unwrap_err();
        assert!(err.span.line >= 1);
        assert!(!err.expected.is_empty() || !err.msg.is_empty());
    }

    #[test]
    fn none_and_some_are_injections() {
        assert!(matches!(kind("none"), ExprKind::InjL(_)));
        assert!(matches!(kind("some 3"), ExprKind::InjR(_)));
    }

    #[test]
    fn match_syntax() {
        let e = parse_expr("match none with inl u => 0 | inr v => v end").unwrap();
        assert!(matches!(e.kind, ExprKind::Match { .. }));
    }

    #[test]
    fn loc_literals() {
        assert_eq!(kind("#7"), ExprKind::Lit(Val::Loc(7)));
    }

    #[test]
    fn unit_param_is_unit_ascription() {
        let e = parse_expr("fun () => 1").unwrap();
        match &e.kind {
            ExprKind::Rec { arg, annot, .. } => {
                assert_eq!(*arg, Binder::Anon);
                assert_eq!(annot.arg, Some(SecType::Unit));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn let_pair_pattern() {
        let e = parse_expr("let (l, r) = (1, 2) in l + r").unwrap();
        // smoke test: it parses to nested lets and evaluates correctly later
        assert!(matches!(e.kind, ExprKind::App(_, _)));
    }
}
