//! Algorithmic checker for the declarative security typing rules: type
//! synthesis with subsumption folded into the checking positions
//! (application arguments, store right-hand sides, branch joins).
//!
//! `rec` binders carry ascriptions; plain lambdas synthesize when their
//! argument is ascribed or when they appear applied in let position.
//! Sums, CAS and the raw array primitives have no typing rules; programs
//! use them through externs, which are assumed typings discharged by the
//! verifier.

use super::types::{is_flat, join_type, shape_key, stamp, subtype, Label, SecType};
use crate::lang::ast::{BinOpKind, Binder, Expr, ExprKind, Name, Span};
use crate::program::Program;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TypeErrorKind {
    UnboundVariable,
    LabelLeak,
    RefMismatch,
    Mismatch,
    NonFlatBranch,
    BranchNotValue,
    NoJoin,
    NotAFunction,
    NotAPair,
    MissingAscription,
    Unsupported,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeErrorKind::UnboundVariable => "UnboundVariable",
            TypeErrorKind::LabelLeak => "LabelLeak",
            TypeErrorKind::RefMismatch => "RefMismatch",
            TypeErrorKind::Mismatch => "Mismatch",
            TypeErrorKind::NonFlatBranch => "NonFlatBranch",
            TypeErrorKind::BranchNotValue => "BranchNotValue",
            TypeErrorKind::NoJoin => "NoJoin",
            TypeErrorKind::NotAFunction => "NotAFunction",
            TypeErrorKind::NotAPair => "NotAPair",
            TypeErrorKind::MissingAscription => "MissingAscription",
            TypeErrorKind::Unsupported => "Unsupported",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
#[error("{kind} at {span}: {msg}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub msg: String,
}

impl TypeError {
    fn new(kind: TypeErrorKind, span: Span, msg: impl Into<String>) -> TypeError {
        TypeError {
            kind,
            span,
            msg: msg.into(),
        }
    }
}

/// Typing context: scoped variable bindings plus the output-location names,
/// which are implicitly typed as references to low integers.
#[derive(Debug, Clone, Default)]
pub struct TypeCtx {
    vars: Vec<(Name, SecType)>,
    outputs: BTreeSet<Name>,
}

impl TypeCtx {
    pub fn new() -> TypeCtx {
        TypeCtx::default()
    }

    pub fn with_var(mut self, name: &str, ty: SecType) -> TypeCtx {
        self.vars.push((Name::from(name), ty));
        self
    }

    pub fn with_output(mut self, name: &str) -> TypeCtx {
        self.outputs.insert(Name::from(name));
        self
    }

    fn push(&mut self, b: &Binder, ty: SecType) -> bool {
        if let Binder::Named(n) = b {
            self.vars.push((n.clone(), ty));
            true
        } else {
            false
        }
    }

    fn pop(&mut self, n: usize) {
        self.vars.truncate(self.vars.len() - n);
    }

    fn lookup(&self, x: &str) -> Option<SecType> {
        // innermost binding wins
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n.as_ref() == x)
            .map(|(_, t)| t.clone())
            .or_else(|| {
                self.outputs
                    .contains(x)
                    .then(|| SecType::reference(SecType::Int(Label::L)))
            })
    }
}

/// Synthesize the minimal type of `e` under the context.
pub fn typecheck(ctx: &TypeCtx, e: &Expr) -> Result<SecType, TypeError> {
    let mut ctx = ctx.clone();
    synth(&mut ctx, e)
}

fn classify(expected: &SecType, actual: &SecType) -> TypeErrorKind {
    if shape_key(expected) == shape_key(actual) {
        TypeErrorKind::LabelLeak
    } else if matches!(
        (expected, actual),
        (SecType::Ref(_), SecType::Ref(_))
    ) {
        TypeErrorKind::RefMismatch
    } else {
        TypeErrorKind::Mismatch
    }
}

fn subsume(actual: SecType, expected: &SecType, span: Span) -> Result<(), TypeError> {
    if subtype(&actual, expected) {
        Ok(())
    } else {
        Err(TypeError::new(
            classify(expected, &actual),
            span,
            format!("expected {expected}, found {actual}"),
        ))
    }
}

/// Is this application a desugared `let`: an anonymous, non-recursive
/// lambda applied to its bound expression?
fn as_let(e: &Expr) -> Option<(&Binder, Option<&SecType>, &Expr, &Expr)> {
    if let ExprKind::App(f, rhs) = &e.kind {
        if let ExprKind::Rec {
            fname: Binder::Anon,
            arg,
            annot,
            body,
        } = &f.kind
        {
            if annot.ret.is_none() && annot.label.is_none() {
                return Some((arg, annot.arg.as_ref(), rhs, body));
            }
        }
    }
    None
}

fn synth(ctx: &mut TypeCtx, e: &Expr) -> Result<SecType, TypeError> {
    match &e.kind {
        ExprKind::Var(x) => ctx.lookup(x).ok_or_else(|| {
            TypeError::new(
                TypeErrorKind::UnboundVariable,
                e.span,
                format!("unbound variable `{x}`"),
            )
        }),
        ExprKind::Lit(v) => match v {
            crate::lang::ast::Val::Unit => Ok(SecType::Unit),
            crate::lang::ast::Val::Int(_) => Ok(SecType::Int(Label::L)),
            crate::lang::ast::Val::Bool(_) => Ok(SecType::Bool(Label::L)),
            other => Err(TypeError::new(
                TypeErrorKind::Unsupported,
                e.span,
                format!("literal `{}` has no typing rule", crate::lang::pretty_val(other)),
            )),
        },
        ExprKind::Rec {
            fname,
            arg,
            annot,
            body,
        } => {
            let (Some(arg_ty), ret, label) = (&annot.arg, &annot.ret, annot.label) else {
                return Err(TypeError::new(
                    TypeErrorKind::MissingAscription,
                    e.span,
                    "function binder needs a type ascription to synthesize",
                ));
            };
            match ret {
                Some(ret_ty) => {
                    let chi = label.unwrap_or(Label::L);
                    let self_ty = SecType::arrow(arg_ty.clone(), ret_ty.clone(), chi);
                    let mut n = 0;
                    n += ctx.push(fname, self_ty.clone()) as usize;
                    n += ctx.push(arg, arg_ty.clone()) as usize;
                    let goal = stamp(ret_ty, chi);
                    let res = check(ctx, body, &goal);
                    ctx.pop(n);
                    res?;
                    Ok(self_ty)
                }
                None => {
                    if matches!(fname, Binder::Named(_)) {
                        return Err(TypeError::new(
                            TypeErrorKind::MissingAscription,
                            e.span,
                            "recursive function needs a result ascription",
                        ));
                    }
                    let n = ctx.push(arg, arg_ty.clone()) as usize;
                    let body_ty = synth(ctx, body);
                    ctx.pop(n);
                    Ok(SecType::arrow(arg_ty.clone(), body_ty?, Label::L))
                }
            }
        }
        ExprKind::App(f, a) => {
            if let Some((binder, ann, rhs, body)) = as_let(e) {
                let bound_ty = match ann {
                    Some(t) => {
                        check(ctx, rhs, t)?;
                        t.clone()
                    }
                    None => synth(ctx, rhs)?,
                };
                let n = ctx.push(binder, bound_ty) as usize;
                let res = synth(ctx, body);
                ctx.pop(n);
                return res;
            }
            let fty = synth(ctx, f)?;
            let SecType::Arrow(arg_ty, ret_ty, chi) = fty else {
                return Err(TypeError::new(
                    TypeErrorKind::NotAFunction,
                    f.span,
                    format!("expected a function, found {fty}"),
                ));
            };
            check(ctx, a, &arg_ty)?;
            Ok(stamp(&ret_ty, chi))
        }
        ExprKind::BinOp(op, l, r) => {
            let lt = synth(ctx, l)?;
            let rt = synth(ctx, r)?;
            binop_type(*op, &lt, &rt, e.span)
        }
        ExprKind::If(c, t, f) => {
            let guard = synth(ctx, c)?;
            if subtype(&guard, &SecType::Bool(Label::L)) {
                let t1 = synth(ctx, t)?;
                let t2 = synth(ctx, f)?;
                join_type(&t1, &t2).ok_or_else(|| {
                    TypeError::new(
                        TypeErrorKind::NoJoin,
                        e.span,
                        format!("branches have no common supertype: {t1} vs {t2}"),
                    )
                })
            } else if subtype(&guard, &SecType::Bool(Label::H)) {
                flat_if(ctx, e, t, f, None)
            } else {
                Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    c.span,
                    format!("guard must be a boolean, found {guard}"),
                ))
            }
        }
        ExprKind::Pair(a, b) => {
            let ta = synth(ctx, a)?;
            let tb = synth(ctx, b)?;
            Ok(SecType::prod(ta, tb))
        }
        ExprKind::Fst(p) => match synth(ctx, p)? {
            SecType::Prod(a, _) => Ok(*a),
            other => Err(TypeError::new(
                TypeErrorKind::NotAPair,
                p.span,
                format!("expected a product, found {other}"),
            )),
        },
        ExprKind::Snd(p) => match synth(ctx, p)? {
            SecType::Prod(_, b) => Ok(*b),
            other => Err(TypeError::new(
                TypeErrorKind::NotAPair,
                p.span,
                format!("expected a product, found {other}"),
            )),
        },
        ExprKind::Fork(body) => {
            synth(ctx, body)?;
            Ok(SecType::Unit)
        }
        ExprKind::Ref(init) => Ok(SecType::reference(synth(ctx, init)?)),
        ExprKind::Load(l) => match synth(ctx, l)? {
            SecType::Ref(t) => Ok(*t),
            other => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                l.span,
                format!("expected a reference, found {other}"),
            )),
        },
        ExprKind::Store(l, r) => {
            match synth(ctx, l)? {
                SecType::Ref(content) => {
                    check(ctx, r, &content)?;
                    Ok(SecType::Unit)
                }
                other => Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    l.span,
                    format!("expected a reference, found {other}"),
                )),
            }
        }
        ExprKind::Faa(l, d) => match synth(ctx, l)? {
            SecType::Ref(content) => match *content {
                SecType::Int(chi) => {
                    check(ctx, d, &SecType::Int(chi))?;
                    Ok(SecType::Int(chi))
                }
                other => Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    l.span,
                    format!("faa needs a reference to an integer, found ref {other}"),
                )),
            },
            other => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                l.span,
                format!("expected a reference, found {other}"),
            )),
        },
        ExprKind::InjL(_) | ExprKind::InjR(_) | ExprKind::Match { .. } => Err(TypeError::new(
            TypeErrorKind::Unsupported,
            e.span,
            "sums have no typing rule; use an extern for code that needs them",
        )),
        ExprKind::Cas(_, _, _) => Err(TypeError::new(
            TypeErrorKind::Unsupported,
            e.span,
            "cas has no typing rule; use an extern for code that needs it",
        )),
        ExprKind::ArrayMake(_, _) | ExprKind::ArrayGet(_, _) | ExprKind::ArraySet(_, _, _) => {
            Err(TypeError::new(
                TypeErrorKind::Unsupported,
                e.span,
                "raw array primitives have no typing rule; wrap them in an extern",
            ))
        }
    }
}

/// High-guard branching: both branches must be values or variables and the
/// joined type, stamped high, must be flat. With `expected` present the
/// branches are checked against it instead of joined.
fn flat_if(
    ctx: &mut TypeCtx,
    whole: &Expr,
    t: &Expr,
    f: &Expr,
    expected: Option<&SecType>,
) -> Result<SecType, TypeError> {
    for branch in [t, f] {
        if !branch.is_val_or_var() {
            return Err(TypeError::new(
                TypeErrorKind::BranchNotValue,
                branch.span,
                "branches under a high guard must be values or variables",
            ));
        }
    }
    match expected {
        Some(ty) => {
            if !is_flat(ty) {
                return Err(TypeError::new(
                    TypeErrorKind::NonFlatBranch,
                    whole.span,
                    format!("branch type {ty} is not flat"),
                ));
            }
            check(ctx, t, ty)?;
            check(ctx, f, ty)?;
            Ok(ty.clone())
        }
        None => {
            let t1 = synth(ctx, t)?;
            let t2 = synth(ctx, f)?;
            let joined = join_type(&t1, &t2).ok_or_else(|| {
                TypeError::new(
                    TypeErrorKind::NoJoin,
                    whole.span,
                    format!("branches have no common supertype: {t1} vs {t2}"),
                )
            })?;
            let flat = stamp(&joined, Label::H);
            if !is_flat(flat_ref(&flat)) {
                return Err(TypeError::new(
                    TypeErrorKind::NonFlatBranch,
                    whole.span,
                    format!("branch type {joined} has no flat supertype"),
                ));
            }
            Ok(flat)
        }
    }
}

fn flat_ref(t: &SecType) -> &SecType {
    t
}

fn binop_type(
    op: BinOpKind,
    lt: &SecType,
    rt: &SecType,
    span: Span,
) -> Result<SecType, TypeError> {
    use SecType::*;
    let mismatch = |msg: String| Err(TypeError::new(TypeErrorKind::Mismatch, span, msg));
    match op {
        BinOpKind::Add | BinOpKind::Sub | BinOpKind::Mul | BinOpKind::Div => match (lt, rt) {
            (Int(a), Int(b)) => Ok(Int(a.join(*b))),
            _ => mismatch(format!("`{}` needs integers, found {lt} and {rt}", op.symbol())),
        },
        BinOpKind::Lt => match (lt, rt) {
            (Int(a), Int(b)) => Ok(Bool(a.join(*b))),
            _ => mismatch(format!("`<` needs integers, found {lt} and {rt}")),
        },
        BinOpKind::Eq => match (lt, rt) {
            (Int(a), Int(b)) | (Bool(a), Bool(b)) => Ok(Bool(a.join(*b))),
            _ => mismatch(format!(
                "`=` needs two integers or two booleans, found {lt} and {rt}"
            )),
        },
        BinOpKind::And | BinOpKind::Or => match (lt, rt) {
            (Bool(a), Bool(b)) => Ok(Bool(a.join(*b))),
            _ => mismatch(format!(
                "`{}` needs booleans, found {lt} and {rt}",
                op.symbol()
            )),
        },
    }
}

/// Check `e` against `expected`, pushing the expectation through
/// constructors so invariant positions (reference contents) can be checked
/// rather than synthesized.
fn check(ctx: &mut TypeCtx, e: &Expr, expected: &SecType) -> Result<(), TypeError> {
    match (&e.kind, expected) {
        (ExprKind::Ref(init), SecType::Ref(content)) => check(ctx, init, content),
        (ExprKind::Pair(a, b), SecType::Prod(ta, tb)) => {
            check(ctx, a, ta)?;
            check(ctx, b, tb)
        }
        (
            ExprKind::Rec {
                fname,
                arg,
                annot,
                body,
            },
            SecType::Arrow(arg_ty, ret_ty, chi),
        ) => {
            if annot.arg.is_some() && annot.ret.is_some() {
                return subsume(synth(ctx, e)?, expected, e.span);
            }
            // the function must accept expected arguments
            let bound_arg = match &annot.arg {
                Some(declared) => {
                    subsume(arg_ty.as_ref().clone(), declared, e.span)?;
                    declared.clone()
                }
                None => arg_ty.as_ref().clone(),
            };
            let mut n = 0;
            n += ctx.push(fname, expected.clone()) as usize;
            n += ctx.push(arg, bound_arg) as usize;
            let goal = stamp(ret_ty, *chi);
            let res = check(ctx, body, &goal);
            ctx.pop(n);
            res
        }
        (ExprKind::If(c, t, f), _) => {
            let guard = synth(ctx, c)?;
            if subtype(&guard, &SecType::Bool(Label::L)) {
                check(ctx, t, expected)?;
                check(ctx, f, expected)
            } else if subtype(&guard, &SecType::Bool(Label::H)) {
                flat_if(ctx, e, t, f, Some(expected)).map(|_| ())
            } else {
                Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    c.span,
                    format!("guard must be a boolean, found {guard}"),
                ))
            }
        }
        (ExprKind::App(_, _), _) if as_let(e).is_some() => {
            let (binder, ann, rhs, body) = as_let(e).unwrap();
            let bound_ty = match ann {
                Some(t) => {
                    check(ctx, rhs, t)?;
                    t.clone()
                }
                None => synth(ctx, rhs)?,
            };
            let n = ctx.push(binder, bound_ty) as usize;
            let res = check(ctx, body, expected);
            ctx.pop(n);
            res
        }
        _ => subsume(synth(ctx, e)?, expected, e.span),
    }
}

// ---------------- whole programs ----------------

/// Typing result for one definition (or `main`).
#[derive(Debug, Clone, Serialize)]
pub struct DefTyping {
    pub name: String,
    /// Pretty-printed type when synthesis succeeded.
    #[serde(rename = "type")]
    pub ty: Option<String>,
    pub errors: Vec<ReportedError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportedError {
    pub kind: TypeErrorKind,
    pub span: String,
    pub message: String,
}

impl From<&TypeError> for ReportedError {
    fn from(e: &TypeError) -> Self {
        ReportedError {
            kind: e.kind,
            span: e.span.to_string(),
            message: e.msg.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TypingReport {
    pub defs: Vec<DefTyping>,
}

impl TypingReport {
    pub fn well_typed(&self) -> bool {
        self.defs.iter().all(|d| d.errors.is_empty())
    }

    pub fn def_type(&self, name: &str) -> Option<&str> {
        self.defs
            .iter()
            .find(|d| d.name == name)
            .and_then(|d| d.ty.as_deref())
    }

    pub fn first_error(&self) -> Option<(&str, &ReportedError)> {
        self.defs
            .iter()
            .find_map(|d| d.errors.first().map(|e| (d.name.as_str(), e)))
    }
}

/// Check every definition in order, binding successful ones into the
/// context along with the extern typings, then check `main`.
pub fn typecheck_program(p: &Program) -> TypingReport {
    let mut ctx = TypeCtx::new();
    for out in &p.outputs {
        ctx.outputs.insert(out.clone());
    }
    for (name, _) in &p.highs {
        ctx.vars.push((name.clone(), SecType::Int(Label::H)));
    }
    for (name, ty) in &p.externs {
        ctx.vars.push((name.clone(), ty.clone()));
    }

    let mut defs = Vec::new();
    for (name, body) in &p.defs {
        match synth(&mut ctx, body) {
            Ok(ty) => {
                defs.push(DefTyping {
                    name: name.to_string(),
                    ty: Some(ty.to_string()),
                    errors: vec![],
                });
                ctx.vars.push((name.clone(), ty));
            }
            Err(err) => defs.push(DefTyping {
                name: name.to_string(),
                ty: None,
                errors: vec![(&err).into()],
            }),
        }
    }
    match synth(&mut ctx, &p.main) {
        Ok(ty) => defs.push(DefTyping {
            name: "main".into(),
            ty: Some(ty.to_string()),
            errors: vec![],
        }),
        Err(err) => defs.push(DefTyping {
            name: "main".into(),
            ty: None,
            errors: vec![(&err).into()],
        }),
    }
    TypingReport { defs }
}
