//! Abstract syntax for the object language: an ML-like calculus with
//! higher-order references, fork, CAS, FAA and raw arrays.

use crate::typesys::{Label, SecType};
use std::fmt;
use std::sync::Arc;

pub type Name = Arc<str>;

/// Source position (1-based line/column). Equality and hashing of
/// expressions deliberately ignore spans so that the verifier can memoize
/// configurations structurally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const DUMMY: Span = Span { line: 0, col: 0 };
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A binder position: either a named variable or the wildcard `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binder {
    Anon,
    Named(Name),
}

impl Binder {
    pub fn named(s: &str) -> Binder {
        Binder::Named(Arc::from(s))
    }

    pub fn matches(&self, x: &str) -> bool {
        matches!(self, Binder::Named(n) if n.as_ref() == x)
    }
}

impl fmt::Display for Binder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binder::Anon => write!(f, "_"),
            Binder::Named(n) => write!(f, "{n}"),
        }
    }
}

/// Optional type ascription on a `rec`/`fun` binder. The dynamic semantics
/// ignores it; the type checker consumes it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FnAnnot {
    pub arg: Option<SecType>,
    pub ret: Option<SecType>,
    pub label: Option<Label>,
}

impl FnAnnot {
    pub const NONE: FnAnnot = FnAnnot {
        arg: None,
        ret: None,
        label: None,
    };

    pub fn is_empty(&self) -> bool {
        self.arg.is_none() && self.ret.is_none() && self.label.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOpKind {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Lt,
    And,
    Or,
}

impl BinOpKind {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOpKind::Add => "+",
            BinOpKind::Sub => "-",
            BinOpKind::Mul => "*",
            BinOpKind::Div => "/",
            BinOpKind::Eq => "=",
            BinOpKind::Lt => "<",
            BinOpKind::And => "&&",
            BinOpKind::Or => "||",
        }
    }
}

/// Runtime values. Locations are plain naturals handed out by the
/// allocation oracle.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Val {
    Unit,
    Int(i64),
    Bool(bool),
    Loc(u64),
    RecClos {
        fname: Binder,
        arg: Binder,
        annot: FnAnnot,
        body: Arc<Expr>,
    },
    Pair(Box<Val>, Box<Val>),
    InjL(Box<Val>),
    InjR(Box<Val>),
}

impl Val {
    /// Unboxed values may be compared by CAS and `=`.
    pub fn is_unboxed(&self) -> bool {
        matches!(self, Val::Unit | Val::Int(_) | Val::Bool(_) | Val::Loc(_))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Val::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Val::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_loc(&self) -> Option<u64> {
        match self {
            Val::Loc(l) => Some(*l),
            _ => None,
        }
    }
}

/// Expression nodes. Sugar (`let`, `;`, `fun`, records, `some`/`none`) is
/// desugared at parse time, so the stepper only ever sees these forms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Var(Name),
    Lit(Val),
    Rec {
        fname: Binder,
        arg: Binder,
        annot: FnAnnot,
        body: Arc<Expr>,
    },
    App(Arc<Expr>, Arc<Expr>),
    BinOp(BinOpKind, Arc<Expr>, Arc<Expr>),
    If(Arc<Expr>, Arc<Expr>, Arc<Expr>),
    Pair(Arc<Expr>, Arc<Expr>),
    Fst(Arc<Expr>),
    Snd(Arc<Expr>),
    InjL(Arc<Expr>),
    InjR(Arc<Expr>),
    Match {
        scrut: Arc<Expr>,
        lbind: Binder,
        larm: Arc<Expr>,
        rbind: Binder,
        rarm: Arc<Expr>,
    },
    Fork(Arc<Expr>),
    Ref(Arc<Expr>),
    Load(Arc<Expr>),
    Store(Arc<Expr>, Arc<Expr>),
    Cas(Arc<Expr>, Arc<Expr>, Arc<Expr>),
    Faa(Arc<Expr>, Arc<Expr>),
    ArrayMake(Arc<Expr>, Arc<Expr>),
    ArrayGet(Arc<Expr>, Arc<Expr>),
    ArraySet(Arc<Expr>, Arc<Expr>, Arc<Expr>),
}

/// An expression with its source span. Structural equality and hashing
/// ignore the span.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn lit(v: Val) -> Expr {
        Expr::new(ExprKind::Lit(v), Span::DUMMY)
    }

    pub fn unit() -> Expr {
        Expr::lit(Val::Unit)
    }

    pub fn var(name: &str) -> Expr {
        Expr::new(ExprKind::Var(Arc::from(name)), Span::DUMMY)
    }

    /// Is this expression a value, and if so which one? Pairs and
    /// injections of values count as values.
    pub fn as_val(&self) -> Option<Val> {
        match &self.kind {
            ExprKind::Lit(v) => Some(v.clone()),
            ExprKind::Rec {
                fname,
                arg,
                annot,
                body,
            } => Some(Val::RecClos {
                fname: fname.clone(),
                arg: arg.clone(),
                annot: annot.clone(),
                body: body.clone(),
            }),
            ExprKind::Pair(a, b) => Some(Val::Pair(Box::new(a.as_val()?), Box::new(b.as_val()?))),
            ExprKind::InjL(e) => Some(Val::InjL(Box::new(e.as_val()?))),
            ExprKind::InjR(e) => Some(Val::InjR(Box::new(e.as_val()?))),
            _ => None,
        }
    }

    pub fn is_val(&self) -> bool {
        self.as_val().is_some()
    }

    /// Values and variables are the only branch forms admitted by the
    /// flat-branching typing rule.
    pub fn is_val_or_var(&self) -> bool {
        matches!(self.kind, ExprKind::Var(_)) || self.is_val()
    }

    /// Collect the free variables of the expression, descending into
    /// closure bodies stored inside literals.
    pub fn free_vars(&self) -> std::collections::BTreeSet<Name> {
        let mut acc = std::collections::BTreeSet::new();
        let mut bound: Vec<Name> = Vec::new();
        free_vars_rec(self, &mut bound, &mut acc);
        acc
    }
}

impl From<Val> for Expr {
    fn from(v: Val) -> Expr {
        Expr::lit(v)
    }
}

fn bind(b: &Binder, bound: &mut Vec<Name>) -> bool {
    if let Binder::Named(n) = b {
        bound.push(n.clone());
        true
    } else {
        false
    }
}

fn free_vars_val(v: &Val, bound: &mut Vec<Name>, acc: &mut std::collections::BTreeSet<Name>) {
    match v {
        Val::RecClos {
            fname, arg, body, ..
        } => {
            let n = bind(fname, bound) as usize + bind(arg, bound) as usize;
            free_vars_rec(body, bound, acc);
            bound.truncate(bound.len() - n);
        }
        Val::Pair(a, b) => {
            free_vars_val(a, bound, acc);
            free_vars_val(b, bound, acc);
        }
        Val::InjL(v) | Val::InjR(v) => free_vars_val(v, bound, acc),
        _ => {}
    }
}

fn free_vars_rec(e: &Expr, bound: &mut Vec<Name>, acc: &mut std::collections::BTreeSet<Name>) {
    match &e.kind {
        ExprKind::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                acc.insert(x.clone());
            }
        }
        ExprKind::Lit(v) => free_vars_val(v, bound, acc),
        ExprKind::Rec {
            fname, arg, body, ..
        } => {
            let n = bind(fname, bound) as usize + bind(arg, bound) as usize;
            free_vars_rec(body, bound, acc);
            bound.truncate(bound.len() - n);
        }
        ExprKind::App(a, b)
        | ExprKind::BinOp(_, a, b)
        | ExprKind::Pair(a, b)
        | ExprKind::Store(a, b)
        | ExprKind::Faa(a, b)
        | ExprKind::ArrayMake(a, b)
        | ExprKind::ArrayGet(a, b) => {
            free_vars_rec(a, bound, acc);
            free_vars_rec(b, bound, acc);
        }
        ExprKind::If(a, b, c)
        | ExprKind::Cas(a, b, c)
        | ExprKind::ArraySet(a, b, c) => {
            free_vars_rec(a, bound, acc);
            free_vars_rec(b, bound, acc);
            free_vars_rec(c, bound, acc);
        }
        ExprKind::Fst(a)
        | ExprKind::Snd(a)
        | ExprKind::InjL(a)
        | ExprKind::InjR(a)
        | ExprKind::Fork(a)
        | ExprKind::Ref(a)
        | ExprKind::Load(a) => free_vars_rec(a, bound, acc),
        ExprKind::Match {
            scrut,
            lbind,
            larm,
            rbind,
            rarm,
        } => {
            free_vars_rec(scrut, bound, acc);
            let n = bind(lbind, bound) as usize;
            free_vars_rec(larm, bound, acc);
            bound.truncate(bound.len() - n);
            let n = bind(rbind, bound) as usize;
            free_vars_rec(rarm, bound, acc);
            bound.truncate(bound.len() - n);
        }
    }
}
