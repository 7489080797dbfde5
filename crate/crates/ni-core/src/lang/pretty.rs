//! Pretty printer. Output re-parses to a structurally equal program:
//! `let`/`;` are resugared from their application encodings and everything
//! else prints in core syntax with just enough parentheses.

use super::ast::{BinOpKind, Binder, Expr, ExprKind, FnAnnot, Val};
use crate::program::Program;
use std::fmt::Write;

// Precedence levels, loosest to tightest.
const P_EXPR: u8 = 0; // let/fun/rec/if/match/seq
const P_STORE: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_CMP: u8 = 4;
const P_ADD: u8 = 5;
const P_MUL: u8 = 6;
const P_NEG: u8 = 7; // negative literals: bare as operands, wrapped as args
const P_APP: u8 = 7;
const P_UNARY: u8 = 8;
const P_ATOM: u8 = 9;

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    fmt_expr(e, P_EXPR, &mut s);
    s
}

pub fn pretty_val(v: &Val) -> String {
    let mut s = String::new();
    fmt_val(v, P_EXPR, &mut s);
    s
}

pub fn pretty_program(p: &Program) -> String {
    let mut s = String::new();
    for out in &p.outputs {
        let _ = writeln!(s, "output {out};");
    }
    for (name, dom) in &p.highs {
        let items: Vec<String> = dom.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "high {name} : {{{}}};", items.join(","));
    }
    for (name, ty) in &p.externs {
        let _ = writeln!(s, "extern {name} : {ty};");
    }
    for (name, body) in &p.defs {
        let _ = writeln!(s, "def {name} = {};", pretty_expr(body));
    }
    for (name, body) in &p.extern_impls {
        let _ = writeln!(s, "impl {name} = {};", pretty_expr(body));
    }
    let _ = writeln!(s, "main = {};", pretty_expr(&p.main));
    s
}

fn binop_prec(op: BinOpKind) -> u8 {
    match op {
        BinOpKind::Or => P_OR,
        BinOpKind::And => P_AND,
        BinOpKind::Eq | BinOpKind::Lt => P_CMP,
        BinOpKind::Add | BinOpKind::Sub => P_ADD,
        BinOpKind::Mul | BinOpKind::Div => P_MUL,
    }
}

fn paren(prec_needed: u8, level: u8, s: &mut String, inner: impl FnOnce(&mut String)) {
    if level < prec_needed {
        s.push('(');
        inner(s);
        s.push(')');
    } else {
        inner(s);
    }
}

fn fmt_binder_param(b: &Binder, annot: &FnAnnot, s: &mut String) {
    match &annot.arg {
        Some(crate::typesys::SecType::Unit) if *b == Binder::Anon => s.push_str("()"),
        Some(t) => {
            let _ = write!(s, "({b} : {t})");
        }
        None => {
            let _ = write!(s, "{b}");
        }
    }
}

fn fmt_fun(
    fname: &Binder,
    arg: &Binder,
    annot: &FnAnnot,
    body: &Expr,
    prec: u8,
    s: &mut String,
) {
    paren(prec + 1, P_EXPR, s, |s| {
        let needs_rec =
            *fname != Binder::Anon || annot.ret.is_some() || annot.label.is_some();
        if needs_rec {
            let _ = write!(s, "rec {fname} ");
            fmt_binder_param(arg, annot, s);
            if let Some(rt) = &annot.ret {
                let _ = write!(s, " : {rt}");
            }
            if let Some(l) = &annot.label {
                let _ = write!(s, " @ {l}");
            }
        } else {
            s.push_str("fun ");
            fmt_binder_param(arg, annot, s);
        }
        s.push_str(" => ");
        fmt_expr(body, P_EXPR, s);
    });
}

fn fmt_val(v: &Val, prec: u8, s: &mut String) {
    match v {
        Val::Unit => s.push_str("()"),
        Val::Int(n) => {
            if *n < 0 {
                paren(prec + 1, P_NEG, s, |s| {
                    let _ = write!(s, "{n}");
                });
            } else {
                let _ = write!(s, "{n}");
            }
        }
        Val::Bool(b) => {
            let _ = write!(s, "{b}");
        }
        Val::Loc(l) => {
            let _ = write!(s, "#{l}");
        }
        Val::RecClos {
            fname,
            arg,
            annot,
            body,
        } => fmt_fun(fname, arg, annot, body, prec, s),
        Val::Pair(a, b) => {
            s.push('(');
            fmt_val(a, P_EXPR, s);
            s.push_str(", ");
            fmt_val(b, P_EXPR, s);
            s.push(')');
        }
        Val::InjL(v) => paren(prec + 1, P_UNARY, s, |s| {
            s.push_str("inl ");
            fmt_val(v, P_ATOM, s);
        }),
        Val::InjR(v) => paren(prec + 1, P_UNARY, s, |s| {
            s.push_str("inr ");
            fmt_val(v, P_ATOM, s);
        }),
    }
}

fn fmt_expr(e: &Expr, prec: u8, s: &mut String) {
    match &e.kind {
        ExprKind::Var(x) => {
            let _ = write!(s, "{x}");
        }
        ExprKind::Lit(v) => fmt_val(v, prec, s),
        ExprKind::Rec {
            fname,
            arg,
            annot,
            body,
        } => fmt_fun(fname, arg, annot, body, prec, s),
        // resugar `(fun x => body) rhs` as let / seq
        ExprKind::App(f, rhs) => {
            if let ExprKind::Rec {
                fname: Binder::Anon,
                arg,
                annot,
                body,
            } = &f.kind
            {
                if annot.ret.is_none() && annot.label.is_none() {
                    let is_seq = *arg == Binder::Anon && annot.arg.is_none();
                    paren(prec + 1, P_EXPR, s, |s| {
                        if is_seq {
                            fmt_expr(rhs, P_STORE, s);
                            s.push_str("; ");
                            fmt_expr(body, P_EXPR, s);
                        } else {
                            s.push_str("let ");
                            fmt_binder_param(arg, annot, s);
                            s.push_str(" = ");
                            fmt_expr(rhs, P_STORE, s);
                            s.push_str(" in ");
                            fmt_expr(body, P_EXPR, s);
                        }
                    });
                    return;
                }
            }
            paren(prec + 1, P_APP, s, |s| {
                fmt_expr(f, P_APP, s);
                s.push(' ');
                fmt_expr(rhs, P_UNARY, s);
            });
        }
        ExprKind::BinOp(op, l, r) => {
            let p = binop_prec(*op);
            // comparisons are non-associative: operands print one level up
            let (lp, rp) = if p == P_CMP { (p + 1, p + 1) } else { (p, p + 1) };
            paren(prec + 1, p, s, |s| {
                fmt_expr(l, lp, s);
                let _ = write!(s, " {} ", op.symbol());
                fmt_expr(r, rp, s);
            });
        }
        ExprKind::If(c, t, f) => paren(prec + 1, P_EXPR, s, |s| {
            s.push_str("if ");
            fmt_expr(c, P_STORE, s);
            s.push_str(" then ");
            fmt_expr(t, P_STORE, s);
            s.push_str(" else ");
            fmt_expr(f, P_EXPR, s);
        }),
        ExprKind::Pair(a, b) => {
            s.push('(');
            fmt_expr(a, P_EXPR, s);
            s.push_str(", ");
            fmt_expr(b, P_EXPR, s);
            s.push(')');
        }
        ExprKind::Fst(a) => un(s, prec, "fst ", a),
        ExprKind::Snd(a) => un(s, prec, "snd ", a),
        ExprKind::InjL(a) => un(s, prec, "inl ", a),
        ExprKind::InjR(a) => un(s, prec, "inr ", a),
        ExprKind::Load(a) => un(s, prec, "!", a),
        ExprKind::Ref(a) => un(s, prec, "ref ", a),
        ExprKind::Match {
            scrut,
            lbind,
            larm,
            rbind,
            rarm,
        } => paren(prec + 1, P_EXPR, s, |s| {
            s.push_str("match ");
            fmt_expr(scrut, P_STORE, s);
            let _ = write!(s, " with inl {lbind} => ");
            fmt_expr(larm, P_STORE, s);
            let _ = write!(s, " | inr {rbind} => ");
            fmt_expr(rarm, P_STORE, s);
            s.push_str(" end");
        }),
        ExprKind::Fork(a) => {
            s.push_str("fork { ");
            fmt_expr(a, P_EXPR, s);
            s.push_str(" }");
        }
        ExprKind::Store(l, r) => paren(prec + 1, P_STORE, s, |s| {
            fmt_expr(l, P_OR, s);
            s.push_str(" <- ");
            fmt_expr(r, P_OR, s);
        }),
        ExprKind::Cas(a, b, c) => call3(s, "cas", a, b, c),
        ExprKind::Faa(a, b) => call2(s, "faa", a, b),
        ExprKind::ArrayMake(a, b) => call2(s, "array_make", a, b),
        ExprKind::ArrayGet(a, b) => call2(s, "array_get", a, b),
        ExprKind::ArraySet(a, b, c) => call3(s, "array_set", a, b, c),
    }
}

fn un(s: &mut String, prec: u8, op: &str, a: &Expr) {
    paren(prec + 1, P_UNARY, s, |s| {
        s.push_str(op);
        fmt_expr(a, P_UNARY, s);
    });
}

fn call2(s: &mut String, name: &str, a: &Expr, b: &Expr) {
    let _ = write!(s, "{name}(");
    fmt_expr(a, P_EXPR, s);
    s.push_str(", ");
    fmt_expr(b, P_EXPR, s);
    s.push(')');
}

fn call3(s: &mut String, name: &str, a: &Expr, b: &Expr, c: &Expr) {
    let _ = write!(s, "{name}(");
    fmt_expr(a, P_EXPR, s);
    s.push_str(", ");
    fmt_expr(b, P_EXPR, s);
    s.push_str(", ");
    fmt_expr(c, P_EXPR, s);
    s.push(')');
}
