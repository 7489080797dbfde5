//! Capture-avoiding substitution of values for free variables.
//!
//! Only closed values are ever substituted (inputs, output locations and
//! linked definitions), so substitution never needs to rename binders; it
//! only has to respect shadowing.

use super::ast::{Binder, Expr, ExprKind, Val};
use std::sync::Arc;

/// Substitute `v` for every free occurrence of `x` in `e`. Binders named
/// `x` shadow: substitution does not descend under them. Closure bodies
/// stored inside literal values are rewritten as well, since linked
/// definitions may mention outputs or high inputs.
pub fn subst(e: &Expr, x: &str, v: &Val) -> Expr {
    match &e.kind {
        ExprKind::Var(name) => {
            if name.as_ref() == x {
                Expr::new(ExprKind::Lit(v.clone()), e.span)
            } else {
                e.clone()
            }
        }
        ExprKind::Lit(inner) => Expr::new(ExprKind::Lit(subst_val(inner, x, v)), e.span),
        ExprKind::Rec {
            fname,
            arg,
            annot,
            body,
        } => {
            if fname.matches(x) || arg.matches(x) {
                e.clone()
            } else {
                Expr::new(
                    ExprKind::Rec {
                        fname: fname.clone(),
                        arg: arg.clone(),
                        annot: annot.clone(),
                        body: go(body, x, v),
                    },
                    e.span,
                )
            }
        }
        ExprKind::App(a, b) => Expr::new(ExprKind::App(go(a, x, v), go(b, x, v)), e.span),
        ExprKind::BinOp(op, a, b) => {
            Expr::new(ExprKind::BinOp(*op, go(a, x, v), go(b, x, v)), e.span)
        }
        ExprKind::If(c, t, f) => {
            Expr::new(ExprKind::If(go(c, x, v), go(t, x, v), go(f, x, v)), e.span)
        }
        ExprKind::Pair(a, b) => Expr::new(ExprKind::Pair(go(a, x, v), go(b, x, v)), e.span),
        ExprKind::Fst(a) => Expr::new(ExprKind::Fst(go(a, x, v)), e.span),
        ExprKind::Snd(a) => Expr::new(ExprKind::Snd(go(a, x, v)), e.span),
        ExprKind::InjL(a) => Expr::new(ExprKind::InjL(go(a, x, v)), e.span),
        ExprKind::InjR(a) => Expr::new(ExprKind::InjR(go(a, x, v)), e.span),
        ExprKind::Match {
            scrut,
            lbind,
            larm,
            rbind,
            rarm,
        } => {
            let larm2 = if lbind.matches(x) {
                larm.clone()
            } else {
                go(larm, x, v)
            };
            let rarm2 = if rbind.matches(x) {
                rarm.clone()
            } else {
                go(rarm, x, v)
            };
            Expr::new(
                ExprKind::Match {
                    scrut: go(scrut, x, v),
                    lbind: lbind.clone(),
                    larm: larm2,
                    rbind: rbind.clone(),
                    rarm: rarm2,
                },
                e.span,
            )
        }
        ExprKind::Fork(a) => Expr::new(ExprKind::Fork(go(a, x, v)), e.span),
        ExprKind::Ref(a) => Expr::new(ExprKind::Ref(go(a, x, v)), e.span),
        ExprKind::Load(a) => Expr::new(ExprKind::Load(go(a, x, v)), e.span),
        ExprKind::Store(a, b) => Expr::new(ExprKind::Store(go(a, x, v), go(b, x, v)), e.span),
        ExprKind::Cas(a, b, c) => Expr::new(
            ExprKind::Cas(go(a, x, v), go(b, x, v), go(c, x, v)),
            e.span,
        ),
        ExprKind::Faa(a, b) => Expr::new(ExprKind::Faa(go(a, x, v), go(b, x, v)), e.span),
        ExprKind::ArrayMake(a, b) => {
            Expr::new(ExprKind::ArrayMake(go(a, x, v), go(b, x, v)), e.span)
        }
        ExprKind::ArrayGet(a, b) => {
            Expr::new(ExprKind::ArrayGet(go(a, x, v), go(b, x, v)), e.span)
        }
        ExprKind::ArraySet(a, b, c) => Expr::new(
            ExprKind::ArraySet(go(a, x, v), go(b, x, v), go(c, x, v)),
            e.span,
        ),
    }
}

fn go(e: &Arc<Expr>, x: &str, v: &Val) -> Arc<Expr> {
    Arc::new(subst(e, x, v))
}

fn subst_val(inner: &Val, x: &str, v: &Val) -> Val {
    match inner {
        Val::RecClos {
            fname,
            arg,
            annot,
            body,
        } => {
            if fname.matches(x) || arg.matches(x) {
                inner.clone()
            } else {
                Val::RecClos {
                    fname: fname.clone(),
                    arg: arg.clone(),
                    annot: annot.clone(),
                    body: go(body, x, v),
                }
            }
        }
        Val::Pair(a, b) => Val::Pair(
            Box::new(subst_val(a, x, v)),
            Box::new(subst_val(b, x, v)),
        ),
        Val::InjL(a) => Val::InjL(Box::new(subst_val(a, x, v))),
        Val::InjR(a) => Val::InjR(Box::new(subst_val(a, x, v))),
        _ => inner.clone(),
    }
}

/// Substitute under a binder: no-op when the binder shadows the variable.
pub fn subst_binder(e: &Expr, b: &Binder, v: &Val) -> Expr {
    match b {
        Binder::Anon => e.clone(),
        Binder::Named(n) => subst(e, n, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::FnAnnot;

    #[test]
    fn identity_case() {
        let e = Expr::var("h");
        assert_eq!(subst(&e, "h", &Val::Int(3)), Expr::lit(Val::Int(3)));
    }

    #[test]
    fn shadowing_stops_substitution() {
        // rec _ h => h
        let e = Expr::new(
            ExprKind::Rec {
                fname: Binder::Anon,
                arg: Binder::named("h"),
                annot: FnAnnot::NONE,
                body: Arc::new(Expr::var("h")),
            },
            crate::lang::ast::Span::DUMMY,
        );
        assert_eq!(subst(&e, "h", &Val::Int(3)), e);
    }

    #[test]
    fn structural_case() {
        // out <- h  with h := 7
        let e = Expr::new(
            ExprKind::Store(Arc::new(Expr::var("out")), Arc::new(Expr::var("h"))),
            crate::lang::ast::Span::DUMMY,
        );
        let expected = Expr::new(
            ExprKind::Store(
                Arc::new(Expr::var("out")),
                Arc::new(Expr::lit(Val::Int(7))),
            ),
            crate::lang::ast::Span::DUMMY,
        );
        assert_eq!(subst(&e, "h", &Val::Int(7)), expected);
    }
}
