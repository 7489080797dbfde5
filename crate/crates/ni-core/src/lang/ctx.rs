//! Call-by-value evaluation contexts and unique decomposition.
//!
//! Within every construct the components are evaluated right to left, so in
//! an application the argument is evaluated before the function, matching
//! the context grammar `K(v) | e(K)`. `fork` bodies are not evaluation
//! positions: a `fork` with its context is itself the redex.
//!
//! Frames hold the surrounding expressions verbatim (already-evaluated
//! positions are value expressions), so `fill` restores the decomposed
//! term exactly.

use super::ast::{BinOpKind, Binder, Expr, ExprKind, Val};
use std::sync::Arc;

/// A single evaluation frame; the name records where the hole sits.
/// Positions to the right of the hole are value expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// `• v` — hole in function position, argument already a value.
    AppFun { arg: Arc<Expr> },
    /// `e (•)` — hole in argument position.
    AppArg { fun: Arc<Expr> },
    /// `• op v`
    BinOpL { op: BinOpKind, right: Arc<Expr> },
    /// `e op •`
    BinOpR { op: BinOpKind, left: Arc<Expr> },
    /// `if • then e1 else e2`
    IfCond { then: Arc<Expr>, els: Arc<Expr> },
    /// `(•, v)`
    PairL { right: Arc<Expr> },
    /// `(e, •)`
    PairR { left: Arc<Expr> },
    Fst,
    Snd,
    InjL,
    InjR,
    MatchScrut {
        lbind: Binder,
        larm: Arc<Expr>,
        rbind: Binder,
        rarm: Arc<Expr>,
    },
    Ref,
    Load,
    /// `• <- v`
    StoreL { val: Arc<Expr> },
    /// `e <- •`
    StoreR { loc: Arc<Expr> },
    /// `cas(•, v2, v3)`
    Cas1 { expected: Arc<Expr>, new: Arc<Expr> },
    /// `cas(e1, •, v3)`
    Cas2 { loc: Arc<Expr>, new: Arc<Expr> },
    /// `cas(e1, e2, •)`
    Cas3 { loc: Arc<Expr>, expected: Arc<Expr> },
    /// `faa(•, v)`
    Faa1 { delta: Arc<Expr> },
    /// `faa(e, •)`
    Faa2 { loc: Arc<Expr> },
    ArrayMake1 { init: Arc<Expr> },
    ArrayMake2 { len: Arc<Expr> },
    ArrayGet1 { index: Arc<Expr> },
    ArrayGet2 { base: Arc<Expr> },
    ArraySet1 { index: Arc<Expr>, val: Arc<Expr> },
    ArraySet2 { base: Arc<Expr>, val: Arc<Expr> },
    ArraySet3 { base: Arc<Expr>, index: Arc<Expr> },
}

/// An evaluation context: a stack of frames, outermost first.
pub type EvalCtx = Vec<Frame>;

/// Plug an expression into a single frame.
fn plug(frame: &Frame, e: Expr) -> Expr {
    let hole = Arc::new(e);
    let kind = match frame {
        Frame::AppFun { arg } => ExprKind::App(hole, arg.clone()),
        Frame::AppArg { fun } => ExprKind::App(fun.clone(), hole),
        Frame::BinOpL { op, right } => ExprKind::BinOp(*op, hole, right.clone()),
        Frame::BinOpR { op, left } => ExprKind::BinOp(*op, left.clone(), hole),
        Frame::IfCond { then, els } => ExprKind::If(hole, then.clone(), els.clone()),
        Frame::PairL { right } => ExprKind::Pair(hole, right.clone()),
        Frame::PairR { left } => ExprKind::Pair(left.clone(), hole),
        Frame::Fst => ExprKind::Fst(hole),
        Frame::Snd => ExprKind::Snd(hole),
        Frame::InjL => ExprKind::InjL(hole),
        Frame::InjR => ExprKind::InjR(hole),
        Frame::MatchScrut {
            lbind,
            larm,
            rbind,
            rarm,
        } => ExprKind::Match {
            scrut: hole,
            lbind: lbind.clone(),
            larm: larm.clone(),
            rbind: rbind.clone(),
            rarm: rarm.clone(),
        },
        Frame::Ref => ExprKind::Ref(hole),
        Frame::Load => ExprKind::Load(hole),
        Frame::StoreL { val } => ExprKind::Store(hole, val.clone()),
        Frame::StoreR { loc } => ExprKind::Store(loc.clone(), hole),
        Frame::Cas1 { expected, new } => ExprKind::Cas(hole, expected.clone(), new.clone()),
        Frame::Cas2 { loc, new } => ExprKind::Cas(loc.clone(), hole, new.clone()),
        Frame::Cas3 { loc, expected } => ExprKind::Cas(loc.clone(), expected.clone(), hole),
        Frame::Faa1 { delta } => ExprKind::Faa(hole, delta.clone()),
        Frame::Faa2 { loc } => ExprKind::Faa(loc.clone(), hole),
        Frame::ArrayMake1 { init } => ExprKind::ArrayMake(hole, init.clone()),
        Frame::ArrayMake2 { len } => ExprKind::ArrayMake(len.clone(), hole),
        Frame::ArrayGet1 { index } => ExprKind::ArrayGet(hole, index.clone()),
        Frame::ArrayGet2 { base } => ExprKind::ArrayGet(base.clone(), hole),
        Frame::ArraySet1 { index, val } => {
            ExprKind::ArraySet(hole, index.clone(), val.clone())
        }
        Frame::ArraySet2 { base, val } => ExprKind::ArraySet(base.clone(), hole, val.clone()),
        Frame::ArraySet3 { base, index } => {
            ExprKind::ArraySet(base.clone(), index.clone(), hole)
        }
    };
    Expr::new(kind, crate::lang::ast::Span::DUMMY)
}

/// Fill a context with an expression: total.
pub fn fill(ctx: &EvalCtx, e: Expr) -> Expr {
    ctx.iter().rev().fold(e, |acc, frame| plug(frame, acc))
}

/// Result of decomposing an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    /// The expression is already a value.
    AlreadyValue(Val),
    /// `fill(ctx, redex)` equals the input and `redex` is the next
    /// reduction position (a head-redex candidate or a `fork`).
    Redex { ctx: EvalCtx, redex: Expr },
}

/// Decompose an expression into its unique evaluation context and redex.
/// Head-stuck redexes (e.g. `1 2`) are still returned as redexes; the
/// failure surfaces when the head step is attempted.
pub fn decompose(e: &Expr) -> Decomposition {
    if let Some(v) = e.as_val() {
        return Decomposition::AlreadyValue(v);
    }
    let mut ctx = Vec::new();
    let redex = descend(e, &mut ctx);
    Decomposition::Redex { ctx, redex }
}

/// Walk to the redex, pushing frames. Precondition: `e` is not a value.
fn descend(e: &Expr, ctx: &mut EvalCtx) -> Expr {
    macro_rules! try_pos {
        // Try to descend into $sub; if it is not a value, push $frame.
        ($sub:expr, $frame:expr) => {
            if $sub.as_val().is_none() {
                ctx.push($frame);
                return descend($sub, ctx);
            }
        };
    }
    match &e.kind {
        // Values and variables have no decomposition below themselves.
        ExprKind::Var(_) | ExprKind::Lit(_) | ExprKind::Rec { .. } => e.clone(),
        // fork is a redex; its body is not an evaluation position.
        ExprKind::Fork(_) => e.clone(),
        ExprKind::App(f, a) => {
            try_pos!(a, Frame::AppArg { fun: f.clone() });
            try_pos!(f, Frame::AppFun { arg: a.clone() });
            e.clone()
        }
        ExprKind::BinOp(op, l, r) => {
            try_pos!(r, Frame::BinOpR { op: *op, left: l.clone() });
            try_pos!(l, Frame::BinOpL { op: *op, right: r.clone() });
            e.clone()
        }
        ExprKind::If(c, t, f) => {
            try_pos!(c, Frame::IfCond { then: t.clone(), els: f.clone() });
            e.clone()
        }
        ExprKind::Pair(a, b) => {
            try_pos!(b, Frame::PairR { left: a.clone() });
            try_pos!(a, Frame::PairL { right: b.clone() });
            unreachable!("pair of values is a value")
        }
        ExprKind::Fst(a) => {
            try_pos!(a, Frame::Fst);
            e.clone()
        }
        ExprKind::Snd(a) => {
            try_pos!(a, Frame::Snd);
            e.clone()
        }
        ExprKind::InjL(a) => {
            try_pos!(a, Frame::InjL);
            unreachable!("inl of a value is a value")
        }
        ExprKind::InjR(a) => {
            try_pos!(a, Frame::InjR);
            unreachable!("inr of a value is a value")
        }
        ExprKind::Match {
            scrut,
            lbind,
            larm,
            rbind,
            rarm,
        } => {
            try_pos!(
                scrut,
                Frame::MatchScrut {
                    lbind: lbind.clone(),
                    larm: larm.clone(),
                    rbind: rbind.clone(),
                    rarm: rarm.clone(),
                }
            );
            e.clone()
        }
        ExprKind::Ref(a) => {
            try_pos!(a, Frame::Ref);
            e.clone()
        }
        ExprKind::Load(a) => {
            try_pos!(a, Frame::Load);
            e.clone()
        }
        ExprKind::Store(l, r) => {
            try_pos!(r, Frame::StoreR { loc: l.clone() });
            try_pos!(l, Frame::StoreL { val: r.clone() });
            e.clone()
        }
        ExprKind::Cas(l, x, n) => {
            try_pos!(n, Frame::Cas3 { loc: l.clone(), expected: x.clone() });
            try_pos!(x, Frame::Cas2 { loc: l.clone(), new: n.clone() });
            try_pos!(l, Frame::Cas1 { expected: x.clone(), new: n.clone() });
            e.clone()
        }
        ExprKind::Faa(l, d) => {
            try_pos!(d, Frame::Faa2 { loc: l.clone() });
            try_pos!(l, Frame::Faa1 { delta: d.clone() });
            e.clone()
        }
        ExprKind::ArrayMake(n, i) => {
            try_pos!(i, Frame::ArrayMake2 { len: n.clone() });
            try_pos!(n, Frame::ArrayMake1 { init: i.clone() });
            e.clone()
        }
        ExprKind::ArrayGet(b, ix) => {
            try_pos!(ix, Frame::ArrayGet2 { base: b.clone() });
            try_pos!(b, Frame::ArrayGet1 { index: ix.clone() });
            e.clone()
        }
        ExprKind::ArraySet(b, ix, v) => {
            try_pos!(v, Frame::ArraySet3 { base: b.clone(), index: ix.clone() });
            try_pos!(ix, Frame::ArraySet2 { base: b.clone(), val: v.clone() });
            try_pos!(b, Frame::ArraySet1 { index: ix.clone(), val: v.clone() });
            e.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::Span;

    fn int(n: i64) -> Arc<Expr> {
        Arc::new(Expr::lit(Val::Int(n)))
    }

    #[test]
    fn rightmost_unevaluated_subterm() {
        // #0 <- (1 + 1): redex is the addition under a store frame
        let sum = Expr::new(ExprKind::BinOp(BinOpKind::Add, int(1), int(1)), Span::DUMMY);
        let e = Expr::new(
            ExprKind::Store(Arc::new(Expr::lit(Val::Loc(0))), Arc::new(sum.clone())),
            Span::DUMMY,
        );
        match decompose(&e) {
            Decomposition::Redex { ctx, redex } => {
                assert_eq!(redex, sum);
                assert_eq!(ctx.len(), 1);
                assert_eq!(fill(&ctx, redex), e);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn value_has_no_decomposition() {
        assert_eq!(
            decompose(&Expr::lit(Val::Int(5))),
            Decomposition::AlreadyValue(Val::Int(5))
        );
    }

    #[test]
    fn beta_redex_at_top() {
        // (rec f x => x) 2 decomposes with the empty context
        let f = Expr::new(
            ExprKind::Rec {
                fname: Binder::named("f"),
                arg: Binder::named("x"),
                annot: crate::lang::ast::FnAnnot::NONE,
                body: Arc::new(Expr::var("x")),
            },
            Span::DUMMY,
        );
        let e = Expr::new(ExprKind::App(Arc::new(f), int(2)), Span::DUMMY);
        match decompose(&e) {
            Decomposition::Redex { ctx, redex } => {
                assert!(ctx.is_empty());
                assert_eq!(redex, e);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn argument_evaluated_before_function() {
        // (1 + 1) (2 + 2): the argument addition is the redex
        let lf = Expr::new(ExprKind::BinOp(BinOpKind::Add, int(1), int(1)), Span::DUMMY);
        let rf = Expr::new(ExprKind::BinOp(BinOpKind::Add, int(2), int(2)), Span::DUMMY);
        let e = Expr::new(
            ExprKind::App(Arc::new(lf), Arc::new(rf.clone())),
            Span::DUMMY,
        );
        match decompose(&e) {
            Decomposition::Redex { redex, .. } => assert_eq!(redex, rf),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fill_preserves_value_expression_forms() {
        // (() ()) + (inl ()): the evaluated right side is an injection
        // written as an expression, and fill must restore it verbatim
        let app = Expr::new(
            ExprKind::App(
                Arc::new(Expr::lit(Val::Unit)),
                Arc::new(Expr::lit(Val::Unit)),
            ),
            Span::DUMMY,
        );
        let inj = Expr::new(
            ExprKind::InjL(Arc::new(Expr::lit(Val::Unit))),
            Span::DUMMY,
        );
        let e = Expr::new(
            ExprKind::BinOp(BinOpKind::Add, Arc::new(app.clone()), Arc::new(inj)),
            Span::DUMMY,
        );
        match decompose(&e) {
            Decomposition::Redex { ctx, redex } => {
                assert_eq!(redex, app);
                assert_eq!(fill(&ctx, redex), e);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
