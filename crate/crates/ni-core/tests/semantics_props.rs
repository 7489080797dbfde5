//! Property tests for the language and semantics invariants: determinism
//! of thread-local steps, oracle freshness, fill/decompose inversion,
//! substitution shadowing, and pool monotonicity.

use ni_core::lang::ast::{BinOpKind, Binder, Expr, ExprKind, FnAnnot, Span, Val};
use ni_core::lang::ctx::{decompose, fill, Decomposition, Frame};
use ni_core::lang::subst::subst;
use ni_core::semantics::step::{pool_step, thread_step, Config, PoolOutcome, StepResult};
use ni_core::semantics::Heap;
use proptest::prelude::*;
use std::sync::Arc;

const CASES: u32 = 1000;

fn arb_val() -> impl Strategy<Value = Val> {
    prop_oneof![
        Just(Val::Unit),
        (-8i64..8).prop_map(Val::Int),
        any::<bool>().prop_map(Val::Bool),
        (0u64..4).prop_map(Val::Loc),
    ]
}

fn var_name() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("x"), Just("y"), Just("h"), Just("out")]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_val().prop_map(Expr::lit),
        var_name().prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 48, 3, |inner| {
        let e = move || inner.clone().prop_map(Arc::new);
        prop_oneof![
            (e(), e()).prop_map(|(a, b)| Expr::new(ExprKind::App(a, b), Span::DUMMY)),
            (
                prop_oneof![
                    Just(BinOpKind::Add),
                    Just(BinOpKind::Sub),
                    Just(BinOpKind::Mul),
                    Just(BinOpKind::Eq),
                    Just(BinOpKind::Lt),
                    Just(BinOpKind::And),
                    Just(BinOpKind::Or)
                ],
                e(),
                e()
            )
                .prop_map(|(op, a, b)| Expr::new(ExprKind::BinOp(op, a, b), Span::DUMMY)),
            (e(), e(), e())
                .prop_map(|(c, t, f)| Expr::new(ExprKind::If(c, t, f), Span::DUMMY)),
            (e(), e()).prop_map(|(a, b)| Expr::new(ExprKind::Pair(a, b), Span::DUMMY)),
            e().prop_map(|a| Expr::new(ExprKind::Fst(a), Span::DUMMY)),
            e().prop_map(|a| Expr::new(ExprKind::Snd(a), Span::DUMMY)),
            e().prop_map(|a| Expr::new(ExprKind::InjL(a), Span::DUMMY)),
            e().prop_map(|a| Expr::new(ExprKind::InjR(a), Span::DUMMY)),
            (var_name(), e(), e()).prop_map(|(x, s, arm)| Expr::new(
                ExprKind::Match {
                    scrut: s,
                    lbind: Binder::named(x),
                    larm: arm.clone(),
                    rbind: Binder::named(x),
                    rarm: arm,
                },
                Span::DUMMY
            )),
            e().prop_map(|a| Expr::new(ExprKind::Fork(a), Span::DUMMY)),
            e().prop_map(|a| Expr::new(ExprKind::Ref(a), Span::DUMMY)),
            e().prop_map(|a| Expr::new(ExprKind::Load(a), Span::DUMMY)),
            (e(), e()).prop_map(|(a, b)| Expr::new(ExprKind::Store(a, b), Span::DUMMY)),
            (e(), e(), e())
                .prop_map(|(a, b, c)| Expr::new(ExprKind::Cas(a, b, c), Span::DUMMY)),
            (e(), e()).prop_map(|(a, b)| Expr::new(ExprKind::Faa(a, b), Span::DUMMY)),
            (var_name(), var_name(), e()).prop_map(|(f, x, body)| Expr::new(
                ExprKind::Rec {
                    fname: Binder::named(f),
                    arg: Binder::named(x),
                    annot: FnAnnot::NONE,
                    body,
                },
                Span::DUMMY
            )),
        ]
    })
}

fn arb_heap() -> impl Strategy<Value = Heap> {
    proptest::collection::btree_map(0u64..16, arb_val(), 0..8).prop_map(|m| {
        let mut h = Heap::new();
        for (k, v) in m {
            h.insert(k, v);
        }
        h
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    // Thread-local determinism: stepping the same expression in the same
    // heap always yields the same result.
    #[test]
    fn thread_step_is_deterministic(e in arb_expr(), h in arb_heap()) {
        let a = thread_step(&e, &h);
        let b = thread_step(&e, &h);
        prop_assert_eq!(a, b);
    }

    // Oracle freshness: the allocated location is never in the domain.
    #[test]
    fn oracle_allocates_fresh_locations(h in arb_heap()) {
        prop_assert!(!h.contains(h.alloc_oracle()));
        for n in 1u64..4 {
            let base = h.alloc_block(n);
            for i in 0..n {
                prop_assert!(!h.contains(base + i));
            }
        }
    }

    // fill is a left inverse of decompose on non-values.
    #[test]
    fn fill_inverts_decompose(e in arb_expr()) {
        match decompose(&e) {
            Decomposition::AlreadyValue(v) => {
                prop_assert_eq!(e.as_val(), Some(v));
            }
            Decomposition::Redex { ctx, redex } => {
                prop_assert_eq!(fill(&ctx, redex), e);
            }
        }
    }

    // Binders shadow: substituting the bound variable is the identity.
    #[test]
    fn subst_respects_shadowing(body in arb_expr(), v in arb_val()) {
        let e = Expr::new(
            ExprKind::Rec {
                fname: Binder::named("f"),
                arg: Binder::named("x"),
                annot: FnAnnot::NONE,
                body: Arc::new(body),
            },
            Span::DUMMY,
        );
        prop_assert_eq!(subst(&e, "x", &v), e.clone());
        prop_assert_eq!(subst(&e, "f", &v), e);
    }

    // Substitution commutes with plugging a context whose frames do not
    // bind (evaluation contexts never bind).
    #[test]
    fn subst_commutes_with_fill(e in arb_expr(), outer in arb_expr(), v in arb_val()) {
        prop_assume!(outer.as_val().is_none());
        if let Decomposition::Redex { ctx, .. } = decompose(&outer) {
            let filled_then_subst = subst(&fill(&ctx, e.clone()), "x", &v);
            let subst_then_filled = fill(&subst_ctx(&ctx, &v), subst(&e, "x", &v));
            prop_assert_eq!(filled_then_subst, subst_then_filled);
        }
    }

    // Pool steps never shorten the thread list and never touch other
    // positions except by appending forked threads.
    #[test]
    fn pool_step_is_monotone(e in arb_expr(), h in arb_heap()) {
        let c = Config { threads: vec![Expr::lit(Val::Int(1)), e, Expr::lit(Val::Unit)], heap: h };
        if let PoolOutcome::Next(c2) = pool_step(&c, 1) {
            prop_assert!(c2.threads.len() >= c.threads.len());
            prop_assert_eq!(&c2.threads[0], &c.threads[0]);
            prop_assert_eq!(&c2.threads[2], &c.threads[2]);
        }
    }

    // A step changes exactly the selected thread (plus appends), and a
    // fork appends at most one thread.
    #[test]
    fn at_most_one_fork_per_step(e in arb_expr(), h in arb_heap()) {
        if let StepResult::Stepped { forked, .. } = thread_step(&e, &h) {
            prop_assert!(forked.len() <= 1);
        }
    }
}

/// Substitute in every expression held by the context's frames.
fn subst_ctx(ctx: &[Frame], v: &Val) -> Vec<Frame> {
    ctx.iter().map(|f| subst_frame(f, v)).collect()
}

fn subst_frame(f: &Frame, v: &Val) -> Frame {
    let s = |e: &Arc<Expr>| Arc::new(subst(e, "x", v));
    match f {
        Frame::AppFun { arg } => Frame::AppFun { arg: s(arg) },
        Frame::AppArg { fun } => Frame::AppArg { fun: s(fun) },
        Frame::BinOpL { op, right } => Frame::BinOpL { op: *op, right: s(right) },
        Frame::BinOpR { op, left } => Frame::BinOpR { op: *op, left: s(left) },
        Frame::IfCond { then, els } => Frame::IfCond { then: s(then), els: s(els) },
        Frame::PairL { right } => Frame::PairL { right: s(right) },
        Frame::PairR { left } => Frame::PairR { left: s(left) },
        Frame::Fst => Frame::Fst,
        Frame::Snd => Frame::Snd,
        Frame::InjL => Frame::InjL,
        Frame::InjR => Frame::InjR,
        Frame::MatchScrut { lbind, larm, rbind, rarm } => {
            let larm2 = if lbind.matches("x") { larm.clone() } else { s(larm) };
            let rarm2 = if rbind.matches("x") { rarm.clone() } else { s(rarm) };
            Frame::MatchScrut {
                lbind: lbind.clone(),
                larm: larm2,
                rbind: rbind.clone(),
                rarm: rarm2,
            }
        }
        Frame::Ref => Frame::Ref,
        Frame::Load => Frame::Load,
        Frame::StoreL { val } => Frame::StoreL { val: s(val) },
        Frame::StoreR { loc } => Frame::StoreR { loc: s(loc) },
        Frame::Cas1 { expected, new } => Frame::Cas1 { expected: s(expected), new: s(new) },
        Frame::Cas2 { loc, new } => Frame::Cas2 { loc: s(loc), new: s(new) },
        Frame::Cas3 { loc, expected } => Frame::Cas3 { loc: s(loc), expected: s(expected) },
        Frame::Faa1 { delta } => Frame::Faa1 { delta: s(delta) },
        Frame::Faa2 { loc } => Frame::Faa2 { loc: s(loc) },
        Frame::ArrayMake1 { init } => Frame::ArrayMake1 { init: s(init) },
        Frame::ArrayMake2 { len } => Frame::ArrayMake2 { len: s(len) },
        Frame::ArrayGet1 { index } => Frame::ArrayGet1 { index: s(index) },
        Frame::ArrayGet2 { base } => Frame::ArrayGet2 { base: s(base) },
        Frame::ArraySet1 { index, val } => Frame::ArraySet1 { index: s(index), val: s(val) },
        Frame::ArraySet2 { base, val } => Frame::ArraySet2 { base: s(base), val: s(val) },
        Frame::ArraySet3 { base, index } => Frame::ArraySet3 { base: s(base), index: s(index) },
    }
}

// Desugared lets bind in exactly one beta head step.
#[test]
fn let_of_value_takes_one_beta_step() {
    let e = ni_core::lang::parse_expr("let x = 5 in x + 1").unwrap();
    match thread_step(&e, &Heap::new()) {
        StepResult::Stepped { next, forked, .. } => {
            assert!(forked.is_empty());
            assert_eq!(next, ni_core::lang::parse_expr("5 + 1").unwrap());
        }
        other => panic!("unexpected {other:?}"),
    }
}

// Thread count bookkeeping: replaying a run's schedule, the pool grows
// exactly at fork executions, so final threads = 1 + forks executed.
#[test]
fn fork_count_matches_thread_growth() {
    use ni_core::semantics::{initial_config, run, Scheduler, DEFAULT_FUEL};
    let src = "def rand = fun () => let x = ref true in (fork { x <- false }; !x);\
               main = (rand (); rand ());";
    let p = ni_core::lang::parse_program(src).unwrap();
    let report = run(&p, &Default::default(), &Scheduler::RoundRobin, DEFAULT_FUEL).unwrap();
    let (mut c, _) = initial_config(&p, &Default::default()).unwrap();
    let mut forks = 0;
    for &i in &report.schedule {
        let before = c.threads.len();
        match pool_step(&c, i) {
            PoolOutcome::Next(next) => {
                if next.threads.len() > before {
                    forks += next.threads.len() - before;
                }
                c = next;
            }
            other => panic!("schedule replay failed: {other:?}"),
        }
    }
    assert_eq!(c.threads.len(), 1 + forks);
    assert_eq!(report.threads, c.threads.len());
    assert_eq!(forks, 2);
}
