//! Deterministic thread-local small-step semantics and the thread-pool
//! step. Head reduction is a partial function; failures surface as `Stuck`
//! so that unsafe programs are observably unsafe.

use super::heap::Heap;
use crate::lang::ast::{BinOpKind, Expr, ExprKind, Val};
use crate::lang::ctx::{decompose, fill, Decomposition};
use crate::lang::subst::subst_binder;

/// Outcome of a thread-local step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepResult {
    Stepped {
        next: Expr,
        forked: Vec<Expr>,
        heap: Heap,
    },
    IsValue,
    Stuck(String),
}

/// A configuration: the thread pool (index 0 is the main thread) and the
/// shared heap. Terminated threads remain in the pool as values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    pub threads: Vec<Expr>,
    pub heap: Heap,
}

impl Config {
    pub fn initial(main: Expr, heap: Heap) -> Config {
        Config {
            threads: vec![main],
            heap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PoolOutcome {
    Next(Config),
    /// The selected thread is a value.
    NotReducible,
    Stuck(String),
}

/// One head-reduction step, excluding `fork` (handled at thread level).
/// `Err` is "no head step": a side condition failed.
pub fn head_step(e: &Expr, heap: &Heap) -> Result<(Expr, Heap), String> {
    let val = |x: &std::sync::Arc<Expr>| x.as_val().expect("redex subterms are values");
    match &e.kind {
        ExprKind::App(f, a) => {
            let fv = val(f);
            let Val::RecClos {
                fname,
                arg,
                body,
                ..
            } = &fv
            else {
                return Err(format!(
                    "applied a non-function value `{}`",
                    crate::lang::pretty_val(&fv)
                ));
            };
            let with_f = subst_binder(body, fname, &fv);
            let next = subst_binder(&with_f, arg, &val(a));
            Ok((next, heap.clone()))
        }
        ExprKind::BinOp(op, l, r) => {
            let v = binop_eval(*op, &val(l), &val(r))?;
            Ok((Expr::lit(v), heap.clone()))
        }
        ExprKind::If(c, t, f) => match val(c) {
            Val::Bool(true) => Ok(((**t).clone(), heap.clone())),
            Val::Bool(false) => Ok(((**f).clone(), heap.clone())),
            other => Err(format!(
                "if-condition is not a boolean: `{}`",
                crate::lang::pretty_val(&other)
            )),
        },
        ExprKind::Fst(p) => match val(p) {
            Val::Pair(a, _) => Ok((Expr::lit(*a), heap.clone())),
            other => Err(format!(
                "fst of a non-pair `{}`",
                crate::lang::pretty_val(&other)
            )),
        },
        ExprKind::Snd(p) => match val(p) {
            Val::Pair(_, b) => Ok((Expr::lit(*b), heap.clone())),
            other => Err(format!(
                "snd of a non-pair `{}`",
                crate::lang::pretty_val(&other)
            )),
        },
        ExprKind::Match {
            scrut,
            lbind,
            larm,
            rbind,
            rarm,
        } => match val(scrut) {
            Val::InjL(v) => Ok((subst_binder(larm, lbind, &v), heap.clone())),
            Val::InjR(v) => Ok((subst_binder(rarm, rbind, &v), heap.clone())),
            other => Err(format!(
                "match on a non-sum `{}`",
                crate::lang::pretty_val(&other)
            )),
        },
        ExprKind::Ref(init) => {
            let l = heap.alloc_oracle();
            let mut heap = heap.clone();
            heap.insert(l, val(init));
            Ok((Expr::lit(Val::Loc(l)), heap))
        }
        ExprKind::Load(loc) => {
            let l = loc_of(&val(loc))?;
            match heap.get(l) {
                Some(v) => Ok((Expr::lit(v.clone()), heap.clone())),
                None => Err(format!("load of unallocated location #{l}")),
            }
        }
        ExprKind::Store(loc, v) => {
            let l = loc_of(&val(loc))?;
            if !heap.contains(l) {
                return Err(format!("store to unallocated location #{l}"));
            }
            let mut heap = heap.clone();
            heap.insert(l, val(v));
            Ok((Expr::lit(Val::Unit), heap))
        }
        ExprKind::Cas(loc, expected, new) => {
            let l = loc_of(&val(loc))?;
            let Some(current) = heap.get(l).cloned() else {
                return Err(format!("cas on unallocated location #{l}"));
            };
            let expected = val(expected);
            if !current.is_unboxed() || !expected.is_unboxed() {
                return Err("cas compares only unboxed values".into());
            }
            if current == expected {
                let mut heap = heap.clone();
                heap.insert(l, val(new));
                Ok((Expr::lit(Val::Bool(true)), heap))
            } else {
                Ok((Expr::lit(Val::Bool(false)), heap.clone()))
            }
        }
        ExprKind::Faa(loc, delta) => {
            let l = loc_of(&val(loc))?;
            let Some(current) = heap.get(l).cloned() else {
                return Err(format!("faa on unallocated location #{l}"));
            };
            let (Val::Int(old), Val::Int(d)) = (&current, &val(delta)) else {
                return Err("faa needs integer contents and delta".into());
            };
            let new = old.checked_add(*d).ok_or("integer overflow in faa")?;
            let mut heap = heap.clone();
            heap.insert(l, Val::Int(new));
            Ok((Expr::lit(Val::Int(*old)), heap))
        }
        ExprKind::ArrayMake(n, init) => {
            let Val::Int(n) = val(n) else {
                return Err("array_make needs an integer length".into());
            };
            if n <= 0 {
                return Err(format!("array_make with non-positive length {n}"));
            }
            let init = val(init);
            let base = heap.alloc_block(n as u64);
            let mut heap = heap.clone();
            for i in 0..n as u64 {
                heap.insert(base + i, init.clone());
            }
            Ok((Expr::lit(Val::Loc(base)), heap))
        }
        ExprKind::ArrayGet(b, i) => {
            let l = array_index(&val(b), &val(i))?;
            match heap.get(l) {
                Some(v) => Ok((Expr::lit(v.clone()), heap.clone())),
                None => Err(format!("array_get of unallocated location #{l}")),
            }
        }
        ExprKind::ArraySet(b, i, v) => {
            let l = array_index(&val(b), &val(i))?;
            if !heap.contains(l) {
                return Err(format!("array_set to unallocated location #{l}"));
            }
            let mut heap = heap.clone();
            heap.insert(l, val(v));
            Ok((Expr::lit(Val::Unit), heap))
        }
        ExprKind::Var(x) => Err(format!("unbound variable `{x}`")),
        ExprKind::Lit(_) | ExprKind::Rec { .. } | ExprKind::Pair(_, _) => {
            Err("no head step for a value".into())
        }
        ExprKind::InjL(_) | ExprKind::InjR(_) => Err("no head step for a value".into()),
        ExprKind::Fork(_) => Err("fork is not a head redex".into()),
    }
}

fn loc_of(v: &Val) -> Result<u64, String> {
    v.as_loc().ok_or_else(|| {
        format!(
            "expected a location, found `{}`",
            crate::lang::pretty_val(v)
        )
    })
}

fn array_index(base: &Val, index: &Val) -> Result<u64, String> {
    let b = loc_of(base)?;
    let Val::Int(i) = index else {
        return Err("array index must be an integer".into());
    };
    let l = b as i64 + i;
    if l < 0 {
        return Err(format!("negative array address {l}"));
    }
    Ok(l as u64)
}

fn binop_eval(op: BinOpKind, l: &Val, r: &Val) -> Result<Val, String> {
    use BinOpKind::*;
    use Val::*;
    let wrong = || {
        Err(format!(
            "`{}` applied to `{}` and `{}`",
            op.symbol(),
            crate::lang::pretty_val(l),
            crate::lang::pretty_val(r)
        ))
    };
    match op {
        Add | Sub | Mul | Div => {
            let (Int(a), Int(b)) = (l, r) else { return wrong() };
            let v = match op {
                Add => a.checked_add(*b),
                Sub => a.checked_sub(*b),
                Mul => a.checked_mul(*b),
                Div => {
                    if *b == 0 {
                        return Err("division by zero".into());
                    }
                    a.checked_div(*b)
                }
                _ => unreachable!(),
            };
            v.map(Int).ok_or_else(|| "integer overflow".into())
        }
        Lt => {
            let (Int(a), Int(b)) = (l, r) else { return wrong() };
            Ok(Bool(a < b))
        }
        Eq => match (l, r) {
            (Int(a), Int(b)) => Ok(Bool(a == b)),
            (Bool(a), Bool(b)) => Ok(Bool(a == b)),
            (Unit, Unit) => Ok(Bool(true)),
            (Loc(a), Loc(b)) => Ok(Bool(a == b)),
            _ => wrong(),
        },
        And => {
            let (Bool(a), Bool(b)) = (l, r) else { return wrong() };
            Ok(Bool(*a && *b))
        }
        Or => {
            let (Bool(a), Bool(b)) = (l, r) else { return wrong() };
            Ok(Bool(*a || *b))
        }
    }
}

/// One thread-local step: decompose, then either lift the head step under
/// the context or handle `fork`. Deterministic: at most one result.
pub fn thread_step(e: &Expr, heap: &Heap) -> StepResult {
    match decompose(e) {
        Decomposition::AlreadyValue(_) => StepResult::IsValue,
        Decomposition::Redex { ctx, redex } => {
            if let ExprKind::Fork(body) = &redex.kind {
                return StepResult::Stepped {
                    next: fill(&ctx, Expr::lit(Val::Unit)),
                    forked: vec![(**body).clone()],
                    heap: heap.clone(),
                };
            }
            match head_step(&redex, heap) {
                Ok((next, heap)) => StepResult::Stepped {
                    next: fill(&ctx, next),
                    forked: vec![],
                    heap,
                },
                Err(reason) => StepResult::Stuck(reason),
            }
        }
    }
}

/// Step thread `i` of the configuration. Forked threads are appended at
/// the end of the pool in order.
pub fn pool_step(c: &Config, i: usize) -> PoolOutcome {
    assert!(i < c.threads.len(), "thread index out of range");
    match thread_step(&c.threads[i], &c.heap) {
        StepResult::IsValue => PoolOutcome::NotReducible,
        StepResult::Stuck(r) => PoolOutcome::Stuck(r),
        StepResult::Stepped { next, forked, heap } => {
            let mut threads = c.threads.clone();
            threads[i] = next;
            threads.extend(forked);
            PoolOutcome::Next(Config { threads, heap })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_expr;

    fn step_closed(src: &str, heap: Heap) -> (Expr, Heap) {
        let e = parse_expr(src).unwrap();
        match thread_step(&e, &heap) {
            StepResult::Stepped { next, forked, heap } => {
                assert!(forked.is_empty());
                (next, heap)
            }
            other => panic!("expected a step, got {other:?}"),
        }
    }

    #[test]
    fn addition_steps_pure() {
        let (next, heap) = step_closed("1 + 1", Heap::new());
        assert_eq!(next, Expr::lit(Val::Int(2)));
        assert!(heap.is_empty());
    }

    #[test]
    fn allocation_uses_the_oracle() {
        let (next, heap) = step_closed("ref true", Heap::new());
        assert_eq!(next, Expr::lit(Val::Loc(0)));
        assert_eq!(heap.get(0), Some(&Val::Bool(true)));
    }

    // CAS expectations cross-checked against the published reference
    // semantics for compare-and-set on unboxed values.
    #[test]
    fn cas_succeeds_when_equal() {
        let mut h = Heap::new();
        h.insert(0, Val::Bool(false));
        let (next, heap) = step_closed("cas(#0, false, true)", h);
        assert_eq!(next, Expr::lit(Val::Bool(true)));
        assert_eq!(heap.get(0), Some(&Val::Bool(true)));
    }

    #[test]
    fn cas_fails_when_unequal() {
        let mut h = Heap::new();
        h.insert(0, Val::Bool(true));
        let (next, heap) = step_closed("cas(#0, false, true)", h);
        assert_eq!(next, Expr::lit(Val::Bool(false)));
        assert_eq!(heap.get(0), Some(&Val::Bool(true)));
    }

    #[test]
    fn cas_on_boxed_values_is_stuck() {
        let mut h = Heap::new();
        h.insert(0, Val::Pair(Box::new(Val::Int(1)), Box::new(Val::Int(2))));
        let e = parse_expr("cas(#0, (1, 2), (3, 4))").unwrap();
        assert!(matches!(thread_step(&e, &h), StepResult::Stuck(_)));
    }

    #[test]
    fn faa_returns_old_value() {
        let mut h = Heap::new();
        h.insert(0, Val::Int(5));
        let (next, heap) = step_closed("faa(#0, 2)", h);
        assert_eq!(next, Expr::lit(Val::Int(5)));
        assert_eq!(heap.get(0), Some(&Val::Int(7)));
    }

    #[test]
    fn load_of_unallocated_location_is_stuck() {
        let e = parse_expr("!#9").unwrap();
        match thread_step(&e, &Heap::new()) {
            StepResult::Stuck(reason) => assert!(reason.contains("unallocated")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn values_do_not_step() {
        let e = parse_expr("5").unwrap();
        assert_eq!(thread_step(&e, &Heap::new()), StepResult::IsValue);
    }

    #[test]
    fn fork_appends_a_thread() {
        let e = parse_expr("fork { #0 <- false }; !#0").unwrap();
        let mut h = Heap::new();
        h.insert(0, Val::Bool(true));
        let c = Config::initial(e, h);
        match pool_step(&c, 0) {
            PoolOutcome::Next(c2) => {
                assert_eq!(c2.threads.len(), 2);
                assert!(matches!(c2.threads[1].kind, ExprKind::Store(_, _)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pool_on_value_thread_is_not_reducible() {
        let c = Config::initial(Expr::lit(Val::Int(5)), Heap::new());
        assert_eq!(pool_step(&c, 0), PoolOutcome::NotReducible);
    }

    #[test]
    fn division_by_zero_is_stuck() {
        let e = parse_expr("1 / 0").unwrap();
        assert!(matches!(thread_step(&e, &Heap::new()), StepResult::Stuck(_)));
    }

    #[test]
    fn beta_substitutes_recursively() {
        // (rec f x => if x = 0 then 0 else f (x - 1)) 2 reduces and keeps f bound
        let e = parse_expr("(rec f x => if x = 0 then 0 else f (x - 1)) 2").unwrap();
        let mut cur = e;
        let mut heap = Heap::new();
        for _ in 0..64 {
            match thread_step(&cur, &heap) {
                StepResult::Stepped { next, heap: h, .. } => {
                    cur = next;
                    heap = h;
                }
                StepResult::IsValue => break,
                StepResult::Stuck(r) => panic!("stuck: {r}"),
            }
        }
        assert_eq!(cur, Expr::lit(Val::Int(0)));
    }

    #[test]
    fn array_block_is_contiguous() {
        let (next, heap) = step_closed("array_make(3, 9)", Heap::new());
        assert_eq!(next, Expr::lit(Val::Loc(0)));
        for i in 0..3 {
            assert_eq!(heap.get(i), Some(&Val::Int(9)));
        }
    }
}
