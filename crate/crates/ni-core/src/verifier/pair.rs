//! Product states and the per-pair step-matching conditions.
//!
//! A pair relates two runs of the same program under shared schedules.
//! The retained pairs must satisfy: equal main values once both main
//! threads have terminated, equal thread counts with low-equivalent heaps,
//! and per-index lock-step reducibility. Stuck threads are violations in
//! their own right, since safety is part of the verified guarantee.

use crate::lang::ast::Expr;
use crate::lang::pretty_expr;
use crate::semantics::heap::low_equiv;
use crate::semantics::step::{thread_step, Config, StepResult};
use serde::Serialize;
use std::collections::BTreeSet;

/// A pair of configurations reached under a shared schedule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairState {
    pub left: Config,
    pub right: Config,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    /// Main threads terminated with different values, or only one side
    /// terminated (a value cannot match the other side's step).
    MainValueMismatch { detail: String },
    /// The heaps disagree on an output location.
    LowHeapMismatch { detail: String },
    /// Thread `thread` is reducible on one side only.
    StepMismatch { thread: usize, detail: String },
    /// Thread `thread` is a non-value that cannot step.
    StuckThread {
        thread: usize,
        side: Side,
        reason: String,
    },
}

impl Violation {
    /// Stuckness is reported as a distinct verdict; everything else is a
    /// security violation.
    pub fn is_security(&self) -> bool {
        !matches!(self, Violation::StuckThread { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// The per-thread step evaluation of one side, computed once per state and
/// shared between the condition check and successor construction.
pub struct SideSteps(pub Vec<StepResult>);

pub fn side_steps(c: &Config) -> SideSteps {
    SideSteps(
        c.threads
            .iter()
            .map(|e| thread_step(e, &c.heap))
            .collect(),
    )
}

/// Check the strong low-bisimulation conditions on one pair.
pub fn pair_conditions(
    p: &PairState,
    outs: &BTreeSet<u64>,
    left: &SideSteps,
    right: &SideSteps,
) -> Vec<Violation> {
    let mut out = Vec::new();

    // (1) main-thread values must agree; one-sided termination of the
    // main thread cannot be matched.
    let lv = p.left.threads[0].as_val();
    let rv = p.right.threads[0].as_val();
    match (&lv, &rv) {
        (Some(a), Some(b)) if a != b => out.push(Violation::MainValueMismatch {
            detail: format!(
                "main values differ: {} vs {}",
                crate::lang::pretty_val(a),
                crate::lang::pretty_val(b)
            ),
        }),
        (Some(_), None) | (None, Some(_)) => out.push(Violation::MainValueMismatch {
            detail: "main thread terminated on one side only".into(),
        }),
        _ => {}
    }

    // (2) equal thread counts and low-equivalent heaps.
    if p.left.threads.len() != p.right.threads.len() {
        out.push(Violation::StepMismatch {
            thread: p.left.threads.len().min(p.right.threads.len()),
            detail: format!(
                "thread counts differ: {} vs {}",
                p.left.threads.len(),
                p.right.threads.len()
            ),
        });
    }
    if !low_equiv(&p.left.heap, &p.right.heap, outs) {
        let detail = outs
            .iter()
            .map(|l| {
                let show = |c: &Config| {
                    c.heap
                        .get(*l)
                        .map(crate::lang::pretty_val)
                        .unwrap_or_else(|| "<unallocated>".into())
                };
                format!("#{l}: {} vs {}", show(&p.left), show(&p.right))
            })
            .collect::<Vec<_>>()
            .join(", ");
        out.push(Violation::LowHeapMismatch { detail });
    }

    // (3) per-index lock-step: reducible on the left iff on the right;
    // stuck threads are violations regardless of the other side.
    let n = p.left.threads.len().min(p.right.threads.len());
    for i in 0..n {
        for (side, steps) in [(Side::Left, left), (Side::Right, right)] {
            if let StepResult::Stuck(reason) = &steps.0[i] {
                out.push(Violation::StuckThread {
                    thread: i,
                    side,
                    reason: reason.clone(),
                });
            }
        }
        let l_red = matches!(left.0[i], StepResult::Stepped { .. });
        let r_red = matches!(right.0[i], StepResult::Stepped { .. });
        if l_red != r_red && !matches!(left.0[i], StepResult::Stuck(_))
            && !matches!(right.0[i], StepResult::Stuck(_))
        {
            out.push(Violation::StepMismatch {
                thread: i,
                detail: format!(
                    "thread {i} is reducible on the {} only",
                    if l_red { "left" } else { "right" }
                ),
            });
        }
    }
    out
}

/// All matched successors: one per thread index where both sides step.
/// Forked threads append positionally on both sides, so pairing is
/// preserved. Must only be called on violation-free pairs.
pub fn product_successors(
    p: &PairState,
    left: &SideSteps,
    right: &SideSteps,
) -> Vec<(usize, PairState)> {
    let mut succs = Vec::new();
    for i in 0..p.left.threads.len() {
        let (StepResult::Stepped { next: ln, forked: lf, heap: lh },
             StepResult::Stepped { next: rn, forked: rf, heap: rh }) =
            (&left.0[i], &right.0[i])
        else {
            continue;
        };
        let apply = |c: &Config, next: &Expr, forked: &[Expr], heap: &crate::semantics::Heap| {
            let mut threads = c.threads.clone();
            threads[i] = next.clone();
            threads.extend(forked.iter().cloned());
            Config {
                threads,
                heap: heap.clone(),
            }
        };
        succs.push((
            i,
            PairState {
                left: apply(&p.left, ln, lf, lh),
                right: apply(&p.right, rn, rf, rh),
            },
        ));
    }
    succs
}

/// A printable snapshot of a pair: thread expressions and the heap slice
/// at the output locations.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PairSnapshot {
    pub left_threads: Vec<String>,
    pub right_threads: Vec<String>,
    pub left_outputs: Vec<String>,
    pub right_outputs: Vec<String>,
}

impl PairSnapshot {
    pub fn of(p: &PairState, outs: &BTreeSet<u64>) -> PairSnapshot {
        let slice = |c: &Config| {
            outs.iter()
                .map(|l| {
                    format!(
                        "#{l} = {}",
                        c.heap
                            .get(*l)
                            .map(crate::lang::pretty_val)
                            .unwrap_or_else(|| "<unallocated>".into())
                    )
                })
                .collect()
        };
        PairSnapshot {
            left_threads: p.left.threads.iter().map(pretty_expr).collect(),
            right_threads: p.right.threads.iter().map(pretty_expr).collect(),
            left_outputs: slice(&p.left),
            right_outputs: slice(&p.right),
        }
    }
}
