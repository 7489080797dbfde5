//! Per-input-pair exploration: breadth-first forward reachability over the
//! product graph with memoized states, violation detection, shortest
//! counterexample traces, and a closure audit of the retained witness.
//!
//! Because the thread-local semantics is deterministic, every pair has at
//! most one successor per thread index, so a pair is bad exactly when a
//! violating pair is reachable from it. Breadth-first order therefore
//! yields a minimal-depth violation, and on a clean sweep the full set of
//! reached pairs is the witness relation.

use super::pair::{
    pair_conditions, product_successors, side_steps, PairSnapshot, PairState, Violation,
};
use crate::lang::ast::{Expr, Name, Val};
use crate::lang::subst::subst;
use crate::semantics::step::Config;
use crate::semantics::Heap;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

/// Bounds for one exploration instance.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Per-variable input domains overriding the declared ones.
    pub domains: std::collections::BTreeMap<Name, BTreeSet<i64>>,
    /// Cap on distinct pairs retained.
    pub max_pairs: u64,
    /// Cap on schedule length (breadth-first depth).
    pub max_depth: u64,
    /// Optional wall-clock budget per input pair.
    pub timeout: Option<Duration>,
    /// Re-check the witness relation on a Secure verdict.
    pub audit: bool,
    /// Worker threads for independent input pairs (0 or 1 = sequential).
    pub jobs: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            domains: Default::default(),
            max_pairs: 1_000_000,
            max_depth: 100_000,
            timeout: None,
            audit: true,
            jobs: 0,
        }
    }
}

/// A replayable counterexample: the schedule from the initial pair to the
/// violating pair.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CounterTrace {
    pub inputs_left: Vec<i64>,
    pub inputs_right: Vec<i64>,
    pub schedule: Vec<usize>,
    pub violations: Vec<Violation>,
    pub final_state: PairSnapshot,
}

/// Verdict for one `(i, j)` input pair.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "verdict")]
pub enum PairVerdict {
    Secure {
        pairs_explored: u64,
        relation_size: u64,
        /// Violations found by the witness re-check; zero on a sound run.
        audit_violations: u64,
    },
    Insecure {
        pairs_explored: u64,
        trace: CounterTrace,
    },
    Stuck {
        pairs_explored: u64,
        trace: CounterTrace,
    },
    BoundExceeded {
        bound: String,
        value: u64,
    },
}

impl PairVerdict {
    pub fn is_secure(&self) -> bool {
        matches!(self, PairVerdict::Secure { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairVerdict::Secure { .. } => "Secure",
            PairVerdict::Insecure { .. } => "Insecure",
            PairVerdict::Stuck { .. } => "Stuck",
            PairVerdict::BoundExceeded { .. } => "BoundExceeded",
        }
    }
}

/// Substitute the high inputs into the closed main expression.
fn instantiate(e: &Expr, highs: &[Name], values: &[i64]) -> Expr {
    assert_eq!(highs.len(), values.len());
    let mut e = e.clone();
    for (name, v) in highs.iter().zip(values) {
        e = subst(&e, name, &Val::Int(*v));
    }
    e
}

pub fn initial_pair(
    e: &Expr,
    highs: &[Name],
    i_vals: &[i64],
    j_vals: &[i64],
    sigma0: &Heap,
) -> PairState {
    PairState {
        left: Config::initial(instantiate(e, highs, i_vals), sigma0.clone()),
        right: Config::initial(instantiate(e, highs, j_vals), sigma0.clone()),
    }
}

/// Decide one input pair. `e` is the closed main expression with only the
/// high variables free; `sigma0` maps the output locations to 0.
pub fn decide_pair(
    e: &Expr,
    highs: &[Name],
    i_vals: &[i64],
    j_vals: &[i64],
    sigma0: &Heap,
    outs: &BTreeSet<u64>,
    cfg: &VerifyConfig,
) -> PairVerdict {
    let started = Instant::now();
    let root = initial_pair(e, highs, i_vals, j_vals, sigma0);

    let mut states: Vec<PairState> = vec![root.clone()];
    let mut index: HashMap<PairState, u32> = HashMap::from([(root, 0)]);
    let mut parent: Vec<Option<(u32, usize)>> = vec![None];
    let mut depth: Vec<u32> = vec![0];
    let mut succs: Vec<Vec<u32>> = vec![];
    let mut queue: VecDeque<u32> = VecDeque::from([0]);

    while let Some(id) = queue.pop_front() {
        if let Some(budget) = cfg.timeout {
            if started.elapsed() > budget {
                return PairVerdict::BoundExceeded {
                    bound: "timeout_ms".into(),
                    value: budget.as_millis() as u64,
                };
            }
        }
        let state = states[id as usize].clone();
        let left = side_steps(&state.left);
        let right = side_steps(&state.right);
        let violations = pair_conditions(&state, outs, &left, &right);
        if !violations.is_empty() {
            let schedule = trace_schedule(&parent, id);
            let trace = CounterTrace {
                inputs_left: i_vals.to_vec(),
                inputs_right: j_vals.to_vec(),
                schedule,
                final_state: PairSnapshot::of(&state, outs),
                violations: violations.clone(),
            };
            debug_assert!(
                validate_trace(e, highs, sigma0, outs, &trace),
                "emitted trace failed to replay"
            );
            let explored = states.len() as u64;
            return if violations.iter().any(Violation::is_security) {
                PairVerdict::Insecure {
                    pairs_explored: explored,
                    trace,
                }
            } else {
                PairVerdict::Stuck {
                    pairs_explored: explored,
                    trace,
                }
            };
        }

        let mut ids = Vec::new();
        for (thread, succ) in product_successors(&state, &left, &right) {
            let next_id = match index.get(&succ) {
                Some(&i) => i,
                None => {
                    if depth[id as usize] as u64 >= cfg.max_depth {
                        return PairVerdict::BoundExceeded {
                            bound: "max_depth".into(),
                            value: cfg.max_depth,
                        };
                    }
                    if states.len() as u64 >= cfg.max_pairs {
                        return PairVerdict::BoundExceeded {
                            bound: "max_pairs".into(),
                            value: cfg.max_pairs,
                        };
                    }
                    let i = states.len() as u32;
                    states.push(succ.clone());
                    index.insert(succ, i);
                    parent.push(Some((id, thread)));
                    depth.push(depth[id as usize] + 1);
                    queue.push_back(i);
                    i
                }
            };
            ids.push(next_id);
        }
        if succs.len() <= id as usize {
            succs.resize(id as usize + 1, Vec::new());
        }
        succs[id as usize] = ids;
    }

    // No reachable violation: every reached pair is retained as the
    // witness. Optionally re-check the bisimulation conditions and the
    // successor closure over the whole set.
    let relation_size = states.len() as u64;
    let audit_violations = if cfg.audit {
        audit_witness(&states, &index, outs)
    } else {
        0
    };
    PairVerdict::Secure {
        pairs_explored: relation_size,
        relation_size,
        audit_violations,
    }
}

fn trace_schedule(parent: &[Option<(u32, usize)>], mut id: u32) -> Vec<usize> {
    let mut sched = Vec::new();
    while let Some((p, thread)) = parent[id as usize] {
        sched.push(thread);
        id = p;
    }
    sched.reverse();
    sched
}

/// Re-check conditions 1-3 on every retained pair: no violations, and
/// every matched successor is itself retained. Returns the number of
/// failures (zero on a correct exploration).
pub fn audit_witness(
    states: &[PairState],
    index: &HashMap<PairState, u32>,
    outs: &BTreeSet<u64>,
) -> u64 {
    let mut bad = 0u64;
    for state in states {
        let left = side_steps(&state.left);
        let right = side_steps(&state.right);
        if !pair_conditions(state, outs, &left, &right).is_empty() {
            bad += 1;
            continue;
        }
        for (_, succ) in product_successors(state, &left, &right) {
            if !index.contains_key(&succ) {
                bad += 1;
            }
        }
    }
    bad
}

/// Replay a schedule from the initial pair, returning the reached pair.
pub fn replay(
    e: &Expr,
    highs: &[Name],
    trace: &CounterTrace,
    sigma0: &Heap,
) -> Result<PairState, String> {
    let mut state = initial_pair(e, highs, &trace.inputs_left, &trace.inputs_right, sigma0);
    for (k, &thread) in trace.schedule.iter().enumerate() {
        let left = side_steps(&state.left);
        let right = side_steps(&state.right);
        let next = product_successors(&state, &left, &right)
            .into_iter()
            .find(|(i, _)| *i == thread)
            .map(|(_, s)| s)
            .ok_or_else(|| format!("schedule step {k}: thread {thread} cannot step"))?;
        state = next;
    }
    Ok(state)
}

/// Replay a trace and confirm it reproduces its recorded violation.
pub fn validate_trace(
    e: &Expr,
    highs: &[Name],
    sigma0: &Heap,
    outs: &BTreeSet<u64>,
    trace: &CounterTrace,
) -> bool {
    let Ok(state) = replay(e, highs, trace, sigma0) else {
        return false;
    };
    let left = side_steps(&state.left);
    let right = side_steps(&state.right);
    let violations = pair_conditions(&state, outs, &left, &right);
    violations == trace.violations && PairSnapshot::of(&state, outs) == trace.final_state
}
