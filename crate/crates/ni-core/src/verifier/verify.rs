//! Whole-program verification: quantify over all ordered pairs of inputs
//! drawn from the configured finite domains and decide each pair.

use super::explore::{decide_pair, PairVerdict, VerifyConfig};
use crate::lang::ast::Name;
use crate::semantics::heap::materialize_outputs;
use crate::program::{LinkError, Program};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PairOutcome {
    pub i: Vec<i64>,
    pub j: Vec<i64>,
    #[serde(flatten)]
    pub verdict: PairVerdict,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerdictSummary {
    pub program: String,
    /// The finite domain used for each high variable, in declaration
    /// order. Security is decided relative to these approximations.
    pub domains: Vec<(String, Vec<i64>)>,
    pub pairs: Vec<PairOutcome>,
    pub overall: String,
    pub pairs_explored_total: u64,
}

impl VerdictSummary {
    pub fn overall_is(&self, name: &str) -> bool {
        self.overall == name
    }

    /// Exit-code mapping: 0 Secure, 1 Insecure, 2 Stuck, 3 BoundExceeded.
    pub fn exit_code(&self) -> i32 {
        match self.overall.as_str() {
            "Secure" => 0,
            "Insecure" => 1,
            "Stuck" => 2,
            _ => 3,
        }
    }
}

fn severity(v: &PairVerdict) -> u8 {
    match v {
        PairVerdict::Insecure { .. } => 3,
        PairVerdict::Stuck { .. } => 2,
        PairVerdict::BoundExceeded { .. } => 1,
        PairVerdict::Secure { .. } => 0,
    }
}

/// All assignments over the per-variable domains, in lexicographic order.
fn assignments(domains: &[(Name, Vec<i64>)]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for (_, dom) in domains {
        let mut next = Vec::with_capacity(out.len() * dom.len());
        for prefix in &out {
            for v in dom {
                let mut a = prefix.clone();
                a.push(*v);
                next.push(a);
            }
        }
        out = next;
    }
    out
}

/// Verify a program: materialize the output heap, link and close the
/// program, then decide every ordered pair of input assignments
/// (including the diagonal). Secure overall iff every pair is secure.
pub fn verify(p: &Program, name: &str, cfg: &VerifyConfig) -> Result<VerdictSummary, LinkError> {
    p.validate()?;
    let linked = p.link(&Default::default())?;
    let (sigma0, locs) = materialize_outputs(&linked.outputs);
    let main = linked.closed_main(&locs)?;
    let outs: BTreeSet<u64> = locs.values().copied().collect();
    let highs = linked.high_names();

    let domains: Vec<(Name, Vec<i64>)> = linked
        .highs
        .iter()
        .map(|(n, declared)| {
            let dom = cfg
                .domains
                .get(n)
                .map(|d| d.iter().copied().collect())
                .unwrap_or_else(|| {
                    if declared.is_empty() {
                        vec![0, 1]
                    } else {
                        declared.iter().copied().collect()
                    }
                });
            (n.clone(), dom)
        })
        .collect();

    let assigns = assignments(&domains);
    let mut tasks: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    for i in &assigns {
        for j in &assigns {
            tasks.push((i.clone(), j.clone()));
        }
    }

    let decide = |(i, j): &(Vec<i64>, Vec<i64>)| -> PairOutcome {
        let verdict = decide_pair(&main, &highs, i, j, &sigma0, &outs, cfg);
        PairOutcome {
            i: i.clone(),
            j: j.clone(),
            verdict,
        }
    };

    // Input pairs are independent; fan out when asked to, merging in task
    // order so reports are deterministic.
    let pairs: Vec<PairOutcome> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| tasks.par_iter().map(decide).collect())
    } else {
        tasks.iter().map(decide).collect()
    };

    let worst = pairs
        .iter()
        .map(|p| &p.verdict)
        .max_by_key(|v| severity(v));
    let overall = worst.map(|v| v.name()).unwrap_or("Secure").to_string();
    let pairs_explored_total = pairs
        .iter()
        .map(|p| match &p.verdict {
            PairVerdict::Secure { pairs_explored, .. }
            | PairVerdict::Insecure { pairs_explored, .. }
            | PairVerdict::Stuck { pairs_explored, .. } => *pairs_explored,
            PairVerdict::BoundExceeded { .. } => 0,
        })
        .sum();

    Ok(VerdictSummary {
        program: name.to_string(),
        domains: domains
            .iter()
            .map(|(n, d)| (n.to_string(), d.clone()))
            .collect(),
        pairs,
        overall,
        pairs_explored_total,
    })
}
