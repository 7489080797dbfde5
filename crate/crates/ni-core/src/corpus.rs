//! The fixture library: example programs with expected typing and security
//! verdicts, loaded from a directory of `.ni` files plus a manifest, and a
//! driver that diffs actual results against the expectations.
//!
//! Manifest format: one `[name]` section per fixture followed by
//! `key = value` lines. Recognized keys:
//!   file            - path of the `.ni` source, relative to the manifest
//!   expect_typecheck- `ok` or `error`
//!   expect_type D   - pretty-printed type required for definition D
//!   expect_error D  - error kind required on definition D
//!   expect_verdict  - Secure | Insecure | Stuck
//!   provenance      - free-form note on where the program comes from
//! Lines starting with `#` are comments.

use crate::lang::ast::{Expr, Name};
use crate::program::{LinkError, Program};
use crate::typesys::{typecheck_program, TypingReport};
use crate::verifier::{validate_trace, verify, PairVerdict, VerifyConfig};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    pub program: Program,
    pub expect_typecheck_ok: bool,
    /// Required pretty-printed types per definition.
    pub expect_types: Vec<(String, String)>,
    /// Required error kinds per definition.
    pub expect_errors: Vec<(String, String)>,
    pub expect_verdict: String,
    pub provenance: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("manifest {0}: {1}")]
    Manifest(PathBuf, String),
    #[error("fixture `{0}`: {1}")]
    Parse(String, crate::lang::ParseError),
    #[error("fixture `{0}`: {1}")]
    Link(String, LinkError),
}

/// Load every fixture named by the manifest in `dir`.
pub fn fixtures(dir: &Path) -> Result<Vec<Fixture>, CorpusError> {
    let manifest_path = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| CorpusError::Io(manifest_path.clone(), e))?;

    let mut out = Vec::new();
    let mut current: Option<Fixture> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if let Some(f) = current.take() {
                out.push(f);
            }
            current = Some(Fixture {
                name: name.to_string(),
                path: PathBuf::new(),
                source: String::new(),
                program: Program {
                    outputs: vec![],
                    highs: vec![],
                    externs: vec![],
                    defs: vec![],
                    extern_impls: vec![],
                    main: Expr::unit(),
                },
                expect_typecheck_ok: true,
                expect_types: vec![],
                expect_errors: vec![],
                expect_verdict: "Secure".into(),
                provenance: String::new(),
            });
            continue;
        }
        let f = current.as_mut().ok_or_else(|| {
            CorpusError::Manifest(
                manifest_path.clone(),
                format!("line {}: entry before any [section]", lineno + 1),
            )
        })?;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CorpusError::Manifest(
                manifest_path.clone(),
                format!("line {}: expected `key = value`", lineno + 1),
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        match key.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["file"] => f.path = dir.join(value),
            ["expect_typecheck"] => f.expect_typecheck_ok = value == "ok",
            ["expect_type", def] => f
                .expect_types
                .push((def.to_string(), value.to_string())),
            ["expect_error", def] => f
                .expect_errors
                .push((def.to_string(), value.to_string())),
            ["expect_verdict"] => f.expect_verdict = value.to_string(),
            ["provenance"] => f.provenance = value.to_string(),
            other => {
                return Err(CorpusError::Manifest(
                    manifest_path.clone(),
                    format!("line {}: unknown key `{}`", lineno + 1, other.join(" ")),
                ))
            }
        }
    }
    if let Some(f) = current.take() {
        out.push(f);
    }

    for f in &mut out {
        let src = std::fs::read_to_string(&f.path)
            .map_err(|e| CorpusError::Io(f.path.clone(), e))?;
        let program = crate::lang::parse_program(&src)
            .map_err(|e| CorpusError::Parse(f.name.clone(), e))?;
        program
            .validate()
            .map_err(|e| CorpusError::Link(f.name.clone(), e))?;
        f.source = src;
        f.program = program;
    }
    Ok(out)
}

/// Substitute implementations for the fixture's externs, producing a
/// program ready for verification. `overrides` wins over implementations
/// carried by the fixture file.
pub fn link(f: &Fixture, overrides: &BTreeMap<Name, Expr>) -> Result<Program, LinkError> {
    f.program.link(overrides)
}

/// The corpus directory checked into this repository, for tests.
pub fn repo_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("corpus")
}

// ---------------- corpus driver ----------------

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FixtureResult {
    pub name: String,
    pub typecheck_expected: String,
    pub typecheck_actual: String,
    pub typecheck_pass: bool,
    pub type_mismatches: Vec<String>,
    pub verdict_expected: String,
    pub verdict_actual: String,
    pub verdict_pass: bool,
    pub trace_replays: bool,
    pub pairs_explored: u64,
    pub audit_violations: u64,
}

impl FixtureResult {
    pub fn pass(&self) -> bool {
        self.typecheck_pass
            && self.verdict_pass
            && self.type_mismatches.is_empty()
            && self.trace_replays
            && self.audit_violations == 0
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CorpusReport {
    pub fixtures: Vec<FixtureResult>,
    pub all_pass: bool,
}

/// Check the typing expectations of one fixture against a report.
fn diff_typing(f: &Fixture, report: &TypingReport) -> (bool, Vec<String>) {
    let ok = report.well_typed();
    let mut mismatches = Vec::new();
    if ok != f.expect_typecheck_ok {
        mismatches.push(format!(
            "typecheck: expected {}, got {}",
            if f.expect_typecheck_ok { "ok" } else { "error" },
            if ok { "ok" } else { "error" }
        ));
    }
    for (def, want) in &f.expect_types {
        match report.def_type(def) {
            Some(actual) if actual == want => {}
            Some(actual) => mismatches.push(format!(
                "type of `{def}`: expected `{want}`, got `{actual}`"
            )),
            None => mismatches.push(format!("type of `{def}`: expected `{want}`, got error")),
        }
    }
    for (def, want_kind) in &f.expect_errors {
        let found = report
            .defs
            .iter()
            .find(|d| &d.name == def)
            .map(|d| {
                d.errors
                    .iter()
                    .map(|e| e.kind.to_string())
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        if !found.iter().any(|k| k == want_kind) {
            mismatches.push(format!(
                "error on `{def}`: expected {want_kind}, got [{}]",
                found.join(", ")
            ));
        }
    }
    (mismatches.is_empty(), mismatches)
}

/// Run typecheck + verify on one fixture and diff against expectations.
pub fn run_fixture(f: &Fixture, cfg: &VerifyConfig) -> Result<FixtureResult, CorpusError> {
    let typing = typecheck_program(&f.program);
    let actual_tc = if typing.well_typed() { "ok" } else { "error" };
    let (typecheck_pass, type_mismatches) = diff_typing(f, &typing);

    let summary = verify(&f.program, &f.name, cfg)
        .map_err(|e| CorpusError::Link(f.name.clone(), e))?;
    let verdict_pass = summary.overall == f.expect_verdict;

    // every emitted counterexample must replay to its violation
    let mut trace_replays = true;
    let mut audit_violations = 0;
    {
        use crate::semantics::heap::materialize_outputs;
        let linked = f
            .program
            .link(&Default::default())
            .map_err(|e| CorpusError::Link(f.name.clone(), e))?;
        let (sigma0, locs) = materialize_outputs(&linked.outputs);
        let main = linked
            .closed_main(&locs)
            .map_err(|e| CorpusError::Link(f.name.clone(), e))?;
        let outs = locs.values().copied().collect();
        let highs = linked.high_names();
        for pair in &summary.pairs {
            match &pair.verdict {
                PairVerdict::Insecure { trace, .. } | PairVerdict::Stuck { trace, .. } => {
                    if !validate_trace(&main, &highs, &sigma0, &outs, trace) {
                        trace_replays = false;
                    }
                }
                PairVerdict::Secure {
                    audit_violations: a,
                    ..
                } => audit_violations += a,
                PairVerdict::BoundExceeded { .. } => {}
            }
        }
    }

    Ok(FixtureResult {
        name: f.name.clone(),
        typecheck_expected: if f.expect_typecheck_ok { "ok" } else { "error" }.into(),
        typecheck_actual: actual_tc.into(),
        typecheck_pass,
        type_mismatches,
        verdict_expected: f.expect_verdict.clone(),
        verdict_actual: summary.overall.clone(),
        verdict_pass,
        trace_replays,
        pairs_explored: summary.pairs_explored_total,
        audit_violations,
    })
}

/// Run the whole corpus in manifest order.
pub fn run_corpus(dir: &Path, cfg: &VerifyConfig) -> Result<CorpusReport, CorpusError> {
    let fs = fixtures(dir)?;
    let mut results = Vec::new();
    for f in &fs {
        results.push(run_fixture(f, cfg)?);
    }
    let all_pass = results.iter().all(FixtureResult::pass);
    Ok(CorpusReport {
        fixtures: results,
        all_pass,
    })
}
