//! Regression suite over the checked-in corpus: every fixture's typing and
//! verdict expectations must hold, counterexample traces must replay, and
//! secure witnesses must pass the closure audit.

use ni_core::corpus::{self, FixtureResult};
use ni_core::verifier::VerifyConfig;

#[test]
fn corpus_matches_expectations() {
    let dir = corpus::repo_corpus_dir();
    let report = corpus::run_corpus(&dir, &VerifyConfig::default()).expect("corpus runs");
    let mut failures = Vec::new();
    for r in &report.fixtures {
        if !r.pass() {
            failures.push(format!("{r:#?}"));
        }
    }
    assert!(
        failures.is_empty(),
        "corpus mismatches:\n{}",
        failures.join("\n")
    );
    assert!(report.all_pass);
    // the corpus covers all three verdicts
    let verdicts: Vec<&str> = report
        .fixtures
        .iter()
        .map(|r| r.verdict_actual.as_str())
        .collect();
    for v in ["Secure", "Insecure", "Stuck"] {
        assert!(verdicts.contains(&v), "corpus has no {v} fixture");
    }
}

#[test]
fn corpus_programs_round_trip_through_the_pretty_printer() {
    let dir = corpus::repo_corpus_dir();
    for f in corpus::fixtures(&dir).expect("corpus loads") {
        let printed = ni_core::lang::pretty_program(&f.program);
        let reparsed = ni_core::lang::parse_program(&printed)
            .unwrap_or_else(|e| panic!("{}: reparse failed: {e}\n{printed}", f.name));
        assert_eq!(f.program, reparsed, "{} round trip", f.name);
    }
}

#[test]
fn flipped_expectation_is_caught() {
    let dir = corpus::repo_corpus_dir();
    let mut fixtures = corpus::fixtures(&dir).expect("corpus loads");
    let f = fixtures
        .iter_mut()
        .find(|f| f.name == "rand")
        .expect("rand fixture present");
    f.expect_verdict = "Insecure".into();
    let r: FixtureResult =
        corpus::run_fixture(f, &VerifyConfig::default()).expect("fixture runs");
    assert!(!r.pass());
    assert!(!r.verdict_pass);
}

#[test]
fn linking_rejects_missing_extern_implementations() {
    let dir = corpus::repo_corpus_dir();
    let fixtures = corpus::fixtures(&dir).expect("corpus loads");
    let f = fixtures
        .iter()
        .find(|f| f.name == "set_cap3")
        .expect("set fixture present");
    // carried impls satisfy the externs
    assert!(corpus::link(f, &Default::default()).is_ok());
    // dropping them fails
    let mut bare = f.clone();
    bare.program.extern_impls.clear();
    assert!(matches!(
        bare.program.link(&Default::default()),
        Err(ni_core::LinkError::MissingImplementation(_))
    ));
}
