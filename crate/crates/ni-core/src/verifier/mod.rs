//! The security verifier: exhaustive product-program exploration deciding
//! strong low-bisimulation security at desk scale, with replayable
//! counterexample schedules and a witness audit.

pub mod explore;
pub mod pair;
pub mod verify;

pub use explore::{
    audit_witness, decide_pair, initial_pair, replay, validate_trace, CounterTrace, PairVerdict,
    VerifyConfig,
};
pub use pair::{
    pair_conditions, product_successors, side_steps, PairSnapshot, PairState, Side, SideSteps,
    Violation,
};
pub use verify::{verify, PairOutcome, VerdictSummary};
