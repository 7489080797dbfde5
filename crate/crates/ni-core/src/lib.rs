//! A toolkit for a small concurrent ML-like language: parsing, running,
//! security type checking, and deciding timing-sensitive non-interference
//! by exhaustive exploration of a two-run product at desk scale.
//!
//! The pieces:
//!   * [`lang`] — syntax, parser, substitution, evaluation contexts
//!   * [`semantics`] — deterministic thread-local small steps with an
//!     allocation oracle, thread-pool non-determinism, schedulers
//!   * [`typesys`] — the two-level security type system and its checker
//!   * [`verifier`] — the product-program exploration that decides strong
//!     low-bisimulation security, with counterexample traces
//!   * [`corpus`] — the fixture library driving regression and acceptance

pub mod corpus;
pub mod lang;
pub mod program;
pub mod semantics;
pub mod typesys;
pub mod verifier;

pub use program::{LinkError, Program};
