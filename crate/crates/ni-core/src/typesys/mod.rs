//! The security type system: the two-point lattice, subtyping, stamping,
//! flat types, and the algorithmic checker.

pub mod check;
pub mod types;

pub use check::{
    typecheck, typecheck_program, DefTyping, TypeCtx, TypeError, TypeErrorKind, TypingReport,
};
pub use types::{
    enumerate_types, is_flat, join_type, meet_type, shape_key, stamp, subtype, Label, SecType,
};
