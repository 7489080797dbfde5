//! Operational semantics: heaps and the allocation oracle, thread-local
//! and thread-pool reduction, and concrete execution with schedulers.

pub mod heap;
pub mod run;
pub mod step;

pub use heap::{low_equiv, materialize_outputs, Heap};
pub use run::{initial_config, run, RunError, RunReport, Scheduler, DEFAULT_FUEL};
pub use step::{head_step, pool_step, thread_step, Config, PoolOutcome, StepResult};
