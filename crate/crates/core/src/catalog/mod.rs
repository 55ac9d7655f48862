//! Explicit reductions between named families, each packaged as a strategy
//! pair or a one-query triple that can be verified.

pub mod density;
pub mod errors;
pub mod llpo;
pub mod prob;

pub use density::{denerror, denerror_reduction, lower_density, PeriodicSet};
pub use errors::{collapse_chain, easy_direction, ChainBuilder, ChainError, Consolidation};
pub use llpo::{llpo, llpo_reduction, psi_fn, psi_table, ClockProbe, ClockedTable, LlpoReduction, Psi};
pub use prob::{prob_error, prob_error_strategy, prob_error_witness, MachineProbe, ProbErrorStrategy, StagedMachine};
