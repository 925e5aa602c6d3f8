//! Generation-synchronous branching random walks.
//!
//! Each particle of generation `m` draws a number of children from `ν` and
//! moves each child by an independent step of `μ`. All randomness of a
//! particle comes from a stream keyed by `(seed, replica, m, index)`, so a
//! run is a deterministic function of its configuration, and a run to
//! generation `m` is a prefix of the same run to any later generation.

mod offspring;
mod run;
mod stats;

pub use offspring::{OffspringDistribution, MAX_OFFSPRING};
pub use run::{run, run_replicas, BrwConfig, TraceRecord, MAX_RECORD_DEPTH};
pub use stats::{
    empirical_first_moment, empirical_second_moment, growth_rate, moment_experiment, settled_radius,
    speed_and_jump_report, GrowthEstimate, MomentEstimate, MomentTable, SpeedReport,
};
