//! Limit sets of branching random walks on the boundary.
//!
//! Boundary points are represented by finite prefixes of deep particle
//! positions. Two estimators of the Hausdorff dimension are provided: shadow
//! covers built from the visited spheres (box counting), and the scaling of
//! close pairs among sampled boundary points (correlation dimension). Both
//! are compared with `log_a H(λ)` in [`dimension_report`].

mod estimators;
mod report;
mod samples;

pub use estimators::{
    box_dimension, correlation_dimension, energy_drift_dimension, pair_energy, shadow_cover_counts, CoverEstimate,
    DimensionEstimate, DimensionMethod,
};
pub use report::{dimension_report, outer_radius, DimensionRow, DimensionSettings};
pub use samples::{
    default_prefix_len, sample_boundary, speed_quantile, sphere_boundary_samples, uniform_boundary_samples, BoundarySampleSet,
};
