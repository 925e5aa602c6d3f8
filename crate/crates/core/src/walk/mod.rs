//! Random walks with symmetric finitely supported steps and their Green
//! functions, sphere sums and related identities.

mod engine;
mod general;
mod identities;
mod radial;
mod restricted;
mod rho;
mod series;
mod step;

pub use engine::{DerivativeCheck, GreenEngine, GreenSettings, GreenTable, SphereGreenSeries};
pub use general::{BallKernel, GeneralKernel};
pub use identities::{
    ancona_ratio_scan, multiplicativity_constants, second_moment_bound, two_point_sum,
    AnconaScan, MultiplicativityConstants, TwoPointSum,
};
pub use radial::RadialKernel;
pub use restricted::{restricted_green, Region};
pub use rho::{estimate_spectral_radius, SpectralRadiusEstimate};
pub use series::GreenValue;
pub use step::StepDistribution;
