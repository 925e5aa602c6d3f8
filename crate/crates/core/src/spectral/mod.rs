//! Transfer operators for sphere sums of Green functions.
//!
//! Reduced words are the paths of a finite automaton from its initial state.
//! Writing `G_r(e, x)` as a telescoping product of ratios
//! `e^{φ_r(σ^j x)} = G_r(e, σ^j x) / G_r(e, σ^{j+1} x)`, the sphere sum
//! `H_n(r)` becomes `G_r(e,e)` times a weighted path count, and its growth
//! rate `H(r)` the dominant eigenvalue of the transfer matrix of `φ_r`.
//! The potential depends on the whole word; it is approximated by its value
//! on cylinders of finite length, which is exact for isotropic
//! nearest-neighbour walks at every horizon.

mod automaton;
mod exponent;
mod potential;
mod transfer;

pub use automaton::{build_automaton, Automaton, AutomatonAudit, AUDIT_RADIUS};
pub use exponent::{
    critical_exponent_fit, dyadic_grid, eta_exponent_fit, fit_endpoint, ExponentFit, MIN_FIT_POINTS, WINDOW_FRACTION,
};
pub use potential::{build_potential, CylinderPotential};
pub use transfer::{
    pressure, pressure_curve, refined_pressure, transfer_matrix, verify_hnr_identity, HnrCheck, PressureResult,
    TransferMatrix,
};
