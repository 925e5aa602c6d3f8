//! Branching random walks on tree-like hyperbolic groups.
//!
//! The crate covers free groups and free products of copies of Z/2:
//! reduced words and boundary shadows ([`group`]), Green functions and their
//! sphere sums ([`walk`]), a deterministic branching random walk simulator
//! ([`brw`]), dimension estimates for the trace on the boundary
//! ([`limit_set`]) and a transfer-operator description of the sphere-sum
//! growth ([`spectral`]).

pub mod brw;
pub mod error;
pub mod group;
pub mod limit_set;
pub mod numerics;
pub mod rng;
pub mod spectral;
pub mod walk;

pub use error::{Error, Result};
pub use group::{GroupKind, GroupModel, Letter, Word, WordId, WordTrie};
