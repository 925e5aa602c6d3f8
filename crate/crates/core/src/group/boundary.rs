//! Finite approximations of boundary points and the visual metric.
//!
//! A point of the Gromov boundary of a tree is an infinite reduced word; here
//! it is represented by a finite prefix together with the tag of the sampling
//! depth it came from. Two prefixes determine the visual distance of any
//! pair of extensions only if they already differ within their common
//! length, which is checked rather than assumed.

use super::word::Word;
use crate::error::{Error, Result};

/// Finite prefix of a boundary point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryPrefix {
    pub prefix: Word,
    /// Generation or sphere radius the prefix was taken from.
    pub depth_tag: usize,
}

impl BoundaryPrefix {
    pub fn new(prefix: Word, depth_tag: usize) -> Self {
        BoundaryPrefix { prefix, depth_tag }
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    /// Gromov product `(ξ|ξ')_e`, the length of the common prefix.
    ///
    /// Fails if one stored prefix runs out before the two words diverge.
    pub fn gromov_product(&self, other: &BoundaryPrefix) -> Result<usize> {
        let c = self.prefix.common_prefix_len(&other.prefix);
        if c >= self.len().min(other.len()) {
            return Err(Error::DivergenceNotWitnessed);
        }
        Ok(c)
    }
}

/// Visual metric `d_a(ξ, ξ') = a^{-(ξ|ξ')_e}` with parameter `a > 1`.
pub fn visual_distance(a: f64, x: &BoundaryPrefix, y: &BoundaryPrefix) -> Result<f64> {
    check_visual_parameter(a)?;
    let c = x.gromov_product(y)?;
    Ok(a.powi(-(c as i32)))
}

pub fn check_visual_parameter(a: f64) -> Result<()> {
    if a.is_finite() && a > 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "visual parameter must exceed 1, got {a}"
        )))
    }
}

/// Shadow `O_κ(x) = {ξ : (x|ξ)_e ≥ |x| − κ}` of a group element.
#[derive(Clone, Debug, PartialEq)]
pub struct Shadow {
    pub base: Word,
    pub kappa: f64,
}

impl Shadow {
    pub fn new(base: Word, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Precondition(format!(
                "shadow width must be finite and nonnegative, got {kappa}"
            )));
        }
        Ok(Shadow { base, kappa })
    }

    /// Number of leading letters a boundary point must share with the base.
    pub fn required_prefix(&self) -> usize {
        let need = self.base.len() as f64 - self.kappa;
        if need <= 0.0 {
            0
        } else {
            need.ceil() as usize
        }
    }

    pub fn contains(&self, xi: &BoundaryPrefix) -> Result<bool> {
        if xi.len() < self.base.len() {
            return Err(Error::Precondition(format!(
                "boundary prefix of length {} is shorter than shadow base of length {}",
                xi.len(),
                self.base.len()
            )));
        }
        Ok(self.base.common_prefix_len(&xi.prefix) >= self.required_prefix())
    }

    /// Diameter of the shadow in the visual metric, `a^{-⌈|x|-κ⌉}`.
    pub fn visual_diameter(&self, a: f64) -> f64 {
        a.powi(-(self.required_prefix() as i32))
    }
}

/// Length-`k` prefix of `x`.
pub fn prefix(x: &Word, k: usize) -> Result<Word> {
    if k > x.len() {
        return Err(Error::Precondition(format!(
            "prefix length {k} exceeds word length {}",
            x.len()
        )));
    }
    Ok(x.truncated(k))
}
