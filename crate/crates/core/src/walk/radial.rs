//! Time recursion for isotropic nearest-neighbour walks.
//!
//! For an isotropic walk `p_n(e, x)` depends only on `|x|`, so the walk is
//! the birth–death chain of its radius. The recursion runs on the
//! symmetrized vector `y_n[k] = √|S_k| · q_n[k]`, where `q_n[k]` is the
//! common value of `p_n(e, x)` on the sphere of radius `k`. In these
//! coordinates the chain is a symmetric tridiagonal operator of norm `ρ`.
//! Each step is renormalized by its maximum and the scale is carried in
//! log form, so very deep kernels neither underflow nor lose relative
//! precision.

use super::step::StepDistribution;
use crate::error::{Error, Result};

/// Below this, renormalized entries are flushed to zero.
const FLUSH: f64 = 1e-300;

#[derive(Clone, Debug)]
pub struct RadialKernel {
    degree: usize,
    laziness: f64,
    depth: usize,
    radius_cap: usize,
    /// `½ ln |S_k|` for `k ≤ radius_cap`.
    log_c: Vec<f64>,
    log_scale: Vec<f64>,
    /// Row-major `(depth + 1) × (radius_cap + 1)` renormalized `y_n[k]`.
    rows: Vec<f64>,
}

impl RadialKernel {
    /// Runs the recursion to time `depth`, keeping radii up to `radius_cap`.
    pub fn new(mu: &StepDistribution, depth: usize, radius_cap: usize) -> Result<Self> {
        if !mu.is_isotropic() {
            return Err(Error::Precondition(
                "radial kernel requires an isotropic nearest-neighbour walk".into(),
            ));
        }
        let group = mu.group();
        let d = group.alphabet_size() as f64;
        let p0 = mu.laziness();
        let width = radius_cap + 1;
        let log_c: Vec<f64> = (0..width).map(|k| 0.5 * group.log_sphere_size(k)).collect();

        // symmetrized transition coefficients
        let c01 = (1.0 - p0) / d.sqrt();
        let cin = (1.0 - p0) * (d - 1.0).sqrt() / d;

        let mut rows = vec![0.0; (depth + 1) * width];
        let mut log_scale = vec![0.0; depth + 1];
        let mut y = vec![0.0; depth + 3];
        let mut ny = vec![0.0; depth + 3];
        y[0] = 1.0;
        let mut hi = 0usize;
        for n in 0..=depth {
            let keep = hi.min(radius_cap);
            rows[n * width..n * width + keep + 1].copy_from_slice(&y[..keep + 1]);
            if n == depth {
                break;
            }
            // radii beyond this bound cannot come back under the cap in time
            let reach = (radius_cap + depth).saturating_sub(n + 1);
            let new_hi = (hi + 1).min(reach);
            let at = |v: &[f64], k: usize| if k <= hi { v[k] } else { 0.0 };
            let mut max = 0.0f64;
            for k in 0..=new_hi {
                let v = match k {
                    0 => p0 * at(&y, 0) + c01 * at(&y, 1),
                    1 => p0 * at(&y, 1) + c01 * at(&y, 0) + cin * at(&y, 2),
                    _ => p0 * at(&y, k) + cin * (at(&y, k - 1) + at(&y, k + 1)),
                };
                ny[k] = v;
                max = max.max(v);
            }
            let inv = 1.0 / max;
            let mut last = 0;
            for (k, v) in ny.iter_mut().enumerate().take(new_hi + 1) {
                *v *= inv;
                if *v < FLUSH {
                    *v = 0.0;
                } else {
                    last = k;
                }
            }
            log_scale[n + 1] = log_scale[n] + max.ln();
            std::mem::swap(&mut y, &mut ny);
            hi = last;
        }
        Ok(RadialKernel {
            degree: group.alphabet_size(),
            laziness: p0,
            depth,
            radius_cap,
            log_c,
            log_scale,
            rows,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn radius_cap(&self) -> usize {
        self.radius_cap
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn laziness(&self) -> f64 {
        self.laziness
    }

    /// Bipartite walks return only at even times.
    pub fn period(&self) -> usize {
        if self.laziness == 0.0 {
            2
        } else {
            1
        }
    }

    #[inline]
    fn y(&self, n: usize, k: usize) -> f64 {
        self.rows[n * (self.radius_cap + 1) + k]
    }

    /// `ln p_n(e, x)` for any `x` with `|x| = k`; `-∞` when zero.
    pub fn log_q(&self, n: usize, k: usize) -> f64 {
        let y = self.y(n, k);
        if y > 0.0 {
            self.log_scale[n] + y.ln() - self.log_c[k]
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn q(&self, n: usize, k: usize) -> f64 {
        self.log_q(n, k).exp()
    }

    /// `P(|X_n| = k) = |S_k| q_n[k]`.
    pub fn radius_probability(&self, n: usize, k: usize) -> f64 {
        let y = self.y(n, k);
        if y > 0.0 {
            (self.log_scale[n] + y.ln() + self.log_c[k]).exp()
        } else {
            0.0
        }
    }

    /// `ln p_n(e, e)` for `n = 0..=depth`.
    pub fn log_returns(&self) -> Vec<f64> {
        (0..=self.depth).map(|n| self.log_q(n, 0)).collect()
    }

    /// `½ ln |S_k|`; `p_n(e, x_k) ≤ ρ^n e^{-log_c(k)}`.
    pub fn log_c(&self, k: usize) -> f64 {
        self.log_c[k]
    }

    /// Time weights `r^n e^{log_scale(n)}` for a weight `r`.
    pub(crate) fn time_weights(&self, r: f64) -> Vec<f64> {
        let lr = r.ln();
        (0..=self.depth)
            .map(|n| (n as f64 * lr + self.log_scale[n]).exp())
            .collect()
    }

    /// Terms `r^n p_n(e, x_k)` given precomputed time weights.
    pub(crate) fn terms<'a>(&'a self, weights: &'a [f64], k: usize) -> impl Fn(usize) -> f64 + 'a {
        let ck = (-self.log_c[k]).exp();
        move |n| weights[n] * self.y(n, k) * ck
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupModel;
    use approx::assert_relative_eq;

    /// Brute-force convolution on the word ball, independent of the radial
    /// reduction.
    fn brute_heat_kernel(g: &GroupModel, p0: f64, steps: usize) -> Vec<Vec<f64>> {
        let words = g.enumerate_ball(steps, 1 << 22).unwrap();
        let index: std::collections::HashMap<_, _> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut v = vec![0.0; words.len()];
        v[0] = 1.0;
        let d = g.alphabet_size() as f64;
        let mut out = vec![];
        for _ in 0..=steps {
            let mut by_radius = vec![0.0; steps + 1];
            for (i, w) in words.iter().enumerate() {
                if v[i] > 0.0 {
                    by_radius[w.len()] = v[i];
                }
            }
            out.push(by_radius);
            let mut nv = vec![0.0; words.len()];
            for (i, w) in words.iter().enumerate() {
                if v[i] == 0.0 {
                    continue;
                }
                nv[i] += p0 * v[i];
                for s in g.generators() {
                    let t = g.mul(w, &s);
                    if let Some(&j) = index.get(&t) {
                        nv[j] += (1.0 - p0) / d * v[i];
                    }
                }
            }
            v = nv;
        }
        out
    }

    #[test]
    fn matches_brute_force_convolution() {
        for (g, p0) in [
            (GroupModel::free(2).unwrap(), 0.0),
            (GroupModel::free(2).unwrap(), 0.5),
            (GroupModel::z2_product(4).unwrap(), 0.0),
            (GroupModel::free(3).unwrap(), 0.25),
        ] {
            let steps = 7;
            let brute = brute_heat_kernel(&g, p0, steps);
            let mu = StepDistribution::lazy(&g, p0).unwrap();
            let kern = RadialKernel::new(&mu, steps, steps).unwrap();
            for n in 0..=steps {
                for k in 0..=n {
                    assert_relative_eq!(kern.q(n, k), brute[n][k], max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn first_returns_of_simple_walk_on_f2() {
        // p_2 = 1/4, p_4 = 7/64 on F_2 (counting closed paths)
        let g = GroupModel::free(2).unwrap();
        let kern = RadialKernel::new(&StepDistribution::simple(&g), 8, 8).unwrap();
        assert_relative_eq!(kern.q(2, 0), 0.25, max_relative = 1e-14);
        assert_relative_eq!(kern.q(4, 0), 28.0 / 256.0, max_relative = 1e-14);
        assert_eq!(kern.q(3, 0), 0.0);
    }

    #[test]
    fn mass_is_conserved_without_cap() {
        let g = GroupModel::free(2).unwrap();
        let mu = StepDistribution::lazy(&g, 0.3).unwrap();
        let n = 300;
        let kern = RadialKernel::new(&mu, n, n).unwrap();
        for t in [0, 1, 50, n] {
            let mass: f64 = (0..=t).map(|k| kern.radius_probability(t, k)).sum();
            assert_relative_eq!(mass, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn capped_kernel_agrees_with_uncapped() {
        let g = GroupModel::free(2).unwrap();
        let mu = StepDistribution::simple(&g);
        let full = RadialKernel::new(&mu, 400, 400).unwrap();
        let capped = RadialKernel::new(&mu, 400, 5).unwrap();
        for n in (0..=400).step_by(37) {
            for k in 0..=5 {
                let (a, b) = (full.log_q(n, k), capped.log_q(n, k));
                if a.is_finite() {
                    assert_relative_eq!(a, b, max_relative = 1e-12);
                } else {
                    assert!(b.is_infinite());
                }
            }
        }
    }
}
