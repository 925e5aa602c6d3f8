//! Heat kernels of arbitrary finitely supported walks on a word ball.
//!
//! The walk is run on the ball `B(K)` and killed when it leaves, giving the
//! Green function of the ball, which increases to the full Green function as
//! `K` grows. Everything here is heuristic in the sense that the spatial
//! truncation is corrected by extrapolation in `K` rather than bounded.

use super::rho::SpectralRadiusEstimate;
use super::series::GreenValue;
use super::step::StepDistribution;
use crate::error::{Error, Result};
use crate::group::{Word, WordId, WordTrie};
use crate::numerics::{neville_to_zero, CompensatedSum};

const NONE: u32 = u32::MAX;

/// Killed heat kernel on one ball.
#[derive(Clone, Debug)]
pub struct BallKernel {
    trie: WordTrie,
    ball_radius: usize,
    depth: usize,
    store_len: usize,
    /// `(depth + 1) × store_len` values `p_n^{B(K)}(e, x)`.
    rows: Vec<f64>,
    /// Mass still inside the ball at each time.
    alive: Vec<f64>,
}

impl BallKernel {
    pub fn new(
        mu: &StepDistribution,
        ball_radius: usize,
        store_radius: usize,
        depth: usize,
        node_budget: usize,
    ) -> Result<Self> {
        let group = mu.group();
        let size = group.ball_size(ball_radius);
        if size > node_budget as u128 {
            return Err(Error::BudgetExceeded {
                what: format!("ball of radius {ball_radius}"),
                needed: size,
                budget: node_budget as u128,
            });
        }
        let ball_len = size as usize;
        let store_len = group.ball_size(store_radius.min(ball_radius)) as usize;
        let mut trie = WordTrie::new(group);
        for w in group.enumerate_ball(ball_radius, size)? {
            trie.intern(&w);
        }
        let steps = mu.support();
        let m = steps.len();
        let mut nbr = vec![NONE; ball_len * m];
        for i in 0..ball_len {
            for (j, (w, _)) in steps.iter().enumerate() {
                let t = trie.mul_word(WordId(i as u32), w);
                if trie.len(t) <= ball_radius {
                    nbr[i * m + j] = t.0;
                }
            }
        }
        let probs: Vec<f64> = steps.iter().map(|(_, p)| *p).collect();
        let p0 = mu.laziness();
        let mut v = vec![0.0; ball_len];
        let mut nv = vec![0.0; ball_len];
        v[0] = 1.0;
        let mut rows = Vec::with_capacity((depth + 1) * store_len);
        let mut alive = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            rows.extend_from_slice(&v[..store_len]);
            alive.push(v.iter().sum());
            if n == depth {
                break;
            }
            nv.fill(0.0);
            for i in 0..ball_len {
                let vi = v[i];
                if vi == 0.0 {
                    continue;
                }
                nv[i] += p0 * vi;
                for j in 0..m {
                    let t = nbr[i * m + j];
                    if t != NONE {
                        nv[t as usize] += probs[j] * vi;
                    }
                }
            }
            std::mem::swap(&mut v, &mut nv);
        }
        Ok(BallKernel {
            trie,
            ball_radius,
            depth,
            store_len,
            rows,
            alive,
        })
    }

    pub fn ball_radius(&self) -> usize {
        self.ball_radius
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn id(&self, x: &Word) -> Option<usize> {
        self.trie.get(x).map(|i| i.0 as usize).filter(|&i| i < self.store_len)
    }

    pub fn p(&self, n: usize, idx: usize) -> f64 {
        self.rows[n * self.store_len + idx]
    }

    /// Decay rate of the killed walk, from the last return ratios.
    pub fn killed_rate(&self) -> f64 {
        let n = self.depth - (self.depth % 2);
        let a = self.p(n, 0);
        let b = self.p(n - 2, 0);
        if a > 0.0 && b > 0.0 {
            (a / b).sqrt()
        } else {
            (self.alive[self.depth] / self.alive[self.depth - 1]).max(0.0)
        }
    }

    /// `Σ_n r^n p^{B(K)}_n(e, x)` with a geometric tail at the killed rate.
    pub fn killed_green(&self, r: f64, idx: usize) -> Option<f64> {
        let q = r * self.killed_rate();
        if q >= 1.0 {
            return None;
        }
        let mut acc = CompensatedSum::new();
        let mut rn = 1.0;
        for n in 0..=self.depth {
            acc.add(rn * self.p(n, idx));
            rn *= r;
        }
        // consecutive pairs of terms decay by q² once the killed walk has mixed
        let last = r.powi(self.depth as i32) * self.p(self.depth, idx)
            + r.powi(self.depth as i32 - 1) * self.p(self.depth - 1, idx);
        acc.add(last * q * q / (1.0 - q * q));
        Some(acc.value())
    }
}

/// Heat kernels on nested balls `B(K-s)`, ..., `B(K)`.
#[derive(Clone, Debug)]
pub struct GeneralKernel {
    kernels: Vec<BallKernel>,
}

impl GeneralKernel {
    pub fn new(
        mu: &StepDistribution,
        ball_radius: usize,
        store_radius: usize,
        depth: usize,
        node_budget: usize,
    ) -> Result<Self> {
        if ball_radius < store_radius + 4 {
            return Err(Error::Precondition(
                "ball radius must exceed the stored radius by at least 4".into(),
            ));
        }
        let kernels = (ball_radius - 3..=ball_radius)
            .map(|k| BallKernel::new(mu, k, store_radius, depth, node_budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(GeneralKernel { kernels })
    }

    pub fn largest(&self) -> &BallKernel {
        self.kernels.last().unwrap()
    }

    /// `ρ` from the killed rates `ρ_K ↑ ρ`, extrapolated in `1/K²`.
    pub fn spectral_radius(&self) -> SpectralRadiusEstimate {
        let hs: Vec<f64> = self
            .kernels
            .iter()
            .rev()
            .map(|k| 1.0 / (k.ball_radius() as f64 + 1.0).powi(2))
            .collect();
        let fs: Vec<f64> = self.kernels.iter().rev().map(|k| k.killed_rate()).collect();
        let diag = neville_to_zero(&hs[..3], &fs[..3]);
        let rho_hat = diag[2].max(fs[0]);
        let residual = (diag[2] - diag[1]).abs().max(1e-12);
        SpectralRadiusEstimate {
            rho_hat,
            residual,
            converged: false,
            depth: self.largest().depth(),
            roots: vec![],
        }
    }

    /// Green value at `x`, extrapolated over the nested balls.
    pub fn green(&self, r: f64, x: &Word) -> Result<GreenValue> {
        let big = self.largest();
        let idx = big.id(x).ok_or_else(|| {
            Error::Precondition(format!("word of length {} outside stored ball", x.len()))
        })?;
        let mut vals = vec![];
        for k in &self.kernels {
            vals.push(k.killed_green(r, idx).ok_or_else(|| {
                Error::OutsideRegime(format!("weight {r} too large for killed series"))
            })?);
        }
        let n = vals.len();
        let d1 = vals[n - 1] - vals[n - 2];
        let d0 = vals[n - 2] - vals[n - 3];
        let (value, err) = if d0 > 0.0 && d1 > 0.0 && d1 < d0 {
            let t = d1 / d0;
            let corr = d1 * t / (1.0 - t);
            (vals[n - 1] + corr, corr.abs() + (d1 - d0 * t).abs())
        } else {
            (vals[n - 1], d1.abs())
        };
        Ok(GreenValue {
            value,
            error_bound: err,
            truncation_n: big.depth(),
            heuristic: true,
        })
    }
}
