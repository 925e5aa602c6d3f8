use crate::error::{Error, Result};
use crate::rng::DRAWS_PER_PARTICLE;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

/// Offspring law `ν` on `{1, …, k_max}`.
///
/// `ν(0) = 0` is enforced, so populations never die out on their own. The
/// support is capped so that a particle's offspring count and all of its
/// children's steps fit in one keyed random stream.
#[derive(Clone, Debug)]
pub struct OffspringDistribution {
    pmf: Vec<f64>,
    sampler: WeightedIndex<f64>,
    label: String,
}

impl PartialEq for OffspringDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.pmf == other.pmf
    }
}

pub const MAX_OFFSPRING: usize = DRAWS_PER_PARTICLE - 1;

impl OffspringDistribution {
    /// `pmf[k]` is `ν(k)`; `pmf[0]` must vanish.
    pub fn from_pmf(pmf: Vec<f64>) -> Result<Self> {
        Self::labelled(pmf, None)
    }

    fn labelled(mut pmf: Vec<f64>, label: Option<String>) -> Result<Self> {
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::NotStochastic("offspring probabilities must be finite and nonnegative".into()));
        }
        if pmf.first().copied().unwrap_or(0.0) != 0.0 {
            return Err(Error::NotStochastic("offspring law must put no mass on 0".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic(format!("offspring probabilities sum to {total}")));
        }
        if pmf.len() - 1 > MAX_OFFSPRING {
            return Err(Error::Precondition(format!(
                "offspring counts above {MAX_OFFSPRING} are not supported"
            )));
        }
        let sampler = WeightedIndex::new(&pmf)
            .map_err(|e| Error::NotStochastic(format!("offspring law: {e}")))?;
        let label = label.unwrap_or_else(|| {
            let parts: Vec<String> = pmf
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(k, p)| format!("{k}:{p}"))
                .collect();
            format!("pmf:{}", parts.join(","))
        });
        Ok(OffspringDistribution { pmf, sampler, label })
    }

    /// Exactly `k` children.
    pub fn degenerate(k: usize) -> Result<Self> {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        Self::labelled(pmf, Some(format!("fixed:{k}")))
    }

    /// One or two children with mean `λ ∈ [1, 2]`.
    pub fn binary(lambda: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&lambda) {
            return Err(Error::OutsideRegime(format!("binary offspring needs 1 ≤ λ ≤ 2, got {lambda}")));
        }
        Self::labelled(vec![0.0, 2.0 - lambda, lambda - 1.0], Some(format!("binary:{lambda}")))
    }

    /// One or three children with mean `λ ∈ [1, 3]`; larger variance than
    /// [`binary`](Self::binary) at the same mean.
    pub fn one_three(lambda: f64) -> Result<Self> {
        if !(1.0..=3.0).contains(&lambda) {
            return Err(Error::OutsideRegime(format!("one-three offspring needs 1 ≤ λ ≤ 3, got {lambda}")));
        }
        Self::labelled(
            vec![0.0, (3.0 - lambda) / 2.0, 0.0, (lambda - 1.0) / 2.0],
            Some(format!("one_three:{lambda}")),
        )
    }

    /// `binary:λ`, `one_three:λ`, `fixed:k` or `pmf:k:p,k:p,…`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Precondition(format!("offspring spec `{spec}` lacks a parameter")))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::Precondition(format!("bad number `{s}` in offspring spec")))
        };
        match kind {
            "binary" => Self::binary(num(arg)?),
            "one_three" => Self::one_three(num(arg)?),
            "fixed" => Self::degenerate(
                arg.trim()
                    .parse()
                    .map_err(|_| Error::Precondition(format!("bad count `{arg}`")))?,
            ),
            "pmf" => {
                let mut pmf = vec![];
                for part in arg.split(',') {
                    let (k, p) = part
                        .split_once(':')
                        .ok_or_else(|| Error::Precondition(format!("bad pmf entry `{part}`")))?;
                    let k: usize = k
                        .trim()
                        .parse()
                        .map_err(|_| Error::Precondition(format!("bad count `{k}`")))?;
                    if k > MAX_OFFSPRING {
                        return Err(Error::Precondition(format!("offspring count {k} too large")));
                    }
                    if pmf.len() <= k {
                        pmf.resize(k + 1, 0.0);
                    }
                    pmf[k] += num(p)?;
                }
                Self::labelled(pmf, Some(spec.to_string()))
            }
            _ => Err(Error::Precondition(format!("unknown offspring family `{kind}`"))),
        }
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn max_offspring(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `λ = E[ξ]`.
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `σ² = E[ξ²]`.
    pub fn second_moment(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum()
    }

    /// `E[ξ(ξ−1)]`, the mean number of ordered sibling pairs.
    pub fn factorial_moment(&self) -> f64 {
        self.second_moment() - self.mean()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }
}
