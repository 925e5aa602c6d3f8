use crate::brw::TraceRecord;
use crate::error::{Error, Result};
use crate::group::{check_visual_parameter, BoundaryPrefix, GroupModel, Word};
use crate::numerics::quantile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Boundary points of one or more independent limit sets, as prefixes.
///
/// `source[i]` identifies the run sample `i` came from; prefixes are
/// distinct within each source.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySampleSet {
    pub a: f64,
    pub prefix_len: usize,
    pub samples: Vec<BoundaryPrefix>,
    pub source: Vec<u64>,
}

impl BoundarySampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Counts of unordered same-source pairs by common prefix length
    /// `0..prefix_len`.
    pub fn pair_histogram(&self) -> Vec<u64> {
        let mut hist = vec![0u64; self.prefix_len.max(1)];
        let mut order: Vec<usize> = (0..self.samples.len()).collect();
        order.sort_by(|&i, &j| {
            (self.source[i], &self.samples[i].prefix).cmp(&(self.source[j], &self.samples[j].prefix))
        });
        let mut start = 0;
        while start < order.len() {
            let src = self.source[order[start]];
            let mut end = start;
            while end < order.len() && self.source[order[end]] == src {
                end += 1;
            }
            let words: Vec<&Word> = order[start..end].iter().map(|&i| &self.samples[i].prefix).collect();
            source_histogram(&words, &mut hist);
            start = end;
        }
        hist
    }

    /// Number of same-source pairs with witnessed divergence.
    pub fn pair_count(&self) -> u64 {
        self.pair_histogram().iter().sum()
    }

    pub fn merge(mut self, other: BoundarySampleSet) -> Result<Self> {
        if self.prefix_len != other.prefix_len || self.a != other.a {
            return Err(Error::Precondition(
                "merged sample sets must share prefix length and visual parameter".into(),
            ));
        }
        self.samples.extend(other.samples);
        self.source.extend(other.source);
        Ok(self)
    }
}

/// Adds the pair counts of one sorted, duplicate-free list of equal-length
/// words. In sorted order, words sharing a prefix of length `c` are
/// contiguous, so the pairs with common prefix at least `c` are
/// `Σ_blocks n(n−1)/2` over the blocks of equal length-`c` prefixes.
fn source_histogram(words: &[&Word], hist: &mut [u64]) {
    let n = words.len();
    if n < 2 {
        return;
    }
    let k = hist.len();
    // lcp[i] = common prefix of words[i-1] and words[i]
    let lcp: Vec<usize> = (1..n).map(|i| words[i - 1].common_prefix_len(words[i])).collect();
    let mut at_least = vec![0u64; k + 1];
    for (c, slot) in at_least.iter_mut().enumerate() {
        let mut run = 1u64;
        let mut total = 0u64;
        for &l in &lcp {
            if l >= c {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total += run * (run - 1) / 2;
        *slot = total;
    }
    for c in 0..k {
        hist[c] += at_least[c] - at_least[c + 1];
    }
}

/// Quantile `q` of `|X_u| / m` over the last generation `m` of a trace.
pub fn speed_quantile(traces: &[TraceRecord], q: f64) -> Option<f64> {
    let speeds: Vec<f64> = traces
        .iter()
        .filter(|t| t.generations > 0)
        .flat_map(|t| {
            let m = t.generations as f64;
            t.final_positions.iter().map(move |&id| t.trie().len(id) as f64 / m)
        })
        .collect();
    quantile(&speeds, q)
}

/// `⌊0.8 ℓ̂ m⌋` with `ℓ̂` the 5th percentile of final speeds.
pub fn default_prefix_len(traces: &[TraceRecord]) -> Result<usize> {
    let depth = traces.iter().map(|t| t.generations).min().unwrap_or(0);
    let ell = speed_quantile(traces, 0.05)
        .ok_or_else(|| Error::InsufficientData("no particles in the last generation".into()))?;
    Ok((0.8 * ell * depth as f64).floor() as usize)
}

/// Length-`k` prefixes of the last generation of each trace, which must have
/// reached generation `depth`.
///
/// `k` may not exceed `ℓ̂ · depth` with `ℓ̂` the 5th percentile of final
/// speeds; the few particles closer to `e` than `k` are skipped.
pub fn sample_boundary(traces: &[TraceRecord], depth: usize, k: usize, a: f64) -> Result<BoundarySampleSet> {
    check_visual_parameter(a)?;
    let ell = speed_quantile(traces, 0.05).unwrap_or(0.0);
    if k as f64 > ell * depth as f64 + 1e-9 {
        return Err(Error::Precondition(format!(
            "prefix length {k} exceeds ℓ̂·depth = {:.2}",
            ell * depth as f64
        )));
    }
    let mut set = BoundarySampleSet {
        a,
        prefix_len: k,
        samples: vec![],
        source: vec![],
    };
    for t in traces {
        if t.generations != depth || t.truncated || t.final_positions.is_empty() {
            return Err(Error::InsufficientData(format!(
                "replica {} did not reach generation {depth} intact",
                t.replica
            )));
        }
        let prefixes: BTreeSet<Word> = t
            .final_positions
            .iter()
            .filter(|&&id| t.trie().len(id) >= k)
            .map(|&id| t.trie().word(t.trie().prefix(id, k)))
            .collect();
        for p in prefixes {
            set.samples.push(BoundaryPrefix::new(p, depth));
            set.source.push(t.replica);
        }
    }
    Ok(set)
}

/// `count` independent uniform points of the whole boundary, each given by
/// its first `k` letters, as a single source.
pub fn uniform_boundary_samples(group: &GroupModel, count: usize, k: usize, a: f64, seed: u64) -> Result<BoundarySampleSet> {
    check_visual_parameter(a)?;
    if k == 0 {
        return Err(Error::Precondition("prefix length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = group.alphabet_size();
    let mut words = BTreeSet::new();
    for _ in 0..count {
        let mut w = Word::identity();
        while w.len() < k {
            let l = rng.random_range(0..d) as u8;
            let before = w.len();
            let mut c = w.clone();
            group.push_letter(&mut c, l);
            if c.len() > before {
                w = c;
            }
        }
        words.insert(w);
    }
    let samples: Vec<BoundaryPrefix> = words.into_iter().map(|w| BoundaryPrefix::new(w, k)).collect();
    Ok(BoundarySampleSet {
        a,
        prefix_len: k,
        source: vec![0; samples.len()],
        samples,
    })
}

/// Points of the visited sphere `P_radius` of each trace, one source per
/// trace. In a run killed beyond radius `radius + margin` these are the
/// first `radius` letters of the escaping rays, up to a bias that decays
/// geometrically in the margin.
pub fn sphere_boundary_samples(traces: &[TraceRecord], radius: usize, a: f64) -> Result<BoundarySampleSet> {
    check_visual_parameter(a)?;
    let mut set = BoundarySampleSet {
        a,
        prefix_len: radius,
        samples: vec![],
        source: vec![],
    };
    for t in traces {
        if t.truncated {
            return Err(Error::InsufficientData(format!("replica {} was truncated", t.replica)));
        }
        let words: BTreeSet<Word> = t.visited_words(radius).into_iter().collect();
        for w in words {
            set.samples.push(BoundaryPrefix::new(w, radius));
            set.source.push(t.replica);
        }
    }
    Ok(set)
}
