use super::samples::BoundarySampleSet;
use crate::brw::TraceRecord;
use crate::error::{Error, Result};
use crate::group::{check_visual_parameter, Word};
use crate::numerics::{fit_line, fit_line_weighted};
use std::collections::BTreeSet;

/// Shadow-cover counts `N_k` at scales `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverEstimate {
    pub epsilon: f64,
    /// `(k, N_k)`.
    pub counts: Vec<(usize, u64)>,
}

impl CoverEstimate {
    /// Prefix length read off a scale: the shadow `℧(x, εk)` of `x ∈ S_k`
    /// is the cylinder of the first `⌈k(1−ε)⌉` letters of `x`.
    pub fn prefix_len(&self, k: usize) -> usize {
        ((k as f64) * (1.0 - self.epsilon) - 1e-9).ceil().max(0.0) as usize
    }
}

/// `N_k` = number of distinct length-`⌈k(1−ε)⌉` prefixes of `P_k`, pooled
/// over traces by union.
pub fn shadow_cover_counts(traces: &[TraceRecord], epsilon: f64, scales: std::ops::RangeInclusive<usize>) -> Result<CoverEstimate> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Precondition(format!("shadow parameter ε must lie in [0, 1], got {epsilon}")));
    }
    let mut cover = CoverEstimate {
        epsilon,
        counts: vec![],
    };
    for k in scales {
        let len = cover.prefix_len(k);
        let mut union: BTreeSet<Word> = BTreeSet::new();
        for t in traces {
            for &id in t.visited.get(k).map(|v| v.as_slice()).unwrap_or(&[]) {
                let p = t.trie().word(t.trie().prefix(id, len));
                union.insert(p);
            }
        }
        cover.counts.push((k, union.len() as u64));
    }
    Ok(cover)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DimensionMethod {
    Box,
    Correlation,
}

/// A dimension estimate with the regression behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionEstimate {
    pub method: DimensionMethod,
    pub value: f64,
    pub stderr: f64,
    /// Scales (box: `k`; correlation: common prefix length) used in the fit.
    pub window: (usize, usize),
    pub points: usize,
}

/// Slope of `log N_k` against `⌈k(1−ε)⌉ log a`.
pub fn box_dimension(cover: &CoverEstimate, a: f64) -> Result<DimensionEstimate> {
    check_visual_parameter(a)?;
    if cover.counts.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "box counting needs at least 10 scales, got {}",
            cover.counts.len()
        )));
    }
    if cover.counts.iter().any(|&(_, n)| n == 0) {
        return Err(Error::InsufficientData("empty cover at some scale".into()));
    }
    let xs: Vec<f64> = cover.counts.iter().map(|&(k, _)| cover.prefix_len(k) as f64 * a.ln()).collect();
    let ys: Vec<f64> = cover.counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(DimensionEstimate {
        method: DimensionMethod::Box,
        value: fit.slope.max(0.0),
        stderr: fit.slope_stderr,
        window: (cover.counts[0].0, cover.counts.last().unwrap().0),
        points: fit.points,
    })
}

/// Minimum number of pairs in a correlation shell used by the fit.
const MIN_SHELL_PAIRS: u64 = 20;

/// Correlation (Grassberger–Procaccia) dimension of same-source sample pairs.
///
/// `C(c)`, the number of pairs at visual distance at most `a^{-c}`, scales
/// like `a^{-c D₂}`; `D₂` is minus the slope of `log C(c)` against
/// `c log a`, fitted with weights `C(c)` over `window` (default: the middle
/// half of the prefix length) restricted to well-populated shells. A
/// correlation integral that is flat and nonzero over the window, or a set
/// without same-source pairs, has dimension 0.
pub fn correlation_dimension(set: &BoundarySampleSet, window: Option<(usize, usize)>) -> Result<DimensionEstimate> {
    check_visual_parameter(set.a)?;
    let hist = set.pair_histogram();
    let pairs: u64 = hist.iter().sum();
    let k = set.prefix_len;
    let (lo, hi) = window.unwrap_or((k.div_ceil(4), (3 * k) / 4));
    let mut cumulative = vec![0u64; k + 1];
    for c in (0..k).rev() {
        cumulative[c] = cumulative[c + 1] + hist[c];
    }
    let (lo, hi) = (lo.max(1), hi.min(k.saturating_sub(1)));
    let flat = lo <= hi && cumulative[hi] > 0 && cumulative[lo] == cumulative[hi];
    if pairs == 0 || flat {
        // every source seen at one point, or no pair separates inside the window
        return Ok(DimensionEstimate {
            method: DimensionMethod::Correlation,
            value: 0.0,
            stderr: 0.0,
            window: (lo, hi),
            points: 0,
        });
    }
    if pairs < 1000 {
        return Err(Error::InsufficientData(format!(
            "correlation dimension needs 1000 pairs, got {pairs}"
        )));
    }
    let shells: Vec<usize> = (lo..=hi)
        .filter(|&c| cumulative[c] >= MIN_SHELL_PAIRS)
        .collect();
    if shells.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} populated correlation shells in {lo}..={hi}",
            shells.len()
        )));
    }
    let la = set.a.ln();
    let xs: Vec<f64> = shells.iter().map(|&c| c as f64 * la).collect();
    let ys: Vec<f64> = shells.iter().map(|&c| (cumulative[c] as f64).ln()).collect();
    let ws: Vec<f64> = shells.iter().map(|&c| cumulative[c] as f64).collect();
    let fit = fit_line_weighted(&xs, &ys, &ws)?;
    Ok(DimensionEstimate {
        method: DimensionMethod::Correlation,
        value: (-fit.slope).max(0.0),
        stderr: fit.slope_stderr,
        window: (shells[0], *shells.last().unwrap()),
        points: fit.points,
    })
}

/// Mean pair energy `Σ d_a(ξ,ξ')^{-h} / pairs` over same-source pairs.
pub fn pair_energy(set: &BoundarySampleSet, h: f64) -> Result<f64> {
    let hist = set.pair_histogram();
    let pairs: u64 = hist.iter().sum();
    if pairs == 0 {
        return Err(Error::InsufficientData("no pairs with witnessed divergence".into()));
    }
    let la = set.a.ln();
    let total: f64 = hist
        .iter()
        .enumerate()
        .map(|(c, &n)| n as f64 * (h * la * c as f64).exp())
        .sum();
    Ok(total / pairs as f64)
}

/// Energy-drift diagnostic: the largest `h` on the grid whose pair energy
/// changes by less than 20% between a shallow and a deeper sample set.
///
/// Returns the estimate and `(h, deep/shallow)` for every grid point.
pub fn energy_drift_dimension(
    shallow: &BoundarySampleSet,
    deep: &BoundarySampleSet,
    h_grid: &[f64],
) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut best = 0.0;
    let mut table = vec![];
    let mut bounded = true;
    for &h in h_grid {
        let ratio = pair_energy(deep, h)? / pair_energy(shallow, h)?;
        table.push((h, ratio));
        if bounded && (ratio - 1.0).abs() < 0.2 {
            best = h;
        } else {
            bounded = false;
        }
    }
    Ok((best, table))
}
