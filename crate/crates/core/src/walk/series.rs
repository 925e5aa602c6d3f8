//! Summation of `Σ_n (n+1)^m r^n p_n` with tail control, `m ∈ {0, 1}`.

use super::rho::SpectralRadiusEstimate;
use crate::error::{Error, Result};
use crate::numerics::{least_squares, power_law_tail, CompensatedSum};

/// A Green-function value with its error control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    /// Absolute error bound; a rigorous bound unless `heuristic` is set.
    pub error_bound: f64,
    /// Last time index summed explicitly.
    pub truncation_n: usize,
    /// Set when the tail was modelled rather than bounded.
    pub heuristic: bool,
}

impl GreenValue {
    pub fn relative_error(&self) -> f64 {
        self.error_bound / self.value.abs()
    }
}

/// One time series `p_n(e, x)`, `n = 0..=depth`.
pub(crate) struct SeriesSpec<'a> {
    pub depth: usize,
    /// `r^n p_n` for `n ≤ depth`.
    pub term: &'a dyn Fn(usize) -> f64,
    /// `ln p_n`, `-∞` when zero.
    pub log_p: &'a dyn Fn(usize) -> f64,
    /// `ln C` in the a priori bound `p_n ≤ C ρ^n`.
    pub log_prefactor: f64,
    /// Extra factor `(n+1)^moment` in every term.
    pub moment: u32,
}

impl SeriesSpec<'_> {
    fn weighted_term(&self, n: usize) -> f64 {
        (self.term)(n) * ((n + 1) as f64).powi(self.moment as i32)
    }

    /// `Σ_{n > N} (n+1)^m x^n`.
    fn geometric_tail(&self, x: f64, n: usize) -> f64 {
        let xn1 = ((n + 1) as f64 * x.ln()).exp();
        match self.moment {
            0 => xn1 / (1.0 - x),
            _ => xn1 * ((n + 2) as f64 - (n + 1) as f64 * x) / ((1.0 - x) * (1.0 - x)),
        }
    }
}

/// Certified sum: stops at the first `N` where `C Σ_{n>N} (n+1)^m (rρ̄)^n`
/// falls below `tol` times the partial sum. `None` if that never happens.
pub(crate) fn certified_sum(
    spec: &SeriesSpec<'_>,
    r: f64,
    rho: &SpectralRadiusEstimate,
    tol: f64,
) -> Option<GreenValue> {
    let x_bar = r * rho.upper();
    if x_bar >= 1.0 {
        return None;
    }
    let pref = spec.log_prefactor.exp();
    let mut acc = CompensatedSum::new();
    for n in 0..=spec.depth {
        acc.add(spec.weighted_term(n));
        let s = acc.value();
        // the bound is only evaluated once the partial sum is nonzero
        if s > 0.0 && (n % 16 == 0 || n == spec.depth) {
            let bound = pref * spec.geometric_tail(x_bar, n);
            if bound <= tol * s {
                return Some(GreenValue {
                    value: s,
                    error_bound: bound,
                    truncation_n: n,
                    heuristic: false,
                });
            }
        }
    }
    None
}

/// Full partial sum plus a fitted tail `p_n ≈ ρ^n n^{-3/2}(c_0 + c_1/n + c_2/n²)`.
pub(crate) fn modelled_sum(
    spec: &SeriesSpec<'_>,
    r: f64,
    rho: &SpectralRadiusEstimate,
) -> Result<GreenValue> {
    let mut acc = CompensatedSum::new();
    for n in 0..=spec.depth {
        acc.add(spec.weighted_term(n));
    }
    let (tail, err) = model_tail(spec, r, rho)?;
    Ok(GreenValue {
        value: acc.value() + tail,
        error_bound: err,
        truncation_n: spec.depth,
        heuristic: true,
    })
}

pub(crate) fn sum_series(
    spec: &SeriesSpec<'_>,
    r: f64,
    rho: &SpectralRadiusEstimate,
    tol: f64,
) -> Result<GreenValue> {
    match certified_sum(spec, r, rho, tol) {
        Some(v) => Ok(v),
        None => modelled_sum(spec, r, rho),
    }
}

fn model_tail(spec: &SeriesSpec<'_>, r: f64, rho: &SpectralRadiusEstimate) -> Result<(f64, f64)> {
    let n_max = spec.depth;
    let x = r * rho.rho_hat;
    if x > 1.0 + 1e-9 {
        return Err(Error::OutsideRegime(format!(
            "weight {r} exceeds 1/ρ̂ = {}",
            1.0 / rho.rho_hat
        )));
    }
    let x = x.min(1.0);
    let last_finite = (0..=n_max)
        .rev()
        .find(|&n| (spec.log_p)(n).is_finite())
        .ok_or_else(|| Error::InsufficientData("series has no nonzero term".into()))?;
    let step = if last_finite >= 1 && !(spec.log_p)(last_finite - 1).is_finite() {
        2
    } else {
        1
    };
    let window = (n_max / 4).max(8 * step);
    let lo = last_finite.saturating_sub(window).max(1);
    let lrho = rho.rho_hat.ln();
    let mut rows = vec![];
    let mut rhs = vec![];
    let mut n = last_finite;
    while n >= lo {
        let lp = (spec.log_p)(n);
        if lp.is_finite() {
            let t = n as f64;
            rows.push(vec![1.0, 1.0 / t, 1.0 / (t * t)]);
            rhs.push((lp - t * lrho).exp() * t.powf(1.5));
        }
        if n < lo + step {
            break;
        }
        n -= step;
    }
    if rows.len() < 6 {
        return Err(Error::InsufficientData(
            "too few terms to model the series tail".into(),
        ));
    }
    let c3 = least_squares(&rows, &rhs)?;
    let rows2: Vec<Vec<f64>> = rows.iter().map(|r| r[..2].to_vec()).collect();
    let c2 = least_squares(&rows2, &rhs)?;
    let start = (last_finite + step) as f64;
    let st = step as f64;
    let moment = spec.moment;
    let tail_at = |xx: f64, c: &[f64]| -> Result<f64> {
        let mut terms: Vec<(f64, f64)> = vec![];
        for (i, &ci) in c.iter().enumerate() {
            let s = 1.5 + i as f64;
            terms.push((ci, s));
            if moment == 1 {
                // (n+1) n^{-s} = n^{1-s} + n^{-s}
                terms.push((ci, s - 1.0));
            }
        }
        power_law_tail(&terms, xx, start, st)
    };
    let t3 = tail_at(x, &c3)?;
    let t2 = tail_at(x, &c2)?;
    let x_lo = (r * (rho.rho_hat - rho.residual)).min(1.0);
    let t_lo = tail_at(x_lo, &c3)?;
    let err = (t3 - t2).abs() + (t3 - t_lo).abs() + 1e-15 * t3.abs();
    Ok((t3, err))
}
