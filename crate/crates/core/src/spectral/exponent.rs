use super::automaton::Automaton;
use super::potential::build_potential;
use super::transfer::{pressure, pressure_curve};
use crate::error::{Error, Result};
use crate::numerics::fit_line;
use crate::walk::GreenEngine;
use rayon::prelude::*;

/// A power-law fit `y ≈ C (r_c − r)^{slope}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub c_hat: f64,
    /// Root mean square of the log-log residuals.
    pub residual: f64,
    /// Smallest and largest weight used.
    pub window: (f64, f64),
    /// The endpoint `r_c`.
    pub endpoint: f64,
    pub points: usize,
    /// Slopes between neighbouring grid points, nearest to `r_c` last.
    pub local_slopes: Vec<f64>,
}

/// Fewest grid points accepted by the fits.
pub const MIN_FIT_POINTS: usize = 6;

/// Grid points must satisfy `r_c − r ≤ (r_c − 1) / WINDOW_FRACTION`.
pub const WINDOW_FRACTION: f64 = 4.0;

/// The endpoint of the fits: `1/(ρ̂ + residual)`.
pub fn fit_endpoint(engine: &GreenEngine) -> f64 {
    engine.spectral_radius().critical_weight()
}

/// `r_c − 2^{−j}(r_c − 1)` for `j = j_lo, j_lo + step, …, ≤ j_hi`.
pub fn dyadic_grid(r_c: f64, j_lo: f64, j_hi: f64, step: f64) -> Vec<f64> {
    let mut out = vec![];
    let mut j = j_lo;
    while j <= j_hi + 1e-9 {
        out.push(r_c - 2f64.powf(-j) * (r_c - 1.0));
        j += step;
    }
    out
}

fn check_grid(r_c: f64, grid: &[f64]) -> Result<()> {
    if grid.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs {MIN_FIT_POINTS} grid points, got {}",
            grid.len()
        )));
    }
    if let Some(&r) = grid.iter().find(|&&r| !(r >= 1.0 && r < r_c)) {
        return Err(Error::OutsideRegime(format!("grid point {r} lies outside [1, {r_c})")));
    }
    let reach = (r_c - 1.0) / WINDOW_FRACTION;
    if let Some(&r) = grid.iter().find(|&&r| r_c - r > reach) {
        return Err(Error::Precondition(format!(
            "grid point {r} is farther than (r_c − 1)/{WINDOW_FRACTION} from r_c = {r_c}; outside the asymptotic window"
        )));
    }
    Ok(())
}

fn power_fit(r_c: f64, grid: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    let mut pts: Vec<(f64, f64)> = grid.iter().zip(ys).map(|(&r, &y)| ((r_c - r).ln(), y.ln())).collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::ToleranceUnreachable {
            tol: 0.0,
            reason: "non-positive quantity in a log-log fit".into(),
        });
    }
    // farthest from r_c first
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys)?;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    let local_slopes = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentFit {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        c_hat: fit.intercept.exp(),
        residual,
        window: (lo, hi),
        endpoint: r_c,
        points: xs.len(),
        local_slopes,
    })
}

/// Slope of `log(H(r_c) − H(r))` against `log(r_c − r)`, with `H = e^{Pr}`
/// computed by the transfer operator at every point including `r_c`.
pub fn critical_exponent_fit(engine: &GreenEngine, automaton: &Automaton, horizon: usize, grid: &[f64]) -> Result<ExponentFit> {
    let r_c = fit_endpoint(engine);
    check_grid(r_c, grid)?;
    let top = pressure(&build_potential(engine, automaton, r_c, horizon)?, automaton)?.growth();
    let curve = pressure_curve(engine, automaton, horizon, grid)?;
    let ys: Vec<f64> = curve.iter().map(|p| top - p.growth()).collect();
    power_fit(r_c, grid, &ys)
}

/// Slope of `log η(r)` against `log(r_c − r)`.
pub fn eta_exponent_fit(engine: &GreenEngine, grid: &[f64]) -> Result<ExponentFit> {
    let r_c = fit_endpoint(engine);
    check_grid(r_c, grid)?;
    let ys: Vec<f64> = grid
        .par_iter()
        .map(|&r| engine.eta(r).map(|v| v.value))
        .collect::<Result<_>>()?;
    power_fit(r_c, grid, &ys)
}
