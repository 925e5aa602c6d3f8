use super::general::GeneralKernel;
use super::radial::RadialKernel;
use super::rho::{estimate_spectral_radius, SpectralRadiusEstimate};
use super::series::{certified_sum, modelled_sum, sum_series, GreenValue, SeriesSpec};
use super::step::StepDistribution;
use crate::error::{Error, Result};
use crate::group::{GroupModel, Word};
use crate::numerics::CompensatedSum;
use std::collections::BTreeMap;

/// Truncation and budget parameters of a [`GreenEngine`].
#[derive(Clone, Debug, PartialEq)]
pub struct GreenSettings {
    /// Relative tolerance for certified series.
    pub tol: f64,
    /// Time depth of the radial recursion.
    pub depth: usize,
    /// Largest radius kept by the radial recursion.
    pub radius_cap: usize,
    /// Ball radius of the general engine.
    pub ball_radius: usize,
    /// Radius of the Green table produced by the general engine.
    pub store_radius: usize,
    /// Time depth of the general engine.
    pub general_depth: usize,
    /// Largest ball (in words) the general engine may allocate.
    pub node_budget: usize,
}

impl Default for GreenSettings {
    fn default() -> Self {
        GreenSettings {
            tol: 1e-12,
            depth: 20_000,
            radius_cap: 256,
            ball_radius: 9,
            store_radius: 5,
            general_depth: 300,
            node_budget: 4_000_000,
        }
    }
}

impl GreenSettings {
    /// Smaller kernels for fast checks.
    pub fn quick() -> Self {
        GreenSettings {
            depth: 4_000,
            radius_cap: 64,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    Radial(RadialKernel),
    General(GeneralKernel),
}

/// Green functions `G_r(x, y) = Σ_n r^n p_n(x, y)` of one step distribution.
///
/// Isotropic nearest-neighbour walks use the radial recursion, every other
/// walk the ball-restricted engine.
#[derive(Clone, Debug)]
pub struct GreenEngine {
    mu: StepDistribution,
    settings: GreenSettings,
    kernel: Kernel,
    rho: SpectralRadiusEstimate,
}

/// Green values of one weight.
#[derive(Clone, Debug)]
pub struct GreenTable {
    pub r: f64,
    group: GroupModel,
    radial: Vec<GreenValue>,
    words: BTreeMap<Word, GreenValue>,
}

impl GreenTable {
    /// Largest radius for which every word has a value.
    pub fn radius(&self) -> usize {
        if !self.radial.is_empty() {
            self.radial.len() - 1
        } else {
            self.words.keys().map(|w| w.len()).max().unwrap_or(0)
        }
    }

    pub fn get(&self, x: &Word) -> Option<GreenValue> {
        if !self.radial.is_empty() {
            self.radial.get(x.len()).copied()
        } else {
            self.words.get(x).copied()
        }
    }

    /// `G_r(e, x)`.
    pub fn value(&self, x: &Word) -> Option<f64> {
        self.get(x).map(|v| v.value)
    }

    /// `G_r(x, y) = G_r(e, x⁻¹y)`.
    pub fn between(&self, x: &Word, y: &Word) -> Option<f64> {
        self.value(&self.group.mul(&self.group.inverse(x), y))
    }

    /// Radial values, present for isotropic walks.
    pub fn radial(&self) -> Option<&[GreenValue]> {
        (!self.radial.is_empty()).then_some(&self.radial[..])
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }
}

/// Sphere sums `H_n(r) = Σ_{|x| = n} G_r(e, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGreenSeries {
    pub r: f64,
    /// `H_n` for `n = 0..=n_max`.
    pub values: Vec<f64>,
    /// Relative error bound of each `H_n`.
    pub rel_errors: Vec<f64>,
    /// Growth rate `H(r)` read off `H_{n+1}/H_n`.
    pub h_estimate: f64,
    pub h_error: f64,
    /// Set when any entry used a modelled tail.
    pub heuristic: bool,
}

impl SphereGreenSeries {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `H_n / H^n` for a reference growth rate.
    pub fn normalized(&self, h: f64) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(n, v)| v / h.powi(n as i32))
            .collect()
    }
}

/// Outcome of the derivative identity `∂_r[r G_r(e,e)] = Σ_y G_r(e,y) G_r(y,e)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeCheck {
    pub r: f64,
    pub h: f64,
    /// Central difference with step `h`.
    pub lhs: f64,
    /// Central difference with step `h/2`.
    pub lhs_half: f64,
    /// Richardson combination `(4 D(h/2) − D(h)) / 3`.
    pub lhs_richardson: f64,
    pub rhs: f64,
    pub relative_error: f64,
    pub relative_error_richardson: f64,
}

impl GreenEngine {
    pub fn new(mu: &StepDistribution, settings: GreenSettings) -> Result<Self> {
        let (kernel, rho) = if mu.is_isotropic() {
            let k = RadialKernel::new(mu, settings.depth, settings.radius_cap)?;
            let rho = estimate_spectral_radius(&k.log_returns(), 1e-9)?;
            (Kernel::Radial(k), rho)
        } else {
            let g = GeneralKernel::new(
                mu,
                settings.ball_radius,
                settings.store_radius,
                settings.general_depth,
                settings.node_budget,
            )?;
            let rho = g.spectral_radius();
            (Kernel::General(g), rho)
        };
        Ok(GreenEngine {
            mu: mu.clone(),
            settings,
            kernel,
            rho,
        })
    }

    pub fn step_distribution(&self) -> &StepDistribution {
        &self.mu
    }

    pub fn group(&self) -> &GroupModel {
        self.mu.group()
    }

    pub fn settings(&self) -> &GreenSettings {
        &self.settings
    }

    pub fn spectral_radius(&self) -> &SpectralRadiusEstimate {
        &self.rho
    }

    pub fn radial_kernel(&self) -> Option<&RadialKernel> {
        match &self.kernel {
            Kernel::Radial(k) => Some(k),
            Kernel::General(_) => None,
        }
    }

    /// `1/ρ̂`, the end of the admissible weight range.
    pub fn critical_weight(&self) -> f64 {
        1.0 / self.rho.rho_hat
    }

    /// Weights must lie in `[1, 1/ρ̂]`.
    pub fn check_weight(&self, r: f64) -> Result<()> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::OutsideRegime(format!(
                "weight {r} lies below 1; only 1 ≤ r ≤ 1/ρ̂ is supported"
            )));
        }
        if r * self.rho.rho_hat > 1.0 + 1e-9 {
            return Err(Error::OutsideRegime(format!(
                "weight {r} exceeds the critical weight 1/ρ̂ = {:.12}",
                self.critical_weight()
            )));
        }
        Ok(())
    }

    /// Largest radius a table can cover.
    pub fn max_radius(&self) -> usize {
        match &self.kernel {
            Kernel::Radial(k) => k.radius_cap(),
            Kernel::General(_) => self.settings.store_radius,
        }
    }

    /// `G_r(e, x)`.
    pub fn green(&self, r: f64, x: &Word) -> Result<GreenValue> {
        self.check_weight(r)?;
        self.green_unchecked(r, x)
    }

    /// `G_r(e, x)` failing unless the relative error is below `tol`.
    pub fn green_checked(&self, r: f64, x: &Word, tol: f64) -> Result<GreenValue> {
        let v = self.green(r, x)?;
        if v.relative_error() > tol {
            return Err(Error::ToleranceUnreachable {
                tol,
                reason: format!("relative error {:e} at depth {}", v.relative_error(), v.truncation_n),
            });
        }
        Ok(v)
    }

    pub(crate) fn green_unchecked(&self, r: f64, x: &Word) -> Result<GreenValue> {
        match &self.kernel {
            Kernel::Radial(_) => Ok(self.radial_values(r, x.len())?[x.len()]),
            Kernel::General(g) => g.green(r, x),
        }
    }

    /// Green table on the ball of the given radius.
    pub fn green_table(&self, r: f64, radius: usize) -> Result<GreenTable> {
        self.check_weight(r)?;
        self.table_unchecked(r, radius)
    }

    pub(crate) fn table_unchecked(&self, r: f64, radius: usize) -> Result<GreenTable> {
        let group = self.group().clone();
        match &self.kernel {
            Kernel::Radial(_) => Ok(GreenTable {
                r,
                group,
                radial: self.radial_values(r, radius)?,
                words: BTreeMap::new(),
            }),
            Kernel::General(g) => {
                if radius > self.settings.store_radius {
                    return Err(Error::BudgetExceeded {
                        what: "general Green table radius".into(),
                        needed: radius as u128,
                        budget: self.settings.store_radius as u128,
                    });
                }
                let mut words = BTreeMap::new();
                for w in group.enumerate_ball(radius, self.settings.node_budget as u128)? {
                    let v = g.green(r, &w)?;
                    words.insert(w, v);
                }
                Ok(GreenTable {
                    r,
                    group,
                    radial: vec![],
                    words,
                })
            }
        }
    }

    fn radial_spec<'a>(
        k: &'a RadialKernel,
        term: &'a dyn Fn(usize) -> f64,
        log_p: &'a dyn Fn(usize) -> f64,
        radius: usize,
        moment: u32,
    ) -> SeriesSpec<'a> {
        SeriesSpec {
            depth: k.depth(),
            term,
            log_p,
            log_prefactor: -k.log_c(radius),
            moment,
        }
    }

    /// Radial Green values `G_r(e, x_k)` for `k = 0..=k_max`.
    ///
    /// Radii whose time series cannot be certified at the kernel depth are
    /// continued by first-passage factorization: for a nearest-neighbour
    /// walk on a tree every path from `e` to `x_{k+1}` passes through `x_k`,
    /// so `G(e, x_{k+1}) = F · G(e, x_k)` with the same `F` for every `k`.
    fn radial_values(&self, r: f64, k_max: usize) -> Result<Vec<GreenValue>> {
        let Kernel::Radial(kern) = &self.kernel else {
            unreachable!()
        };
        if k_max > kern.radius_cap() {
            return Err(Error::BudgetExceeded {
                what: "radial Green table radius".into(),
                needed: k_max as u128,
                budget: kern.radius_cap() as u128,
            });
        }
        let weights = kern.time_weights(r);
        let mut out: Vec<GreenValue> = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let term = kern.terms(&weights, k);
            let log_p = |n: usize| kern.log_q(n, k);
            let spec = Self::radial_spec(kern, &term, &log_p, k, 0);
            match certified_sum(&spec, r, &self.rho, self.settings.tol) {
                Some(v) => out.push(v),
                None => break,
            }
        }
        if out.len() > k_max {
            return Ok(out);
        }
        if out.len() < 2 {
            out.clear();
            for k in 0..=1 {
                let term = kern.terms(&weights, k);
                let log_p = |n: usize| kern.log_q(n, k);
                let spec = Self::radial_spec(kern, &term, &log_p, k, 0);
                out.push(sum_series(&spec, r, &self.rho, self.settings.tol)?);
            }
        }
        let anchor = out.len() - 1;
        let (a, b) = (out[anchor - 1], out[anchor]);
        let f = b.value / a.value;
        let rel_f = a.relative_error() + b.relative_error();
        for k in anchor + 1..=k_max {
            let steps = (k - anchor) as f64;
            let value = b.value * f.powf(steps);
            let rel = b.relative_error() + steps * rel_f;
            out.push(GreenValue {
                value,
                error_bound: rel * value,
                truncation_n: kern.depth(),
                heuristic: a.heuristic || b.heuristic,
            });
        }
        out.truncate(k_max + 1);
        Ok(out)
    }

    /// `H_n(r)` for `n = 0..=n_max`.
    pub fn sphere_series(&self, r: f64, n_max: usize) -> Result<SphereGreenSeries> {
        self.check_weight(r)?;
        let group = self.group().clone();
        let (values, rel_errors, heuristic) = match &self.kernel {
            Kernel::Radial(_) => {
                let vals = self.radial_values(r, n_max)?;
                let values: Vec<f64> = vals
                    .iter()
                    .enumerate()
                    .map(|(n, v)| (group.log_sphere_size(n) + v.value.ln()).exp())
                    .collect();
                let rel = vals.iter().map(|v| v.relative_error()).collect();
                (values, rel, vals.iter().any(|v| v.heuristic))
            }
            Kernel::General(_) => {
                let table = self.table_unchecked(r, n_max)?;
                let mut values = vec![];
                let mut rel = vec![];
                for n in 0..=n_max {
                    let mut acc = CompensatedSum::new();
                    let mut err = 0.0;
                    for w in group.enumerate_sphere(n, self.settings.node_budget as u128)? {
                        let v = table.get(&w).unwrap();
                        acc.add(v.value);
                        err += v.error_bound;
                    }
                    values.push(acc.value());
                    rel.push(err / acc.value());
                }
                (values, rel, true)
            }
        };
        let (h_estimate, h_error) = growth_from_sphere_sums(&values, &rel_errors)?;
        Ok(SphereGreenSeries {
            r,
            values,
            rel_errors,
            h_estimate,
            h_error,
            heuristic,
        })
    }

    /// `H(r)` from the sphere series.
    pub fn growth_rate(&self, r: f64) -> Result<SphereGreenSeries> {
        let n = self.max_radius().min(24);
        self.sphere_series(r, n)
    }

    /// `η(r) = Σ_y G_r(e, y) G_r(y, e) = Σ_n (n+1) r^n p_n(e, e)`.
    pub fn eta(&self, r: f64) -> Result<GreenValue> {
        self.check_weight(r)?;
        if r * self.rho.rho_hat >= 1.0 - 1e-12 {
            return Err(Error::OutsideRegime(format!(
                "η diverges at the critical weight 1/ρ̂ = {:.12}",
                self.critical_weight()
            )));
        }
        match &self.kernel {
            Kernel::Radial(kern) => {
                let weights = kern.time_weights(r);
                let term = kern.terms(&weights, 0);
                let log_p = |n: usize| kern.log_q(n, 0);
                let spec = Self::radial_spec(kern, &term, &log_p, 0, 1);
                match certified_sum(&spec, r, &self.rho, self.settings.tol) {
                    Some(v) => Ok(v),
                    None => modelled_sum(&spec, r, &self.rho),
                }
            }
            Kernel::General(_) => self.eta_ball(r, self.settings.store_radius),
        }
    }

    /// `η(r)` by summing `G_r(e, y)²` over a ball, with a geometric tail in the
    /// radius.
    pub fn eta_ball(&self, r: f64, radius: usize) -> Result<GreenValue> {
        let table = self.table_unchecked(r, radius)?;
        let group = self.group().clone();
        let mut shells = vec![];
        let mut heuristic = false;
        let mut err = 0.0;
        for k in 0..=radius {
            let mut acc = CompensatedSum::new();
            if let Some(rad) = table.radial() {
                let g = rad[k];
                heuristic |= g.heuristic;
                let s = (group.log_sphere_size(k) + 2.0 * g.value.ln()).exp();
                acc.add(s);
                err += 2.0 * g.relative_error() * s;
            } else {
                for w in group.enumerate_sphere(k, self.settings.node_budget as u128)? {
                    let g = table.get(&w).unwrap();
                    acc.add(g.value * g.value);
                    err += 2.0 * g.error_bound * g.value;
                }
                heuristic = true;
            }
            shells.push(acc.value());
        }
        let mut total = CompensatedSum::new();
        shells.iter().for_each(|&s| total.add(s));
        let n = shells.len();
        let t = shells[n - 1] / shells[n - 2];
        if !(t < 1.0) {
            return Err(Error::ToleranceUnreachable {
                tol: self.settings.tol,
                reason: "ball sum of G² is not decaying".into(),
            });
        }
        let tail = shells[n - 1] * t / (1.0 - t);
        total.add(tail);
        Ok(GreenValue {
            value: total.value(),
            error_bound: err + tail.abs() * 1e-3,
            truncation_n: radius,
            heuristic,
        })
    }

    /// Central differences of `r G_r(e,e)` against the ball sum of `G_r²`.
    pub fn derivative_check(&self, r: f64, h: f64) -> Result<DerivativeCheck> {
        self.check_weight(r)?;
        if !(h > 0.0) || r + h >= self.critical_weight() {
            return Err(Error::OutsideRegime(format!(
                "difference stencil [{}, {}] must stay below 1/ρ̂",
                r - h,
                r + h
            )));
        }
        let e = Word::identity();
        let g = |s: f64| -> Result<f64> { Ok(s * self.green_unchecked(s, &e)?.value) };
        let lhs = (g(r + h)? - g(r - h)?) / (2.0 * h);
        let h2 = h / 2.0;
        let lhs_half = (g(r + h2)? - g(r - h2)?) / (2.0 * h2);
        let lhs_richardson = (4.0 * lhs_half - lhs) / 3.0;
        let radius = self.max_radius();
        let rhs = self.eta_ball(r, radius)?.value;
        Ok(DerivativeCheck {
            r,
            h,
            lhs,
            lhs_half,
            lhs_richardson,
            rhs,
            relative_error: (lhs - rhs).abs() / rhs,
            relative_error_richardson: (lhs_richardson - rhs).abs() / rhs,
        })
    }
}

/// `H ≈ H_{n+1}/H_n` at the largest `n` with both relative errors below
/// `1e-8`, or at the last available `n` otherwise.
fn growth_from_sphere_sums(values: &[f64], rel: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(
            "growth rate needs sphere sums up to radius 2".into(),
        ));
    }
    let last = values.len() - 2;
    let n = (1..=last)
        .rev()
        .find(|&n| rel[n] < 1e-8 && rel[n + 1] < 1e-8)
        .unwrap_or(last);
    let h = values[n + 1] / values[n];
    Ok((h, h * (rel[n] + rel[n + 1])))
}
