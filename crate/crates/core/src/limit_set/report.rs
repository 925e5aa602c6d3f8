use super::estimators::{box_dimension, correlation_dimension, shadow_cover_counts, CoverEstimate, DimensionEstimate};
use super::samples::sphere_boundary_samples;
use crate::brw::{run_replicas, BrwConfig, OffspringDistribution, TraceRecord};
use crate::error::{Error, Result};
use crate::group::check_visual_parameter;
use crate::numerics::mean_and_stderr;
use crate::walk::GreenEngine;

/// Simulation sizes for [`dimension_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionSettings {
    pub a: f64,
    pub replicas: u64,
    /// Replicas are split into this many batches for Monte Carlo errors.
    pub batches: usize,
    /// The outer radius `R` is the largest whose killed run is expected to
    /// create fewer particles than this.
    pub population_target: f64,
    /// Hard cap on particles per replica.
    pub population_budget: u64,
    pub max_radius: usize,
    /// Particles beyond `R + margin` are killed.
    pub margin: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for DimensionSettings {
    fn default() -> Self {
        DimensionSettings {
            a: std::f64::consts::E,
            replicas: 40,
            batches: 5,
            population_target: 1e6,
            population_budget: 50_000_000,
            max_radius: 80,
            margin: 12,
            epsilon: 0.0,
            seed: 0,
        }
    }
}

/// One grid point of the dimension table.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionRow {
    pub lambda: f64,
    /// Growth rate `H(λ)` of the sphere sums.
    pub growth: f64,
    /// `log_a H(λ)`.
    pub target: f64,
    pub box_estimate: DimensionEstimate,
    /// Spread of the box estimate over replica batches.
    pub box_mc_stderr: f64,
    pub correlation: DimensionEstimate,
    pub correlation_mc_stderr: f64,
    /// Outer radius `R`; covers use spheres `⌈R/2⌉..=R`.
    pub radius: usize,
    pub kill_radius: usize,
    pub replicas: u64,
    /// Pooled shadow covers behind the box estimate.
    pub cover: CoverEstimate,
}

impl DimensionRow {
    pub fn box_error(&self) -> f64 {
        (self.box_estimate.value - self.target).abs()
    }

    pub fn correlation_error(&self) -> f64 {
        (self.correlation.value - self.target).abs()
    }
}

/// Largest `R ≤ max_radius` such that the expected number of visits to the
/// ball of radius `R + margin`, `λ Σ_{n ≤ R+margin} H_n(λ)`, stays below the
/// population target.
pub fn outer_radius(engine: &GreenEngine, lambda: f64, s: &DimensionSettings) -> Result<usize> {
    let cap = (s.max_radius + s.margin).min(engine.max_radius());
    let series = engine.sphere_series(lambda, cap)?;
    let mut total = 0.0;
    let mut kill = 0;
    for (n, h) in series.values.iter().enumerate() {
        total += lambda * h;
        if total > s.population_target {
            break;
        }
        kill = n;
    }
    Ok(kill.saturating_sub(s.margin))
}

type Estimates = (DimensionEstimate, DimensionEstimate, CoverEstimate);

fn estimate(traces: &[TraceRecord], radius: usize, s: &DimensionSettings) -> Result<Estimates> {
    let cover = shadow_cover_counts(traces, s.epsilon, radius.div_ceil(2)..=radius)?;
    let boxed = box_dimension(&cover, s.a)?;
    let set = sphere_boundary_samples(traces, radius, s.a)?;
    let corr = correlation_dimension(&set, None)?;
    Ok((boxed, corr, cover))
}

/// Box and correlation estimates against `log_a H(λ)` on a grid of means.
///
/// Each replica runs until extinction with particles killed beyond
/// `R + margin`. Killing removes a share of order `(H F)^margin` of the
/// visits to `S_R`, with `F = G(e, x_{k+1}) / G(e, x_k)` the first-passage
/// ratio, while the population stays of order `H^{R + margin}`.
pub fn dimension_report(
    engine: &GreenEngine,
    lambdas: &[f64],
    offspring: &dyn Fn(f64) -> Result<OffspringDistribution>,
    s: &DimensionSettings,
) -> Result<Vec<DimensionRow>> {
    check_visual_parameter(s.a)?;
    if s.batches < 2 || s.replicas < s.batches as u64 {
        return Err(Error::Precondition("need at least two batches of replicas".into()));
    }
    let mut rows: Vec<DimensionRow> = vec![];
    for &lambda in lambdas {
        engine.check_weight(lambda)?;
        let growth = engine.growth_rate(lambda)?.h_estimate;
        let radius = outer_radius(engine, lambda, s)?;
        if radius < 19 {
            return Err(Error::InsufficientData(format!(
                "outer radius {radius} at λ = {lambda} leaves fewer than 10 box scales"
            )));
        }
        let kill = radius + s.margin;
        let mut cfg = BrwConfig::new(engine.step_distribution().clone(), offspring(lambda)?);
        cfg.max_generation = 100 * kill;
        cfg.kill_radius = Some(kill);
        cfg.record_depth = 0;
        cfg.population_budget = s.population_budget;
        cfg.seed = s.seed;
        let traces = run_replicas(&cfg, s.replicas)?;
        if let Some(t) = traces.iter().find(|t| t.truncated || !t.extinct) {
            return Err(Error::BudgetExceeded {
                what: format!("killed run at λ = {lambda}, replica {}", t.replica),
                needed: t.particle_steps as u128 + 1,
                budget: cfg.population_budget as u128,
            });
        }
        let (boxed, corr, cover) = estimate(&traces, radius, s)?;
        let chunk = traces.len().div_ceil(s.batches);
        let mut per_box = vec![];
        let mut per_corr = vec![];
        for batch in traces.chunks(chunk) {
            let (b, c, _) = estimate(batch, radius, s)?;
            per_box.push(b.value);
            per_corr.push(c.value);
        }
        // each batch holds 1/B of the data, so sd/√B estimates the pooled error
        let (_, box_se) = mean_and_stderr(&per_box);
        let (_, corr_se) = mean_and_stderr(&per_corr);
        rows.push(DimensionRow {
            lambda,
            growth,
            target: growth.ln() / s.a.ln(),
            box_estimate: boxed,
            box_mc_stderr: box_se,
            correlation: corr,
            correlation_mc_stderr: corr_se,
            radius,
            kill_radius: kill,
            replicas: s.replicas,
            cover,
        });
        if let [.., prev, last] = rows.as_slice() {
            if last.lambda > prev.lambda && last.growth <= prev.growth {
                return Err(Error::Precondition(format!(
                    "H is not increasing between λ = {} and λ = {}",
                    prev.lambda, last.lambda
                )));
            }
        }
    }
    Ok(rows)
}
