//! The check suite behind `hypbrw verify`.
//!
//! Every check measures one number and compares it with a tolerance. The
//! tolerances can be overridden by name under `[verify.tolerances]`. With
//! `--quick` only the checks that finish in seconds run.

use crate::commands::{finish, start, status};
use crate::error::CliError;
use crate::output::{sha256_hex, Table};
use crate::row;
use crate::Context;
use hypbrw::brw::{growth_rate, moment_experiment, run_replicas, BrwConfig, OffspringDistribution};
use hypbrw::limit_set::{
    correlation_dimension, dimension_report, outer_radius, uniform_boundary_samples, DimensionRow, DimensionSettings,
};
use hypbrw::spectral::{
    build_automaton, build_potential, critical_exponent_fit, dyadic_grid, eta_exponent_fit, fit_endpoint,
    pressure_curve, verify_hnr_identity, AUDIT_RADIUS,
};
use hypbrw::walk::{multiplicativity_constants, second_moment_bound, GreenEngine, GreenSettings, StepDistribution};
use hypbrw::{GroupModel, Word};
use serde_json::json;
use std::sync::OnceLock;

/// How a measured value is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    /// `value ≤ tolerance`.
    AtMost,
    /// `value > tolerance`.
    Above,
}

pub struct Check {
    pub name: &'static str,
    pub property: &'static str,
    pub tolerance: f64,
    pub bound: Bound,
    pub quick: bool,
    measure: fn(&Lab) -> hypbrw::Result<f64>,
}

/// Engines shared between checks, built on first use.
#[derive(Default)]
pub struct Lab {
    seed: u64,
    quick: bool,
    free: OnceLock<GreenEngine>,
    z2: OnceLock<GreenEngine>,
    lazy: OnceLock<GreenEngine>,
    dimension: OnceLock<hypbrw::Result<Vec<DimensionRow>>>,
}

fn f2() -> GroupModel {
    GroupModel::free(2).expect("rank 2")
}

impl Lab {
    fn build(mu: StepDistribution) -> GreenEngine {
        GreenEngine::new(&mu, GreenSettings::default()).expect("engine for a fixed walk")
    }

    fn free(&self) -> &GreenEngine {
        self.free.get_or_init(|| Self::build(StepDistribution::simple(&f2())))
    }

    fn z2(&self) -> &GreenEngine {
        self.z2
            .get_or_init(|| Self::build(StepDistribution::simple(&GroupModel::z2_product(4).expect("four factors"))))
    }

    fn lazy(&self) -> &GreenEngine {
        self.lazy
            .get_or_init(|| Self::build(StepDistribution::lazy(&f2(), 0.5).expect("lazy walk")))
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn growth(e: &GreenEngine, r: f64) -> hypbrw::Result<f64> {
    Ok(e.growth_rate(r)?.h_estimate)
}

fn grid(e: &GreenEngine, points: usize) -> Vec<f64> {
    let rc = e.critical_weight();
    (0..points)
        .map(|i| 1.0 + (rc - 1.0) * i as f64 / (points - 1) as f64)
        .collect()
}

fn critical_slope(e: &GreenEngine) -> hypbrw::Result<f64> {
    let automaton = build_automaton(e.group())?;
    let rc = fit_endpoint(e);
    let fit = critical_exponent_fit(e, &automaton, 0, &dyadic_grid(rc, 4.0, 12.0, 1.0))?;
    Ok((fit.slope - 0.5).abs())
}

fn pressure_gap(e: &GreenEngine, horizon: usize) -> hypbrw::Result<f64> {
    let automaton = build_automaton(e.group())?;
    let mut worst: f64 = 0.0;
    for p in pressure_curve(e, &automaton, horizon, &grid(e, 10))? {
        let h = growth(e, p.r)?;
        worst = worst.max((p.growth() - h).abs() / h);
    }
    Ok(worst)
}

fn increments(e: &GreenEngine, step: f64) -> hypbrw::Result<Vec<f64>> {
    let rc = e.critical_weight();
    let mut hs = vec![];
    let mut r = 1.0;
    while r <= rc {
        hs.push(growth(e, r)?);
        r += step;
    }
    Ok(hs.windows(2).map(|w| w[1] - w[0]).collect())
}

fn brw_config(lambda: f64, seed: u64) -> hypbrw::Result<BrwConfig> {
    let mut cfg = BrwConfig::new(StepDistribution::simple(&f2()), OffspringDistribution::binary(lambda)?);
    cfg.seed = seed;
    Ok(cfg)
}

fn moment_config(lab: &Lab, depth: usize) -> hypbrw::Result<BrwConfig> {
    let mut cfg = brw_config(1.05, lab.seed)?;
    cfg.kill_radius = Some(30);
    cfg.max_generation = 100_000;
    cfg.record_depth = depth;
    Ok(cfg)
}

fn moment_replicas(lab: &Lab) -> u64 {
    if lab.quick {
        2_000
    } else {
        100_000
    }
}

fn trace_growth_error(lab: &Lab, lambda: f64) -> hypbrw::Result<f64> {
    let e = lab.free();
    let s = DimensionSettings {
        population_target: if lab.quick { 2e5 } else { 1e6 },
        ..DimensionSettings::default()
    };
    let r = outer_radius(e, lambda, &s)?;
    let mut cfg = brw_config(lambda, lab.seed)?;
    cfg.kill_radius = Some(r + s.margin);
    cfg.max_generation = 100 * (r + s.margin);
    cfg.record_depth = 0;
    cfg.population_budget = s.population_budget;
    let traces = run_replicas(&cfg, if lab.quick { 10 } else { 20 })?;
    let est = growth_rate(&traces, (r.div_ceil(2), r))?;
    Ok((est.pooled / growth(e, lambda)? - 1.0).abs())
}

fn dimension_error(lab: &Lab, correlation: bool) -> hypbrw::Result<f64> {
    let rows = lab.dimension.get_or_init(|| {
        dimension_report(
            lab.free(),
            &[1.05, 1.1],
            &OffspringDistribution::binary,
            &DimensionSettings {
                seed: lab.seed,
                ..DimensionSettings::default()
            },
        )
    });
    Ok(rows
        .as_ref()
        .map_err(Clone::clone)?
        .iter()
        .map(|r| {
            let err = if correlation { r.correlation_error() } else { r.box_error() };
            err / r.target
        })
        .fold(0.0, f64::max))
}

fn replay_digest(seed: u64) -> hypbrw::Result<String> {
    let mut cfg = brw_config(1.1, seed)?;
    cfg.max_generation = 30;
    cfg.record_depth = 3;
    let mut bytes = vec![];
    for t in run_replicas(&cfg, 4)? {
        bytes.extend(format!("{:?}{:?}{:?}", t.population, t.m_series(), t.z_counts).bytes());
    }
    Ok(sha256_hex(&bytes))
}

pub fn checks() -> Vec<Check> {
    use Bound::*;
    vec![
        Check {
            name: "spectral_radius",
            property: "spectral radius of the simple walk on F_2 equals sqrt(3)/2",
            tolerance: 1e-3,
            bound: AtMost,
            quick: true,
            measure: |lab| Ok((lab.free().spectral_radius().rho_hat - SQRT3 / 2.0).abs()),
        },
        Check {
            name: "growth_at_one",
            property: "sphere-sum growth at weight 1 equals 1",
            tolerance: 1e-6,
            bound: AtMost,
            quick: true,
            measure: |lab| Ok((growth(lab.free(), 1.0)? - 1.0).abs()),
        },
        Check {
            name: "growth_at_critical",
            property: "sphere-sum growth at the critical weight equals sqrt(3)",
            tolerance: 1e-3,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let e = lab.free();
                Ok((growth(e, e.critical_weight())? - SQRT3).abs())
            },
        },
        Check {
            name: "growth_below_entropy_bound",
            property: "growth never exceeds the square root of the sphere growth",
            tolerance: 1e-6,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let e = lab.free();
                let mut worst = f64::MIN;
                for r in grid(e, 20) {
                    worst = worst.max(growth(e, r)? - SQRT3);
                }
                Ok(worst)
            },
        },
        Check {
            name: "purely_exponential",
            property: "sphere sums divided by H^n stay in a fixed band",
            tolerance: 10.0,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let e = lab.free();
                let mut c: f64 = 1.0;
                for r in [1.0, 1.05, 1.1, e.critical_weight()] {
                    let s = e.sphere_series(r, 200)?;
                    for q in &s.normalized(s.h_estimate)[5..] {
                        c = c.max(*q).max(1.0 / q);
                    }
                }
                Ok(c)
            },
        },
        Check {
            name: "multiplicativity_stable",
            property: "multiplicativity constants move little when the range grows by 10",
            tolerance: 0.01,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let e = lab.free();
                let mut worst: f64 = 0.0;
                for r in [1.0, 1.05, 1.1] {
                    let s = e.sphere_series(r, 60)?;
                    let a = multiplicativity_constants(&s, 50)?;
                    let b = multiplicativity_constants(&s, 60)?;
                    worst = worst
                        .max((b.c_sub / a.c_sub - 1.0).abs())
                        .max((b.c_sup / a.c_sup - 1.0).abs());
                }
                Ok(worst)
            },
        },
        Check {
            name: "growth_increasing",
            property: "growth is strictly increasing on grids of spacing 0.01 and 0.005",
            tolerance: 0.0,
            bound: Above,
            quick: true,
            measure: |lab| {
                let mut m = f64::MAX;
                for step in [0.01, 0.005] {
                    m = increments(lab.free(), step)?.into_iter().fold(m, f64::min);
                }
                Ok(m)
            },
        },
        Check {
            name: "growth_continuous",
            property: "largest growth increment shrinks when the spacing is halved",
            tolerance: 0.9,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let max = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
                Ok(max(increments(lab.free(), 0.005)?) / max(increments(lab.free(), 0.01)?))
            },
        },
        Check {
            name: "derivative_identity",
            property: "derivative of r G(e,e) equals the sum of squared Green values",
            tolerance: 1e-4,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let mut worst: f64 = 0.0;
                for r in [1.0, 1.05] {
                    let c = lab.free().derivative_check(r, 1e-4)?;
                    worst = worst.max(c.relative_error).max(c.relative_error_richardson);
                }
                Ok(worst)
            },
        },
        Check {
            name: "eta_exponent",
            property: "eta blows up like the inverse square root of the distance to the critical weight",
            tolerance: 0.05,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let e = lab.free();
                let fit = eta_exponent_fit(e, &dyadic_grid(fit_endpoint(e), 8.0, 16.0, 1.0))?;
                Ok((fit.slope + 0.5).abs())
            },
        },
        Check {
            name: "critical_exponent_free",
            property: "growth reaches its critical value with square-root behaviour (simple walk on F_2)",
            tolerance: 0.05,
            bound: AtMost,
            quick: true,
            measure: |lab| critical_slope(lab.free()),
        },
        Check {
            name: "critical_exponent_z2",
            property: "growth reaches its critical value with square-root behaviour (free product of four Z/2)",
            tolerance: 0.05,
            bound: AtMost,
            quick: true,
            measure: |lab| critical_slope(lab.z2()),
        },
        Check {
            name: "critical_exponent_lazy",
            property: "growth reaches its critical value with square-root behaviour (lazy walk on F_2)",
            tolerance: 0.05,
            bound: AtMost,
            quick: true,
            measure: |lab| critical_slope(lab.lazy()),
        },
        Check {
            name: "pressure_matches_series",
            property: "exponential of the pressure equals the sphere-sum growth (memoryless potential)",
            tolerance: 1e-3,
            bound: AtMost,
            quick: true,
            measure: |lab| pressure_gap(lab.free(), 0),
        },
        Check {
            name: "pressure_matches_series_lazy",
            property: "exponential of the pressure equals the sphere-sum growth (lazy walk, two-letter memory)",
            tolerance: 1e-2,
            bound: AtMost,
            quick: true,
            measure: |lab| pressure_gap(lab.lazy(), 2),
        },
        Check {
            name: "sphere_sum_identity",
            property: "finite sphere sums equal weighted path sums of the automaton",
            tolerance: 1e-10,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let e = lab.free();
                let automaton = build_automaton(e.group())?;
                let mut worst: f64 = 0.0;
                for r in [1.0, 1.1] {
                    let p = build_potential(e, &automaton, r, 0)?;
                    for n in [1, 5, 20] {
                        worst = worst.max(verify_hnr_identity(e, &automaton, &p, n)?.relative_error);
                    }
                }
                Ok(worst)
            },
        },
        Check {
            name: "automaton_geodesic",
            property: "automaton paths are geodesic and biject with the ball",
            tolerance: 0.0,
            bound: AtMost,
            quick: true,
            measure: |_| {
                let mut failed = 0.0;
                for g in [f2(), GroupModel::z2_product(4)?] {
                    if !build_automaton(&g)?.audit(AUDIT_RADIUS)?.passed() {
                        failed += 1.0;
                    }
                }
                Ok(failed)
            },
        },
        Check {
            name: "first_moment",
            property: "mean visit counts match the Green function (largest deviation in standard errors)",
            tolerance: 3.0,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let depth = if lab.quick { 2 } else { 4 };
                let cfg = moment_config(lab, depth)?;
                let words = f2().enumerate_ball(depth, 1 << 20)?;
                let m = moment_experiment(&cfg, moment_replicas(lab), &words, &[])?;
                let mut worst: f64 = 0.0;
                for (x, est) in words.iter().zip(&m.first) {
                    let g = lab.free().green(1.05, x)?.value;
                    worst = worst.max((est.mean - g).abs() / est.stderr);
                }
                Ok(worst)
            },
        },
        Check {
            name: "second_moment_bound",
            property: "mean products of visit counts stay below the Green-product bound (excess in standard errors)",
            tolerance: 3.0,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let depth = if lab.quick { 1 } else { 3 };
                let cfg = moment_config(lab, depth)?;
                let words: Vec<Word> = f2().enumerate_ball(depth, 1 << 20)?;
                let m = moment_experiment(&cfg, moment_replicas(lab), &[], &words)?;
                let sigma2 = cfg.nu.second_moment();
                let mut worst = f64::MIN;
                for (i, x) in words.iter().enumerate() {
                    for (j, y) in words.iter().enumerate() {
                        let est = m.second[i][j];
                        let b = second_moment_bound(lab.free(), 1.05, sigma2, x, y)?.value;
                        let excess = est.mean - b;
                        let z = if est.stderr > 0.0 {
                            excess / est.stderr
                        } else if excess <= 0.0 {
                            f64::MIN
                        } else {
                            f64::INFINITY
                        };
                        worst = worst.max(z);
                    }
                }
                Ok(worst)
            },
        },
        Check {
            name: "trace_growth",
            property: "number of visited sites grows like H(lambda) at lambda = 1.1 (relative error)",
            tolerance: 0.05,
            bound: AtMost,
            quick: true,
            measure: |lab| trace_growth_error(lab, 1.1),
        },
        Check {
            name: "trace_growth_single_walker",
            property: "a single walker visits sites with growth 1",
            tolerance: 0.02,
            bound: AtMost,
            quick: true,
            measure: |lab| trace_growth_error(lab, 1.0),
        },
        Check {
            name: "boundary_calibration",
            property: "correlation dimension of uniform boundary samples equals log 3 (relative error)",
            tolerance: 0.02,
            bound: AtMost,
            quick: true,
            measure: |lab| {
                let set = uniform_boundary_samples(&f2(), 20_000, 30, std::f64::consts::E, lab.seed)?;
                let d = correlation_dimension(&set, None)?;
                Ok((d.value / 3f64.ln() - 1.0).abs())
            },
        },
        Check {
            name: "dimension_box",
            property: "box dimension of the limit set equals log H(lambda) (relative error, lambda 1.05 and 1.1)",
            tolerance: 0.1,
            bound: AtMost,
            quick: false,
            measure: |lab| dimension_error(lab, false),
        },
        Check {
            name: "dimension_correlation",
            property: "correlation dimension of the limit set equals log H(lambda) (relative error, lambda 1.05 and 1.1)",
            tolerance: 0.1,
            bound: AtMost,
            quick: false,
            measure: |lab| dimension_error(lab, true),
        },
        Check {
            name: "replay",
            property: "seeded runs replay to identical bytes",
            tolerance: 0.0,
            bound: AtMost,
            quick: true,
            measure: |lab| Ok(if replay_digest(lab.seed)? == replay_digest(lab.seed)? { 0.0 } else { 1.0 }),
        },
    ]
}

/// Outcome of one check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub property: &'static str,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    pub error: Option<String>,
    pub millis: u128,
}

pub fn run_checks(ctx: &Context, report: &mut dyn FnMut(&CheckResult)) -> Result<Vec<CheckResult>, CliError> {
    let all = checks();
    let overrides = &ctx.config.verify.tolerances;
    if let Some(unknown) = overrides.keys().find(|k| !all.iter().any(|c| c.name == k.as_str())) {
        return Err(CliError::Config(format!("no check named `{unknown}`")));
    }
    let lab = Lab {
        seed: ctx.config.seed,
        quick: ctx.quick,
        ..Lab::default()
    };
    let mut out = vec![];
    for c in all.into_iter().filter(|c| c.quick || !ctx.quick) {
        let tolerance = overrides.get(c.name).copied().unwrap_or(c.tolerance);
        let t = std::time::Instant::now();
        let measured = (c.measure)(&lab);
        let (value, error) = match measured {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let pass = match (value, c.bound) {
            (Some(v), Bound::AtMost) => v <= tolerance,
            (Some(v), Bound::Above) => v > tolerance,
            (None, _) => false,
        };
        let r = CheckResult {
            name: c.name,
            property: c.property,
            value,
            tolerance,
            bound: c.bound,
            pass,
            error,
            millis: t.elapsed().as_millis(),
        };
        report(&r);
        out.push(r);
    }
    Ok(out)
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let mut run = start(ctx, "verify")?;
    println!("{:<6} {:<28} {:>12} {:>2} {:<9}  property", "status", "check", "value", "", "tolerance");
    let results = run_checks(ctx, &mut |r| {
        let op = match r.bound {
            Bound::AtMost => "<=",
            Bound::Above => ">",
        };
        let value = r.value.map_or("error".to_string(), |v| format!("{v:.3e}"));
        println!("{:<6} {:<28} {:>12} {:>2} {:<9.1e}  {}", status(r.pass), r.name, value, op, r.tolerance, r.property);
        if let Some(e) = &r.error {
            println!("       {e}");
        }
    })?;
    let mut t = Table::new("verify_report.csv", &["check", "property", "value", "tolerance", "status"]);
    let mut failures = vec![];
    for r in &results {
        t.push(row![r.name, r.property, r.value.unwrap_or(f64::NAN), r.tolerance, status(r.pass)]);
        if !r.pass {
            failures.push(r.name.to_string());
        }
    }
    run.write(&t)?;
    run.result(
        "checks",
        results
            .iter()
            .map(|r| json!({ "check": r.name, "value": r.value, "tolerance": r.tolerance, "status": status(r.pass), "error": r.error }))
            .collect::<Vec<_>>(),
    );
    let passed = results.len() - failures.len();
    println!("{passed}/{} checks passed", results.len());
    finish(run, failures)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn check_names_are_unique_snake_case() {
        let all = checks();
        let names: BTreeSet<&str> = all.iter().map(|c| c.name).collect();
        assert_eq!(names.len(), all.len());
        for c in &all {
            assert!(c.name.chars().all(|ch| ch.is_ascii_lowercase() || ch == '_' || ch.is_ascii_digit()));
            assert!(!c.property.is_empty());
        }
        assert!(all.iter().any(|c| !c.quick));
    }

    #[test]
    fn overrides_change_the_verdict() {
        let mut ctx = Context::new(&crate::CommonArgs {
            config: None,
            seed: None,
            out: None,
            threads: None,
            quick: true,
            group: None,
            walk: None,
        })
        .unwrap();
        ctx.config.verify.tolerances.insert("no_such_check".into(), 1.0);
        assert!(matches!(run_checks(&ctx, &mut |_| {}), Err(CliError::Config(_))));
    }
}
