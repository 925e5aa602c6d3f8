use super::{engine, finish, start, status};
use crate::error::CliError;
use crate::output::Table;
use crate::row;
use crate::Context;
use hypbrw::brw::{growth_rate, moment_experiment, run_replicas, BrwConfig};
use hypbrw::limit_set::{outer_radius, DimensionSettings};
use hypbrw::walk::{second_moment_bound, GreenEngine};
use serde_json::json;

/// `brw_trace.csv` and `brw_moments.csv`; the pooled growth rate is graded
/// against `H(λ)`.
pub fn brw(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.config.brw;
    let lambda = c.lambda;
    let eng = engine(ctx)?;
    let nu = ctx.config.offspring(lambda)?;
    let mut cfg = BrwConfig::new(eng.step_distribution().clone(), nu);
    cfg.check_regime(eng.spectral_radius())?;
    cfg.seed = ctx.config.seed;
    cfg.population_budget = c.population_budget;
    cfg.record_depth = 0;

    // killed runs to extinction; spheres up to R are fitted
    let sizing = DimensionSettings {
        population_target: c.population_target,
        margin: c.margin,
        ..DimensionSettings::default()
    };
    let (radius, kill) = match c.kill_radius {
        Some(k) => (k.saturating_sub(c.margin), k),
        None => {
            let r = outer_radius(&eng, lambda, &sizing)?;
            (r, r + c.margin)
        }
    };
    cfg.kill_radius = Some(kill);
    cfg.max_generation = c.max_generation.unwrap_or(100 * kill);
    let replicas = if ctx.quick { c.replicas.min(10) } else { c.replicas };

    let mut run = start(ctx, "brw")?;
    let traces = run_replicas(&cfg, replicas)?;
    let mut t = Table::new("brw_trace.csv", &["replica", "n", "population", "M_n", "min_speed", "max_speed"]);
    for tr in &traces {
        let last = tr.generations.max(tr.visited.len().saturating_sub(1));
        for n in 0..=last {
            let (lo, hi) = if n >= 1 { tr.speed.get(n).copied().unwrap_or((f64::NAN, f64::NAN)) } else { (f64::NAN, f64::NAN) };
            let pop = tr.population.get(n).copied().unwrap_or(0);
            t.push(row![tr.replica, n, pop, tr.m(n), lo, hi]);
        }
        if tr.truncated {
            run.mark_truncated();
        }
    }
    run.write(&t)?;

    let target = eng.growth_rate(lambda)?.h_estimate;
    let window = (radius.div_ceil(2), radius);
    let est = growth_rate(&traces, window)?;
    let rel = (est.pooled / target - 1.0).abs();
    let tol = if lambda == 1.0 { 0.02 } else { 0.05 };
    let pass = rel <= tol;
    println!(
        "{}  pooled growth {:.5} (median {:.5}) against H(λ) = {:.5} over radii {}..={}, {} replicas",
        status(pass),
        est.pooled,
        est.median,
        target,
        window.0,
        window.1,
        est.replicas_used
    );
    run.result(
        "growth",
        json!({
            "lambda": lambda,
            "pooled": est.pooled,
            "pooled_stderr": est.pooled_stderr,
            "median": est.median,
            "H": target,
            "relative_error": rel,
            "tolerance": tol,
            "window": [window.0, window.1],
            "kill_radius": kill,
            "replicas": est.replicas_used,
            "status": status(pass),
        }),
    );

    let moments = moment_table(ctx, &eng, &cfg)?;
    run.result("moment_replicas", moments.1);
    run.write(&moments.0)?;
    let failures = if pass { vec![] } else { vec!["growth".to_string()] };
    finish(run, failures)
}

/// `E[Z_x]` against `G_λ(e,x)` and `E[Z_x Z_y]` against its bound.
fn moment_table(ctx: &Context, eng: &GreenEngine, base: &BrwConfig) -> Result<(Table, u64), CliError> {
    let c = &ctx.config.brw;
    let mut t = Table::new("brw_moments.csv", &["kind", "x", "y", "mean", "se", "reference", "within_3se"]);
    let replicas = if ctx.quick { c.moment_replicas.min(1000) } else { c.moment_replicas };
    if replicas == 0 {
        return Ok((t, 0));
    }
    let g = eng.group().clone();
    let words = g.enumerate_ball(c.moment_radius, 1 << 20)?;
    let pairs = g.enumerate_ball(c.pair_radius, 1 << 20)?;
    let mut cfg = base.clone();
    cfg.kill_radius = Some(c.moment_kill_radius);
    cfg.max_generation = 100_000;
    cfg.record_depth = c.moment_radius.max(c.pair_radius);
    let lambda = cfg.lambda();
    let m = moment_experiment(&cfg, replicas, &words, &pairs)?;
    for (x, est) in words.iter().zip(&m.first) {
        let reference = eng.green(lambda, x)?.value;
        let ok = (est.mean - reference).abs() <= 3.0 * est.stderr;
        t.push(row![
            "first",
            g.format_word(x),
            String::new(),
            est.mean,
            est.stderr,
            reference,
            ok
        ]);
    }
    let sigma2 = cfg.nu.second_moment();
    for (i, x) in pairs.iter().enumerate() {
        for (j, y) in pairs.iter().enumerate() {
            let est = m.second[i][j];
            let bound = second_moment_bound(eng, lambda, sigma2, x, y)?.value;
            let ok = est.mean <= bound + 3.0 * est.stderr;
            t.push(row![
                "second",
                g.format_word(x),
                g.format_word(y),
                est.mean,
                est.stderr,
                bound,
                ok
            ]);
        }
    }
    Ok((t, replicas))
}
