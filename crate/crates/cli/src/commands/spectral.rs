use super::{engine, finish, start, status};
use crate::error::CliError;
use crate::output::Table;
use crate::row;
use crate::Context;
use hypbrw::spectral::{
    build_automaton, build_potential, critical_exponent_fit, dyadic_grid, eta_exponent_fit, fit_endpoint,
    pressure_curve, verify_hnr_identity, ExponentFit,
};
use hypbrw::walk::GreenEngine;
use serde_json::json;

fn default_horizon(eng: &GreenEngine) -> usize {
    let mu = eng.step_distribution();
    if mu.is_isotropic() && mu.is_nearest_neighbour() && mu.laziness() == 0.0 {
        0
    } else {
        2
    }
}

/// `pressure_curve.csv`: `e^{pressure}` against the sphere-sum growth.
pub fn pressure(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.config.pressure;
    let eng = engine(ctx)?;
    let automaton = build_automaton(eng.group())?;
    let horizon = c.horizon.unwrap_or_else(|| default_horizon(&eng));
    let tol = c.tolerance.unwrap_or(if horizon == 0 { 1e-3 } else { 1e-2 });
    let grid: Vec<f64> = if c.r.is_empty() {
        let rc = eng.critical_weight();
        let m = c.points.max(2);
        (0..m).map(|i| 1.0 + (rc - 1.0) * i as f64 / (m - 1) as f64).collect()
    } else {
        c.r.clone()
    };
    for &r in &grid {
        eng.check_weight(r)?;
    }
    let mut run = start(ctx, "pressure")?;
    let curve = pressure_curve(&eng, &automaton, horizon, &grid)?;
    let mut t = Table::new(
        "pressure_curve.csv",
        &["r", "pressure", "H", "gap", "H_series", "rel_diff", "status"],
    );
    let mut failures = vec![];
    let mut worst: f64 = 0.0;
    for p in &curve {
        let series = eng.growth_rate(p.r)?.h_estimate;
        let rel = (p.growth() - series).abs() / series;
        worst = worst.max(rel);
        let pass = rel <= tol;
        if !pass {
            failures.push(format!("pressure at r = {}", p.r));
        }
        t.push(row![p.r, p.pressure, p.growth(), p.gap, series, rel, status(pass)]);
    }
    run.write(&t)?;
    println!(
        "{}  transfer-operator growth matches the sphere sums on {} weights (worst {:.2e}, tolerance {:.0e}, horizon {})",
        status(failures.is_empty()),
        curve.len(),
        worst,
        tol,
        horizon
    );

    // the finite-n identity; exact on horizon 0 for isotropic nearest-neighbour walks
    let r_mid = grid[grid.len() / 2];
    let potential = build_potential(&eng, &automaton, r_mid, horizon)?;
    let hnr = verify_hnr_identity(&eng, &automaton, &potential, c.hnr_n)?;
    let exact = horizon == 0;
    let hnr_pass = !exact || hnr.relative_error < 1e-10;
    if !hnr_pass {
        failures.push("finite sphere-sum identity".into());
    }
    println!(
        "{}  sphere sum at n = {} from the transfer operator: relative error {:.2e}",
        if exact { status(hnr_pass) } else { "INFO" },
        hnr.n,
        hnr.relative_error
    );
    run.result(
        "pressure",
        json!({
            "horizon": horizon,
            "tolerance": tol,
            "worst_rel_diff": worst,
            "points": curve.len(),
            "hnr": { "r": r_mid, "n": hnr.n, "series": hnr.series, "transfer": hnr.transfer, "relative_error": hnr.relative_error },
        }),
    );
    finish(run, failures)
}

/// `exponent_fit.csv`: slopes of `log(H(r_c) − H(r))` and `log η(r)`
/// against `log(r_c − r)`.
pub fn exponent(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.config.exponent;
    let eng = engine(ctx)?;
    let automaton = build_automaton(eng.group())?;
    let rc = fit_endpoint(&eng);
    let mut run = start(ctx, "exponent")?;
    let critical = critical_exponent_fit(&eng, &automaton, c.horizon, &dyadic_grid(rc, c.j_lo, c.j_hi, c.step))?;
    let eta = eta_exponent_fit(&eng, &dyadic_grid(rc, c.eta_j_lo, c.eta_j_hi, c.step))?;
    let mut t = Table::new(
        "exponent_fit.csv",
        &["target", "slope", "C_hat", "residual", "window_lo", "window_hi", "points", "status"],
    );
    let mut failures = vec![];
    let mut results = vec![];
    for (name, expected, fit) in [("critical", 0.5, &critical), ("eta", -0.5, &eta)] {
        let pass = (fit.slope - expected).abs() <= c.tolerance;
        if !pass {
            failures.push(format!("{name} exponent"));
        }
        t.push(fit_row(name, fit, status(pass)));
        println!(
            "{}  {name:<8} slope {:.4} (expected {expected}, tolerance {}), C = {:.5}, {} points",
            status(pass),
            fit.slope,
            c.tolerance,
            fit.c_hat,
            fit.points
        );
        results.push(json!({ "target": name, "slope": fit.slope, "slope_stderr": fit.slope_stderr, "c_hat": fit.c_hat, "status": status(pass) }));
    }
    run.write(&t)?;
    run.result("endpoint", rc);
    run.result("fits", results);
    finish(run, failures)
}

fn fit_row(name: &str, fit: &ExponentFit, label: &str) -> Vec<String> {
    row![
        name,
        fit.slope,
        fit.c_hat,
        fit.residual,
        fit.window.0,
        fit.window.1,
        fit.points,
        label
    ]
}
