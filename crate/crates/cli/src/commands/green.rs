use super::{engine, finish, start};
use crate::error::CliError;
use crate::output::Table;
use crate::row;
use crate::Context;
use serde_json::json;

/// `rho.csv`, `green_series.csv` and `h_estimate.csv`.
pub fn green(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.config.green;
    if c.r.is_empty() {
        return Err(CliError::Config("green needs at least one weight".into()));
    }
    let eng = engine(ctx)?;
    for &r in &c.r {
        eng.check_weight(r)?;
    }
    let n_max = c.n_max.min(eng.max_radius());
    let mut run = start(ctx, "green")?;

    let rho = eng.spectral_radius();
    let mut t = Table::new("rho.csv", &["n", "a_n", "extrapolant"]);
    for &(n, a, ext) in &rho.roots {
        t.push(row![n, a, ext]);
    }
    run.write(&t)?;
    run.result(
        "spectral_radius",
        json!({ "rho_hat": rho.rho_hat, "residual": rho.residual, "depth": rho.depth, "converged": rho.converged }),
    );
    println!("rho_hat = {:.12} (residual {:.1e})", rho.rho_hat, rho.residual);

    let mut series = Table::new("green_series.csv", &["r", "n", "H_n", "ratio"]);
    let mut est = Table::new("h_estimate.csv", &["r", "H", "H_error", "log_H", "heuristic"]);
    let mut results = vec![];
    for &r in &c.r {
        let s = eng.sphere_series(r, n_max)?;
        let growth = eng.growth_rate(r)?;
        for (n, &h) in s.values.iter().enumerate() {
            let ratio = if n == 0 { f64::NAN } else { h / s.values[n - 1] };
            series.push(row![r, n, h, ratio]);
        }
        est.push(row![r, growth.h_estimate, growth.h_error, growth.h_estimate.ln(), growth.heuristic]);
        if growth.heuristic {
            run.mark_truncated();
        }
        println!("r = {r:<10} H = {:.12}", growth.h_estimate);
        results.push(json!({ "r": r, "H": growth.h_estimate, "H_error": growth.h_error }));
    }
    run.write(&series)?;
    run.write(&est)?;
    run.result("H", results);
    finish(run, vec![])
}
