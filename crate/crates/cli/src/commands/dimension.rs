use super::{engine, finish, start, status};
use crate::error::CliError;
use crate::output::Table;
use crate::row;
use crate::Context;
use hypbrw::limit_set::{dimension_report, DimensionSettings};
use serde_json::json;

/// `dimension_report.csv` and `cover_counts.csv`.
///
/// Rows at the critical mean are labelled `conjectural` and not graded.
pub fn dimension(ctx: &Context) -> Result<(), CliError> {
    let c = &ctx.config.dimension;
    if c.lambdas.is_empty() {
        return Err(CliError::Config("dimension needs at least one mean".into()));
    }
    let eng = engine(ctx)?;
    let mut s = DimensionSettings {
        a: c.a,
        replicas: c.replicas,
        batches: c.batches,
        population_target: c.population_target,
        population_budget: ctx.config.brw.population_budget,
        max_radius: c.max_radius,
        margin: c.margin,
        epsilon: c.epsilon,
        seed: ctx.config.seed,
    };
    if ctx.quick {
        s.replicas = s.replicas.min(20);
        s.population_target = s.population_target.min(2e5);
    }
    let mut run = start(ctx, "dimension")?;
    let rows = dimension_report(&eng, &c.lambdas, &|l| ctx.config.offspring(l), &s)?;
    let critical = eng.critical_weight();

    let mut report = Table::new(
        "dimension_report.csv",
        &[
            "lambda", "H", "h_target", "box_est", "box_se", "corr_est", "corr_res", "replicas", "radius", "status",
        ],
    );
    let mut covers = Table::new("cover_counts.csv", &["lambda", "k", "N_k"]);
    let mut failures = vec![];
    let mut results = vec![];
    for r in &rows {
        let label = if r.lambda >= critical * (1.0 - 1e-9) {
            "conjectural"
        } else {
            let allowed = if r.target > 0.0 { c.tolerance * r.target } else { c.zero_tolerance };
            let pass = r.box_error() <= allowed && r.correlation_error() <= allowed;
            if !pass {
                failures.push(format!("dimension at λ = {}", r.lambda));
            }
            status(pass)
        };
        report.push(row![
            r.lambda,
            r.growth,
            r.target,
            r.box_estimate.value,
            r.box_mc_stderr,
            r.correlation.value,
            r.correlation_mc_stderr,
            r.replicas,
            r.radius,
            label
        ]);
        for &(k, n) in &r.cover.counts {
            covers.push(row![r.lambda, k, n]);
        }
        println!(
            "{label:<11} λ = {:<6} log H = {:.5}  box {:.5} ± {:.5}  correlation {:.5} ± {:.5}  R = {}",
            r.lambda,
            r.target,
            r.box_estimate.value,
            r.box_mc_stderr,
            r.correlation.value,
            r.correlation_mc_stderr,
            r.radius
        );
        results.push(json!({
            "lambda": r.lambda,
            "h_target": r.target,
            "box": r.box_estimate.value,
            "correlation": r.correlation.value,
            "radius": r.radius,
            "status": label,
        }));
    }
    run.write(&report)?;
    run.write(&covers)?;
    run.result("rows", results);
    finish(run, failures)
}
