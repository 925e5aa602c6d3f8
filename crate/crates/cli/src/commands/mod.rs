//! One function per subcommand. Each writes its CSV files and the manifest,
//! prints a short summary, and fails with exit code 4 when a row it grades
//! misses its tolerance.

mod brw;
mod dimension;
mod green;
mod spectral;

pub use brw::brw;
pub use dimension::dimension;
pub use green::green;
pub use spectral::{exponent, pressure};

use crate::config::green_settings;
use crate::error::CliError;
use crate::output::Run;
use crate::Context;
use hypbrw::walk::GreenEngine;

pub(crate) fn engine(ctx: &Context) -> Result<GreenEngine, CliError> {
    let mu = ctx.config.step_distribution()?;
    Ok(GreenEngine::new(&mu, green_settings(ctx.quick))?)
}

pub(crate) fn start(ctx: &Context, command: &str) -> Result<Run, CliError> {
    let echo = serde_json::to_value(&ctx.config)?;
    let mut run = Run::new(&ctx.out, command, echo, ctx.config.seed)?;
    run.result("quick", ctx.quick);
    Ok(run)
}

/// Writes the manifest, then turns failed rows into exit code 4.
pub(crate) fn finish(run: Run, failures: Vec<String>) -> Result<(), CliError> {
    let dir = run.dir.clone();
    run.finish()?;
    println!("wrote {}", dir.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed: {}", failures.join(", "))))
    }
}

pub(crate) fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failures_exit_with_code_4() {
        let dir = tempfile::tempdir().unwrap();
        let run = Run::new(dir.path(), "t", serde_json::Value::Null, 0).unwrap();
        let err = finish(run, vec!["x".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(dir.path().join("manifest.json").exists());
        assert_eq!(status(true), "PASS");
    }
}
