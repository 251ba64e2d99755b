//! `shb check`: the catalog invariant suite; one line per check,
//! exit 0 iff everything passes.

use shb_core::verify::{run_catalog_checks, CheckScale};

use crate::config::ExperimentConfig;
use crate::CliError;

pub fn execute(cfg: &ExperimentConfig, quick: bool) -> Result<(), CliError> {
    let scale = if quick { CheckScale::quick() } else { CheckScale::full() };
    let results = run_catalog_checks::<f64>(scale, cfg.seed)?;
    let mut failures = 0usize;
    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {} ({})", r.name, r.detail);
        if !r.passed {
            failures += 1;
        }
    }
    println!("{} checks, {} failures", results.len(), failures);
    if failures > 0 {
        return Err(CliError::check_failed(format!("{failures} checks failed")));
    }
    Ok(())
}
