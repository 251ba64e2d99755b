//! `shb run`: one recorded trajectory plus its post-hoc report.
//! Writes run.csv, summary.json, report.json, occupation.csv, manifest.json.

use serde_json::Value;

use shb_core::analysis::{occupation, summarize_run, theorem_report};
use shb_core::dynamics::{interpolate, perturbed_solution_check};
use shb_core::heavyball::{run, Init, RunFailure};

use crate::config::ExperimentConfig;
use crate::output::OutDir;
use crate::CliError;

pub fn execute(cfg: &ExperimentConfig, resolved: &Value) -> Result<(), CliError> {
    let problem = cfg.load_problem()?;
    let schedule = cfg.build_schedule()?;
    let (w0, y0) = cfg.init_for(&problem, 0)?;
    let init = Init::PositionVelocity { w0, y0 };
    let out = OutDir::create(&cfg.out)?;
    out.write_manifest("run", resolved, &problem)?;

    let outcome = run(&problem, &schedule, &init, cfg.policy, cfg.seed, cfg.steps, cfg.form);
    let (record, diverged) = match outcome {
        Ok(record) => (record, None),
        Err(RunFailure::Diverged(d)) => {
            let step = d.step;
            (d.record, Some(step))
        }
        Err(RunFailure::Core(e)) => return Err(e.into()),
    };

    out.write("run.csv", &record.to_csv())?;
    out.write_json("summary.json", &summarize_run(&record, &problem))?;
    if !record.rows.is_empty() {
        let params = cfg.analysis_params();
        match theorem_report(&record, &problem, &params) {
            Ok(report) => out.write_json("report.json", &report)?,
            Err(shb_core::Error::Capability(msg)) => {
                out.write_json("report.json", &serde_json::json!({"skipped": msg}))?;
            }
            Err(e) => return Err(e.into()),
        }
        let grid = occupation(&record, cfg.analysis.epsilon, cfg.analysis.burn_in)?;
        out.write("occupation.csv", &grid.to_csv())?;
        if problem.dim() == 1 && record.rows.len() >= 2 {
            let path = interpolate(&record)?;
            let report =
                perturbed_solution_check(&path, &problem, record.r, None, cfg.di.window)?;
            out.write_json("perturbed.json", &report)?;
        }
    }

    match diverged {
        Some(step) => Err(CliError::divergence(format!(
            "trajectory diverged at step {step}; partial outputs written to {}",
            out.dir().display()
        ))),
        None => {
            println!("run complete: {} steps on {}; outputs in {}", cfg.steps, record.problem, out.dir().display());
            Ok(())
        }
    }
}
