//! `shb sweep`: the same experiment over n_seeds counter-split seeds,
//! with per-seed summaries (sweep.csv) and aggregate quantiles
//! (sweep.json). Per-run failures become per-row status without aborting.

use serde_json::Value;

use shb_core::analysis::{summarize_run, RunSummary};
use shb_core::heavyball::{run, Init, RunFailure};
use shb_core::rng::derive_seed;

use crate::config::ExperimentConfig;
use crate::output::{quantile, OutDir};
use crate::CliError;

fn quantiles(values: &mut [f64]) -> Value {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    serde_json::json!({
        "n": values.len(),
        "q05": quantile(values, 0.05),
        "q50": quantile(values, 0.50),
        "q95": quantile(values, 0.95),
        "mean": if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / values.len() as f64 },
    })
}

pub fn execute(cfg: &ExperimentConfig, resolved: &Value) -> Result<(), CliError> {
    if cfg.n_seeds == 0 {
        return Err(CliError::validation("n_seeds must be >= 1"));
    }
    let problem = cfg.load_problem()?;
    let schedule = cfg.build_schedule()?;
    let out = OutDir::create(&cfg.out)?;
    out.write_manifest("sweep", resolved, &problem)?;

    let mut summaries: Vec<RunSummary> = Vec::new();
    let mut diverged = 0u64;
    for i in 0..cfg.n_seeds {
        let (w0, y0) = cfg.init_for(&problem, i)?;
        let init = Init::PositionVelocity { w0, y0 };
        let seed = derive_seed(cfg.seed, i);
        match run(&problem, &schedule, &init, cfg.policy, seed, cfg.steps, cfg.form) {
            Ok(record) => summaries.push(summarize_run(&record, &problem)),
            Err(RunFailure::Diverged(d)) => {
                diverged += 1;
                summaries.push(summarize_run(&d.record, &problem));
            }
            Err(RunFailure::Core(e)) => return Err(e.into()),
        }
    }

    let mut csv = String::from(
        "seed,status,final_f,max_y_norm,final_y_norm,noise_tail_sup,objective_oscillation,final_d_gap,final_clarke_gap,velocity_bound_holds\n",
    );
    let fmt_opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for s in &summaries {
        let final_y_norm = s.final_y.iter().map(|y| y * y).sum::<f64>().sqrt();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.seed,
            s.status.replace(',', ";"),
            s.final_f,
            s.max_y_norm,
            final_y_norm,
            s.noise_tail_sup,
            s.objective_oscillation,
            fmt_opt(s.final_d_gap),
            fmt_opt(s.final_clarke_gap),
            s.velocity_bound_holds,
        ));
    }
    out.write("sweep.csv", &csv)?;

    let completed: Vec<&RunSummary> =
        summaries.iter().filter(|s| s.status == "completed").collect();
    let mut clarke: Vec<f64> = completed.iter().filter_map(|s| s.final_clarke_gap).collect();
    let mut y_norm: Vec<f64> = completed
        .iter()
        .map(|s| s.final_y.iter().map(|y| y * y).sum::<f64>().sqrt())
        .collect();
    let mut osc: Vec<f64> = completed.iter().map(|s| s.objective_oscillation).collect();
    let mut tail: Vec<f64> = completed.iter().map(|s| s.noise_tail_sup).collect();
    let tail_ok = tail.iter().filter(|t| **t <= cfg.analysis.tail_tol).count();
    let aggregate = serde_json::json!({
        "n_seeds": cfg.n_seeds,
        "completed": completed.len(),
        "diverged": diverged,
        "final_clarke_gap": quantiles(&mut clarke),
        "final_y_norm": quantiles(&mut y_norm),
        "objective_oscillation": quantiles(&mut osc),
        "noise_tail_sup": quantiles(&mut tail),
        "noise_tail_below_tol": {"tol": cfg.analysis.tail_tol, "count": tail_ok},
        "velocity_bound_all_hold": summaries.iter().all(|s| s.velocity_bound_holds),
    });
    out.write_json("sweep.json", &aggregate)?;
    println!(
        "sweep complete: {} seeds ({} diverged); outputs in {}",
        cfg.n_seeds,
        diverged,
        out.dir().display()
    );
    Ok(())
}
