//! Experiment configuration: JSON document with `--set key=value`
//! overrides. Every tolerance that appears in any report is part of this
//! document, and the fully resolved document is echoed into the manifest.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use shb_core::analysis::AnalysisParams;
use shb_core::graph::SelectionPolicy;
use shb_core::heavyball::Form;
use shb_core::problem::{catalog, problem_from_json, StochasticProblem};
use shb_core::schedule::StepSchedule;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// catalog name, or a label when `problem_file` is set
    pub problem: String,
    #[serde(default)]
    pub problem_file: Option<String>,
    pub schedule: ScheduleConfig,
    pub form: Form,
    pub policy: SelectionPolicy,
    pub steps: usize,
    /// master seed; per-run seeds derive from it by counter split
    pub seed: u64,
    pub n_seeds: u64,
    #[serde(default)]
    pub init: Option<InitConfig>,
    pub analysis: AnalysisConfig,
    pub di: DiConfig,
    pub avoidance: AvoidanceConfig,
    pub out: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub family: String,
    pub a: f64,
    pub gamma: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitConfig {
    Fixed { w: Vec<f64>, y: Vec<f64> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub epsilon: f64,
    pub theta: f64,
    pub burn_in: f64,
    pub gap_tol: f64,
    pub y_tol: f64,
    pub osc_tol: f64,
    pub clarke_tol: f64,
    /// noise-tail threshold reported by sweeps (calibrated on the catalog)
    pub tail_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiConfig {
    pub h: f64,
    pub horizon: f64,
    pub selector: String,
    /// sliding-window length for the perturbed-solution residual report
    pub window: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvoidanceConfig {
    pub n_runs: u64,
    /// pair-space box; empty means the default [-2, 2]^(2p)
    #[serde(default)]
    pub lo: Vec<f64>,
    #[serde(default)]
    pub hi: Vec<f64>,
}

pub fn default_config_value() -> Value {
    serde_json::json!({
        "problem": "abs1d",
        "problem_file": null,
        "schedule": {"family": "power", "a": 1.0, "gamma": 0.75, "r": 1.0},
        "form": "A",
        "policy": "zero",
        "steps": 100_000,
        "seed": 0,
        "n_seeds": 1,
        "init": null,
        "analysis": {
            "epsilon": 0.05,
            "theta": 0.05,
            "burn_in": 0.2,
            "gap_tol": 0.05,
            "y_tol": 0.05,
            "osc_tol": 0.02,
            "clarke_tol": 0.1,
            "tail_tol": 0.15
        },
        "di": {"h": 0.01, "horizon": 20.0, "selector": "least-norm", "window": 5.0},
        "avoidance": {"n_runs": 1000, "lo": [], "hi": []},
        "out": "out"
    })
}

/// Deep merge: objects merge field-wise, everything else replaces.
pub fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Apply one `key=value` override; dotted keys descend into objects and
/// the value is parsed as JSON (falling back to a plain string).
pub fn apply_set(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("--set needs key=value, got {spec:?}")))?;
    let value: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| CliError::validation(format!("--set path {path:?} is not an object")))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        slot = obj
            .entry((*part).to_string())
            .or_insert_with(|| Value::Object(serde_json::Map::new()));
    }
    Ok(())
}

/// Resolve the experiment configuration from defaults, an optional config
/// file, an optional problem-name shortcut, and `--set` overrides.
pub fn resolve(
    config_path: Option<&str>,
    problem: Option<&str>,
    out: Option<&str>,
    sets: &[String],
) -> Result<(ExperimentConfig, Value), CliError> {
    let mut doc = default_config_value();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {path}: {e}")))?;
        let file_doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("bad config JSON in {path}: {e}")))?;
        merge(&mut doc, file_doc);
    }
    if let Some(name) = problem {
        apply_set(&mut doc, &format!("problem=\"{name}\""))?;
    }
    if let Some(dir) = out {
        apply_set(&mut doc, &format!("out={}", serde_json::json!(dir)))?;
    }
    for spec in sets {
        apply_set(&mut doc, spec)?;
    }
    let config: ExperimentConfig = serde_json::from_value(doc.clone())
        .map_err(|e| CliError::validation(format!("invalid configuration: {e}")))?;
    Ok((config, doc))
}

impl ExperimentConfig {
    pub fn load_problem(&self) -> Result<StochasticProblem<f64>, CliError> {
        match &self.problem_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::validation(format!("cannot read problem file {path}: {e}"))
                })?;
                Ok(problem_from_json(&text)?)
            }
            None => Ok(catalog::by_name(&self.problem)?),
        }
    }

    pub fn build_schedule(&self) -> Result<StepSchedule<f64>, CliError> {
        let s = &self.schedule;
        match s.family.as_str() {
            "power" => Ok(StepSchedule::power(s.a, s.gamma, s.r)?),
            "constant-ratio-power" => Ok(StepSchedule::constant_ratio_power(s.a, s.gamma, s.r)?),
            other => Err(CliError::validation(format!(
                "unknown schedule family {other:?}; known: power, constant-ratio-power"
            ))),
        }
    }

    pub fn analysis_params(&self) -> AnalysisParams {
        AnalysisParams {
            epsilon: self.analysis.epsilon,
            theta: self.analysis.theta,
            burn_in: self.analysis.burn_in,
            gap_tol: self.analysis.gap_tol,
            y_tol: self.analysis.y_tol,
            osc_tol: self.analysis.osc_tol,
            clarke_tol: self.analysis.clarke_tol,
        }
    }

    /// The initial condition for run `index` under the master seed.
    pub fn init_for(
        &self,
        problem: &StochasticProblem<f64>,
        index: u64,
    ) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        match &self.init {
            Some(InitConfig::Fixed { w, y }) => {
                if w.len() != problem.dim() || y.len() != problem.dim() {
                    return Err(CliError::validation(format!(
                        "fixed init has dim {} but problem {} has dim {}",
                        w.len(),
                        problem.name(),
                        problem.dim()
                    )));
                }
                Ok((w.clone(), y.clone()))
            }
            Some(InitConfig::UniformBox { lo, hi }) => {
                let p = problem.dim();
                if lo.len() != 2 * p || hi.len() != 2 * p {
                    return Err(CliError::validation(format!(
                        "uniform-box init needs 2p = {} bounds, got {}",
                        2 * p,
                        lo.len()
                    )));
                }
                let mut rng = shb_core::rng::split_rng(self.seed, index);
                let z = shb_core::rng::uniform_box(&mut rng, lo, hi);
                Ok((z[..p].to_vec(), z[p..].to_vec()))
            }
            None => catalog::default_init(problem.name()).ok_or_else(|| {
                CliError::validation(format!(
                    "no default init for problem {:?}; set init in the config",
                    problem.name()
                ))
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_sets_apply() {
        let (cfg, _) = resolve(None, Some("flat1d"), None, &[
            "steps=500".to_string(),
            "schedule.gamma=0.8".to_string(),
            "init={\"kind\":\"fixed\",\"w\":[1.0],\"y\":[0.0]}".to_string(),
        ])
        .unwrap();
        assert_eq!(cfg.problem, "flat1d");
        assert_eq!(cfg.steps, 500);
        assert_eq!(cfg.schedule.gamma, 0.8);
        assert!(matches!(cfg.init, Some(InitConfig::Fixed { .. })));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = resolve(None, None, None, &["stepz=3".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
