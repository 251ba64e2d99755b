//! Post-hoc verification on recorded runs: occupation measures and
//! essential accumulation candidates, criticality of candidates,
//! noise-tail convergence, objective convergence, velocity bounds, and
//! the avoidance experiment over randomized initializations.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SelectionPolicy;
use crate::heavyball::{run, Form, Init, RunFailure, RunRecord, RunStatus};
use crate::linalg;
use crate::problem::StochasticProblem;
use crate::rng::{derive_seed, split_rng, uniform_box};
use crate::scalar::{cst, Scalar};
use crate::schedule::StepSchedule;

/// Analysis knobs with their calibrated catalog defaults.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct AnalysisParams {
    /// occupation cell side
    pub epsilon: f64,
    /// essentiality weight threshold
    pub theta: f64,
    /// fraction of initial steps discarded
    pub burn_in: f64,
    /// criticality gap tolerance
    pub gap_tol: f64,
    /// velocity norm tolerance
    pub y_tol: f64,
    /// objective oscillation tolerance over the last tenth
    pub osc_tol: f64,
    /// Clarke gap tolerance used by avoidance statistics
    pub clarke_tol: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            epsilon: 0.05,
            theta: 0.05,
            burn_in: 0.2,
            gap_tol: 0.05,
            y_tol: 0.05,
            osc_tol: 0.02,
            clarke_tol: 0.1,
        }
    }
}

/// Step-size-weighted visitation frequencies over a lattice of cells of
/// side `epsilon` centered at integer multiples of `epsilon` (so cell
/// centers land exactly on the catalog's critical points).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationGrid<F: Scalar> {
    pub epsilon: F,
    pub weights: BTreeMap<Vec<i64>, F>,
    pub bbox_lo: Vec<F>,
    pub bbox_hi: Vec<F>,
    pub total_alpha: F,
}

impl<F: Scalar> OccupationGrid<F> {
    pub fn cell_center(&self, key: &[i64]) -> Vec<F> {
        key.iter().map(|&i| cst::<F>(i as f64) * self.epsilon).collect()
    }

    /// CSV columns `c0,..,c(2p-1),weight`.
    pub fn to_csv(&self) -> String {
        let dim = self.bbox_lo.len();
        let mut out = String::new();
        for i in 0..dim {
            out.push_str(&format!("c{i},"));
        }
        out.push_str("weight\n");
        for (key, weight) in &self.weights {
            for c in self.cell_center(key) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{weight}\n"));
        }
        out
    }
}

/// Step-size-weighted occupation of the pair trajectory after burn-in.
pub fn occupation<F: Scalar>(
    record: &RunRecord<F>,
    epsilon: F,
    burn_in: f64,
) -> Result<OccupationGrid<F>> {
    if !(epsilon > F::zero()) {
        return Err(Error::Validation("epsilon must be > 0".into()));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::Validation("burn-in must lie in [0, 1)".into()));
    }
    let n = record.rows.len();
    let start = ((n as f64) * burn_in).floor() as usize;
    if start >= n {
        return Err(Error::Empty("no rows after burn-in".into()));
    }
    let dim = 2 * record.dim;
    let mut weights: BTreeMap<Vec<i64>, F> = BTreeMap::new();
    let mut bbox_lo = vec![F::infinity(); dim];
    let mut bbox_hi = vec![F::neg_infinity(); dim];
    let mut total = F::zero();
    for row in &record.rows[start..] {
        let z: Vec<F> = row.w.iter().chain(&row.y).copied().collect();
        let key: Vec<i64> = z
            .iter()
            .map(|x| (*x / epsilon).round().to_f64().expect("finite iterate") as i64)
            .collect();
        let entry = weights.entry(key).or_insert_with(F::zero);
        *entry = *entry + row.alpha;
        total = total + row.alpha;
        for i in 0..dim {
            bbox_lo[i] = bbox_lo[i].min(z[i]);
            bbox_hi[i] = bbox_hi[i].max(z[i]);
        }
    }
    for w in weights.values_mut() {
        *w = *w / total;
    }
    Ok(OccupationGrid { epsilon, weights, bbox_lo, bbox_hi, total_alpha: total })
}

/// Cell centers with weight >= theta, heaviest first (ties by cell index).
pub fn essential_candidates<F: Scalar>(
    grid: &OccupationGrid<F>,
    theta: f64,
) -> Result<Vec<(Vec<F>, F)>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Validation("theta must lie in (0, 1]".into()));
    }
    let threshold = cst::<F>(theta);
    let mut picked: Vec<(&Vec<i64>, F)> = grid
        .weights
        .iter()
        .filter(|(_, w)| **w >= threshold)
        .map(|(k, w)| (k, *w))
        .collect();
    picked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("finite weights").then_with(|| a.0.cmp(b.0))
    });
    Ok(picked.into_iter().map(|(k, w)| (grid.cell_center(k), w)).collect())
}

/// sup over k >= K/2 of || sum_(i=k)^(K-1) beta_i u_(i+1) ||, by exact
/// backward accumulation of the recorded noise.
pub fn noise_tail_sup<F: Scalar>(record: &RunRecord<F>) -> F {
    tail_sup_from(record, record.steps() / 2)
}

/// Same sup taken over every k >= 0 (used by the velocity bound).
pub fn noise_tail_sup_full<F: Scalar>(record: &RunRecord<F>) -> F {
    tail_sup_from(record, 0)
}

fn tail_sup_from<F: Scalar>(record: &RunRecord<F>, from: usize) -> F {
    let steps = record.steps();
    let mut tail = linalg::zeros(record.dim);
    let mut sup = F::zero();
    for k in (from..steps).rev() {
        // beta_k from row k, u_(k+1) from row k+1
        let beta = record.rows[k].beta;
        let u = &record.rows[k + 1].noise;
        tail = linalg::axpy(&tail, beta, u);
        sup = sup.max(linalg::norm(&tail));
    }
    sup
}

/// Right side of the per-run velocity bound
/// `max_k ||y_k|| <= max(||y_0||, sup_k ||V(w_k)|| + B) + 1e-6`, where the
/// noise tail bound B is twice the full-range tail sup: the shifted
/// sequence y_k + tail_k evolves by convex combination toward V + tail, so
/// one tail sup enters through the comparison sequence and one through the
/// shift back.
pub fn velocity_bound_rhs<F: Scalar>(record: &RunRecord<F>) -> F {
    let tail_bound = cst::<F>(2.0) * noise_tail_sup_full(record);
    let y0 = linalg::norm(&record.rows[0].y);
    let sup_v = record
        .rows
        .iter()
        .map(|r| linalg::norm(&r.v_mean))
        .fold(F::zero(), F::max);
    y0.max(sup_v + tail_bound) + cst(1e-6)
}

/// One essential accumulation candidate with its verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub weight: f64,
    pub d_gap: f64,
    pub clarke_gap: Option<f64>,
    pub y_norm: f64,
    pub energy: f64,
    /// critical for the conservative calculus but not for Clarke
    pub artificial: bool,
}

/// Verdicts of the recorded run against the convergence-theorem items.
#[derive(Debug, Clone, Serialize)]
pub struct AccumulationReport {
    pub epsilon: f64,
    pub theta: f64,
    pub burn_in: f64,
    pub gap_tol: f64,
    pub y_tol: f64,
    pub osc_tol: f64,
    pub candidates: Vec<CandidateReport>,
    pub energy_min_index: Option<usize>,
    pub objective_oscillation: f64,
    /// every essential candidate has d_gap <= gap_tol and ||y|| <= y_tol
    pub essential_criticality: bool,
    /// the energy-minimal candidate passes the same test
    pub minimal_criticality: bool,
    /// objective oscillation over the last tenth <= osc_tol
    pub objective_converged: bool,
    /// essential criticality with the Clarke gap, when the oracle exists
    pub clarke_essential_criticality: Option<bool>,
}

/// Full post-hoc report: essential candidates, their criticality gaps and
/// velocity norms, the energy-minimal candidate, and the objective tail.
pub fn theorem_report<F: Scalar>(
    record: &RunRecord<F>,
    problem: &StochasticProblem<F>,
    params: &AnalysisParams,
) -> Result<AccumulationReport> {
    let grid = occupation(record, cst(params.epsilon), params.burn_in)?;
    let candidates = essential_candidates(&grid, params.theta)?;
    let p = record.dim;
    let r = record.r;
    let mut reports = Vec::with_capacity(candidates.len());
    for (center, weight) in &candidates {
        let (w, y) = center.split_at(p);
        let (d_gap, clarke_gap) = problem.criticality_gap(w)?;
        let y_norm = linalg::norm(y);
        let energy = problem.expected_value(w)? + r * cst::<F>(0.5) * linalg::dot(y, y);
        let artificial = match clarke_gap {
            Some(c) => {
                d_gap.to_report() <= params.gap_tol && c.to_report() > params.gap_tol
            }
            None => false,
        };
        reports.push(CandidateReport {
            w: w.iter().map(|x| x.to_report()).collect(),
            y: y.iter().map(|x| x.to_report()).collect(),
            weight: weight.to_report(),
            d_gap: d_gap.to_report(),
            clarke_gap: clarke_gap.map(|c| c.to_report()),
            y_norm: y_norm.to_report(),
            energy: energy.to_report(),
            artificial,
        });
    }
    let energy_min_index = reports
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.energy.partial_cmp(&b.1.energy).expect("finite energies"))
        .map(|(i, _)| i);
    let passes =
        |c: &CandidateReport| c.d_gap <= params.gap_tol && c.y_norm <= params.y_tol;
    let essential_criticality = !reports.is_empty() && reports.iter().all(passes);
    let minimal_criticality = energy_min_index.is_some_and(|i| passes(&reports[i]));
    let objective_oscillation = record.objective_oscillation(0.1).to_report();
    let objective_converged = objective_oscillation <= params.osc_tol;
    let clarke_essential_criticality = if reports.iter().all(|c| c.clarke_gap.is_some()) {
        Some(
            !reports.is_empty()
                && reports.iter().all(|c| {
                    c.clarke_gap.expect("checked") <= params.gap_tol && c.y_norm <= params.y_tol
                }),
        )
    } else {
        None
    };
    Ok(AccumulationReport {
        epsilon: params.epsilon,
        theta: params.theta,
        burn_in: params.burn_in,
        gap_tol: params.gap_tol,
        y_tol: params.y_tol,
        osc_tol: params.osc_tol,
        candidates: reports,
        energy_min_index,
        objective_oscillation,
        essential_criticality,
        minimal_criticality,
        objective_converged,
        clarke_essential_criticality,
    })
}

/// Per-seed summary written by runs and sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub problem: String,
    pub form: String,
    pub seed: u64,
    pub steps: usize,
    pub status: String,
    pub final_w: Vec<f64>,
    pub final_y: Vec<f64>,
    pub final_tau: f64,
    pub final_f: f64,
    pub max_y_norm: f64,
    pub noise_tail_sup: f64,
    pub noise_tail_sup_full: f64,
    pub velocity_bound_rhs: f64,
    pub velocity_bound_holds: bool,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_max: f64,
    pub energy_min: f64,
    pub objective_oscillation: f64,
    pub final_d_gap: Option<f64>,
    pub final_clarke_gap: Option<f64>,
}

pub fn summarize_run<F: Scalar>(
    record: &RunRecord<F>,
    problem: &StochasticProblem<F>,
) -> RunSummary {
    let last = record.final_row();
    let max_y = record.max_y_norm();
    let rhs = velocity_bound_rhs(record);
    let energies: Vec<f64> = record.rows.iter().map(|r| r.energy.to_report()).collect();
    let gaps = problem.criticality_gap(&last.w).ok();
    RunSummary {
        problem: record.problem.clone(),
        form: record.form.to_string(),
        seed: record.seed,
        steps: record.steps(),
        status: match record.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::Diverged { step } => format!("diverged at step {step}"),
        },
        final_w: last.w.iter().map(|x| x.to_report()).collect(),
        final_y: last.y.iter().map(|x| x.to_report()).collect(),
        final_tau: last.tau.to_report(),
        final_f: last.f_value.to_report(),
        max_y_norm: max_y.to_report(),
        noise_tail_sup: noise_tail_sup(record).to_report(),
        noise_tail_sup_full: noise_tail_sup_full(record).to_report(),
        velocity_bound_rhs: rhs.to_report(),
        velocity_bound_holds: max_y <= rhs,
        energy_initial: energies.first().copied().unwrap_or(f64::NAN),
        energy_final: energies.last().copied().unwrap_or(f64::NAN),
        energy_max: energies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        energy_min: energies.iter().copied().fold(f64::INFINITY, f64::min),
        objective_oscillation: record.objective_oscillation(0.1).to_report(),
        final_d_gap: gaps.as_ref().map(|(d, _)| d.to_report()),
        final_clarke_gap: gaps.and_then(|(_, c)| c.map(|x| x.to_report())),
    }
}

/// One randomized-initialization run inside the avoidance experiment.
#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceRow {
    pub index: u64,
    pub w0: Vec<f64>,
    pub y0: Vec<f64>,
    pub exact_hits: usize,
    pub final_clarke_gap: Option<f64>,
    pub status: String,
}

/// Stalled run from the adversarial exact-anchor initialization.
#[derive(Debug, Clone, Serialize)]
pub struct AdversarialReport {
    pub anchor: Vec<f64>,
    pub final_w: Vec<f64>,
    pub stalled: bool,
    pub d_gap: f64,
    pub clarke_gap: Option<f64>,
    pub artificial_critical_point: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceStats {
    pub n_runs: u64,
    pub steps: usize,
    pub master_seed: u64,
    pub clarke_tol: f64,
    pub runs_with_exact_hits: u64,
    pub total_exact_hits: u64,
    pub diverged_runs: u64,
    pub frac_clarke_gap_le_tol: f64,
    pub rows: Vec<AvoidanceRow>,
    pub adversarial: Option<AdversarialReport>,
}

/// Scan the probe box lattice for a point that is critical for the
/// conservative calculus but not for Clarke (requires the analytic
/// oracle); used to seed the adversarial initialization.
pub fn find_artificial_critical_point<F: Scalar>(
    problem: &StochasticProblem<F>,
    grid_step: f64,
    clarke_tol: f64,
) -> Result<Option<Vec<F>>> {
    if problem.clarke_oracle().is_none() || problem.dim() > 2 {
        return Ok(None);
    }
    let (lo, hi) = problem.probe_box();
    let axis = |i: usize| -> Vec<F> {
        let lo_i = (lo[i].to_report() / grid_step).ceil() as i64;
        let hi_i = (hi[i].to_report() / grid_step).floor() as i64;
        (lo_i..=hi_i).map(|k| cst::<F>(k as f64 * grid_step)).collect()
    };
    let probe = |w: &[F]| -> Result<Option<Vec<F>>> {
        let (d_gap, clarke_gap) = problem.criticality_gap(w)?;
        let clarke_gap = clarke_gap.expect("oracle checked above");
        if d_gap <= cst(1e-9) && clarke_gap > cst(clarke_tol) {
            return Ok(Some(w.to_vec()));
        }
        Ok(None)
    };
    match problem.dim() {
        1 => {
            for x in axis(0) {
                if let Some(found) = probe(&[x])? {
                    return Ok(Some(found));
                }
            }
        }
        _ => {
            for x in axis(0) {
                for y in axis(1) {
                    if let Some(found) = probe(&[x, y])? {
                        return Ok(Some(found));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Randomized-initialization experiment: draw `n_runs` pairs `(w_0, y_0)`
/// uniformly from the box, run each, count exact kink/artifact hits over
/// all iterates, and collect final Clarke gaps. Deterministic given the
/// master seed. When an artificial critical point is found, an adversarial
/// run started exactly there (zero velocity) is reported alongside.
#[allow(clippy::too_many_arguments)]
pub fn avoidance_experiment<F: Scalar>(
    problem: &StochasticProblem<F>,
    schedule: &StepSchedule<F>,
    n_runs: u64,
    init_lo: &[F],
    init_hi: &[F],
    steps: usize,
    policy: SelectionPolicy,
    master_seed: u64,
    clarke_tol: f64,
) -> Result<AvoidanceStats> {
    if !problem.has_nonsmooth_anchors() {
        return Err(Error::Validation(
            "avoidance experiment needs a problem with kinks or artifacts".into(),
        ));
    }
    let p = problem.dim();
    if init_lo.len() != 2 * p || init_hi.len() != 2 * p {
        return Err(Error::Arity { what: "init box", expected: 2 * p, got: init_lo.len() });
    }
    let mut rows = Vec::with_capacity(n_runs as usize);
    let mut runs_with_hits = 0u64;
    let mut total_hits = 0u64;
    let mut diverged = 0u64;
    let mut gap_ok = 0u64;
    let mut gap_known = 0u64;
    for index in 0..n_runs {
        let mut rng = split_rng(master_seed, index);
        let z0 = uniform_box(&mut rng, init_lo, init_hi);
        let (w0, y0) = z0.split_at(p);
        let init = Init::PositionVelocity { w0: w0.to_vec(), y0: y0.to_vec() };
        let outcome =
            run(problem, schedule, &init, policy, derive_seed(master_seed, index), steps, Form::A);
        let (record, status) = match outcome {
            Ok(record) => (record, "completed".to_string()),
            Err(RunFailure::Diverged(d)) => {
                diverged += 1;
                (d.record, format!("diverged at step {}", d.step))
            }
            Err(RunFailure::Core(e)) => return Err(e),
        };
        let mut hits = 0usize;
        for row in &record.rows {
            if problem.kink_or_artifact_hit(&row.w)? {
                hits += 1;
            }
        }
        if hits > 0 {
            runs_with_hits += 1;
            total_hits += hits as u64;
        }
        let final_clarke_gap = if record.rows.is_empty() {
            None
        } else {
            problem
                .clarke_set(&record.final_row().w)
                .map(|set| set.distance_to(&linalg::zeros(p)).to_report())
        };
        if let Some(gap) = final_clarke_gap {
            gap_known += 1;
            if gap <= clarke_tol {
                gap_ok += 1;
            }
        }
        rows.push(AvoidanceRow {
            index,
            w0: w0.iter().map(|x| x.to_report()).collect(),
            y0: y0.iter().map(|x| x.to_report()).collect(),
            exact_hits: hits,
            final_clarke_gap,
            status,
        });
    }

    let adversarial = match find_artificial_critical_point(problem, 0.01, clarke_tol)? {
        None => None,
        Some(anchor) => {
            let init =
                Init::PositionVelocity { w0: anchor.clone(), y0: linalg::zeros(p) };
            let outcome = run(problem, schedule, &init, policy, master_seed, steps, Form::A);
            let record = match outcome {
                Ok(record) => record,
                Err(RunFailure::Diverged(d)) => d.record,
                Err(RunFailure::Core(e)) => return Err(e),
            };
            let final_w = record.final_row().w.clone();
            let stalled = final_w == anchor;
            let (d_gap, clarke_gap) = problem.criticality_gap(&final_w)?;
            Some(AdversarialReport {
                anchor: anchor.iter().map(|x| x.to_report()).collect(),
                final_w: final_w.iter().map(|x| x.to_report()).collect(),
                stalled,
                d_gap: d_gap.to_report(),
                clarke_gap: clarke_gap.map(|c| c.to_report()),
                artificial_critical_point: clarke_gap
                    .is_some_and(|c| d_gap <= cst(1e-9) && c > cst(clarke_tol)),
            })
        }
    };

    Ok(AvoidanceStats {
        n_runs,
        steps,
        master_seed,
        clarke_tol,
        runs_with_exact_hits: runs_with_hits,
        total_exact_hits: total_hits,
        diverged_runs: diverged,
        frac_clarke_gap_le_tol: if gap_known == 0 {
            f64::NAN
        } else {
            gap_ok as f64 / gap_known as f64
        },
        rows,
        adversarial,
    })
}
