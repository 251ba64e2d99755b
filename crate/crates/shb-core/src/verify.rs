//! Randomized invariant checks shared by the CLI `check` command and the
//! test suites. Every check is deterministic given its seed and returns a
//! pass/fail verdict with a one-line detail.

use crate::error::Result;
use crate::graph::SelectionPolicy;
use crate::heavyball::{max_relative_deviation, run, Form, Init, RunRecord};
use crate::linalg;
use crate::problem::{catalog, StochasticProblem};
use crate::rng::{derive_seed, seed_rng, uniform_box, RngState};
use crate::scalar::{cst, Scalar};
use crate::schedule::StepSchedule;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed, detail: detail.into() }
    }
}

fn probe_point<F: Scalar>(problem: &StochasticProblem<F>, rng: &mut RngState) -> Vec<F> {
    let (lo, hi) = problem.probe_box();
    uniform_box(rng, lo, hi)
}

/// Selections lie in the enumerated set, at random points and at crafted
/// kink points, for every policy.
pub fn selection_membership<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_probes: usize,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let tol = cst::<F>(1e-9);
    let mut worst = F::zero();
    let support = problem.distribution().support();
    let mut points: Vec<Vec<F>> = (0..n_probes).map(|_| probe_point(problem, &mut rng)).collect();
    // exact kink probes: zero vector and support projections hit abs/relu kinks
    points.push(linalg::zeros(problem.dim()));
    for s in support.iter().take(4) {
        let mut w = linalg::zeros(problem.dim());
        let n = problem.dim().min(s.len());
        w[..n].copy_from_slice(&s[..n]);
        points.push(w);
    }
    for (i, w) in points.iter().enumerate() {
        let s = &support[i % support.len()];
        let set = problem.graph().conservative_set(w, s)?;
        for policy in SelectionPolicy::ALL {
            let v = problem.graph().backprop_select(w, s, policy)?;
            worst = worst.max(set.distance_to(&v));
        }
    }
    Ok(CheckResult::new(
        format!("selection-membership[{}]", problem.name()),
        worst <= tol,
        format!("max distance {worst:.3e}"),
    ))
}

/// Away from kinks the selection equals the gradient: compare against
/// central finite differences of the forward evaluation.
pub fn gradient_consistency<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_probes: usize,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let support = problem.distribution().support();
    let graph = problem.graph();
    let h = cst::<F>(1e-8);
    let safe = cst::<F>(1e-6);
    let rel_tol = cst::<F>(1e-5);
    let mut worst = F::zero();
    let mut used = 0usize;
    let mut tries = 0usize;
    while used < n_probes && tries < 20 * n_probes {
        tries += 1;
        let w = probe_point(problem, &mut rng);
        let s = &support[tries % support.len()];
        if graph.kink_distance(&w, s)? <= safe {
            continue;
        }
        used += 1;
        let v = graph.backprop_select(&w, s, SelectionPolicy::Zero)?;
        for i in 0..w.len() {
            let mut wp = w.clone();
            wp[i] = wp[i] + h;
            let mut wm = w.clone();
            wm[i] = wm[i] - h;
            let fd = (graph.eval(&wp, s)? - graph.eval(&wm, s)?) / (h + h);
            let err = (fd - v[i]).abs() / (F::one() + v[i].abs());
            worst = worst.max(err);
        }
    }
    Ok(CheckResult::new(
        format!("gradient-consistency[{}]", problem.name()),
        worst <= rel_tol && used == n_probes,
        format!("max relative error {worst:.3e} over {used} kink-free probes"),
    ))
}

/// ||v(w, s)|| <= kappa(s) psi(||w||) on random probes, all policies.
pub fn growth_bound<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_probes: usize,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let support = problem.distribution().support();
    let mut worst_excess = F::neg_infinity();
    for i in 0..n_probes {
        let w = probe_point(problem, &mut rng);
        let idx = i % support.len();
        let policy = SelectionPolicy::ALL[i % 4];
        let v = problem.graph().backprop_select(&w, &support[idx], policy)?;
        let bound = problem.growth().bound(idx, linalg::norm(&w));
        worst_excess = worst_excess.max(linalg::norm(&v) - bound);
    }
    Ok(CheckResult::new(
        format!("growth-bound[{}]", problem.name()),
        worst_excess <= cst(1e-12),
        format!("max ||v|| - bound = {worst_excess:.3e}"),
    ))
}

/// The expected oracle lies in the expected conservative set (all
/// policies), at random points and at the support-aligned kink points.
pub fn aumann_membership<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_probes: usize,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let tol = cst::<F>(1e-9);
    let mut worst = F::zero();
    let mut points: Vec<Vec<F>> = (0..n_probes).map(|_| probe_point(problem, &mut rng)).collect();
    points.push(linalg::zeros(problem.dim()));
    for s in problem.distribution().support().iter().take(4) {
        let mut w = linalg::zeros(problem.dim());
        let n = problem.dim().min(s.len());
        w[..n].copy_from_slice(&s[..n]);
        points.push(w);
    }
    for w in &points {
        let set = problem.expected_conservative_set(w)?;
        for policy in SelectionPolicy::ALL {
            let mean = problem.expected_oracle(w, policy)?;
            worst = worst.max(set.distance_to(&mean));
        }
    }
    Ok(CheckResult::new(
        format!("aumann-membership[{}]", problem.name()),
        worst <= tol,
        format!("max distance {worst:.3e} over {} points", points.len()),
    ))
}

fn random_curve<F: Scalar>(
    problem: &StochasticProblem<F>,
    segments: usize,
    rng: &mut RngState,
) -> (Vec<Vec<F>>, F) {
    let mut curve = Vec::with_capacity(segments + 1);
    for _ in 0..=segments {
        curve.push(probe_point(problem, rng));
    }
    let length = curve.windows(2).fold(F::zero(), |acc, p| acc + linalg::dist(&p[0], &p[1]));
    (curve, length)
}

/// Midpoint path integrals of selections reproduce function gains:
/// residual <= tol_frac * curve length on random piecewise-linear curves.
pub fn path_integral_conservativity<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_curves: usize,
    segments: usize,
    substeps: usize,
    tol_frac: f64,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let support = problem.distribution().support();
    let mut worst_ratio = F::zero();
    for c in 0..n_curves {
        let (curve, length) = random_curve(problem, segments, &mut rng);
        let s = &support[c % support.len()];
        let policy = SelectionPolicy::ALL[c % 4];
        let residual = problem.graph().path_integral_residual(s, &curve, substeps, policy)?;
        worst_ratio = worst_ratio.max(residual / length);
    }
    Ok(CheckResult::new(
        format!("path-integral[{}]", problem.name()),
        worst_ratio <= cst(tol_frac),
        format!("max residual/length {worst_ratio:.3e} over {n_curves} curves"),
    ))
}

/// Same conservativity test performed on the expectation: gains of F
/// against midpoint integrals of the expected oracle.
pub fn expected_path_integral_conservativity<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_curves: usize,
    segments: usize,
    substeps: usize,
    tol_frac: f64,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let mut worst_ratio = F::zero();
    let m = cst::<F>(substeps as f64);
    for c in 0..n_curves {
        let (curve, length) = random_curve(problem, segments, &mut rng);
        let policy = SelectionPolicy::ALL[c % 4];
        let mut integral = F::zero();
        for pair in curve.windows(2) {
            let delta = linalg::sub(&pair[1], &pair[0]);
            for i in 0..substeps {
                let t = (cst::<F>(i as f64) + cst::<F>(0.5)) / m;
                let x = linalg::axpy(&pair[0], t, &delta);
                let v = problem.expected_oracle(&x, policy)?;
                integral = integral + linalg::dot(&v, &delta) / m;
            }
        }
        let gain = problem.expected_value(curve.last().expect("nonempty"))?
            - problem.expected_value(&curve[0])?;
        worst_ratio = worst_ratio.max((gain - integral).abs() / length);
    }
    Ok(CheckResult::new(
        format!("expected-path-integral[{}]", problem.name()),
        worst_ratio <= cst(tol_frac),
        format!("max residual/length {worst_ratio:.3e} over {n_curves} curves"),
    ))
}

/// F(w) >= F* on random probes within the declared box.
pub fn lower_bound_holds<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_probes: usize,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let mut worst = F::infinity();
    for _ in 0..n_probes {
        let w = probe_point(problem, &mut rng);
        worst = worst.min(problem.expected_value(&w)? - problem.f_star());
    }
    Ok(CheckResult::new(
        format!("lower-bound[{}]", problem.name()),
        worst >= F::zero(),
        format!("min F(w) - F* = {worst:.3e}"),
    ))
}

/// Analytic Clarke oracle equals the expected set at kink-free points
/// (both collapse to the gradient singleton).
pub fn clarke_oracle_agreement<F: Scalar>(
    problem: &StochasticProblem<F>,
    n_probes: usize,
    seed: u64,
) -> Result<CheckResult> {
    if problem.clarke_oracle().is_none() {
        return Ok(CheckResult::new(
            format!("clarke-agreement[{}]", problem.name()),
            true,
            "no analytic oracle declared".to_string(),
        ));
    }
    let mut rng = seed_rng(seed);
    let support = problem.distribution().support();
    let safe = cst::<F>(1e-6);
    let tol = cst::<F>(1e-9);
    let mut worst = F::zero();
    let mut used = 0usize;
    let mut tries = 0usize;
    while used < n_probes && tries < 20 * n_probes {
        tries += 1;
        let w = probe_point(problem, &mut rng);
        let kink_free = support
            .iter()
            .map(|s| problem.graph().kink_distance(&w, s))
            .collect::<Result<Vec<F>>>()?
            .into_iter()
            .all(|d| d > safe);
        if !kink_free {
            continue;
        }
        used += 1;
        let mean = problem.expected_oracle(&w, SelectionPolicy::Zero)?;
        let clarke = problem.clarke_set(&w).expect("oracle present");
        let d_set = problem.expected_conservative_set(&w)?;
        worst = worst.max(clarke.distance_to(&mean));
        worst = worst.max(d_set.distance_to(&mean));
        for point in clarke.points() {
            worst = worst.max(d_set.distance_to(&point));
        }
    }
    Ok(CheckResult::new(
        format!("clarke-agreement[{}]", problem.name()),
        worst <= tol && used == n_probes,
        format!("max discrepancy {worst:.3e} at {used} kink-free points"),
    ))
}

/// The documented Clarke critical set equals the lattice points whose
/// analytic Clarke gap is below 1e-6.
pub fn clarke_ground_truth<F: Scalar>(
    problem: &StochasticProblem<F>,
    grid_step: f64,
) -> Result<CheckResult> {
    let Some(oracle) = problem.clarke_oracle() else {
        return Ok(CheckResult::new(
            format!("clarke-ground-truth[{}]", problem.name()),
            true,
            "no analytic oracle declared".to_string(),
        ));
    };
    let (lo, hi) = problem.probe_box();
    let axis = |i: usize| -> Vec<F> {
        let lo_i = (lo[i].to_report() / grid_step).ceil() as i64;
        let hi_i = (hi[i].to_report() / grid_step).floor() as i64;
        (lo_i..=hi_i).map(|k| cst::<F>(k as f64 * grid_step)).collect()
    };
    let zero = linalg::zeros(problem.dim());
    let tol = cst::<F>(1e-6);
    let mut mismatches = 0usize;
    let mut total = 0usize;
    let mut check = |w: &[F]| {
        total += 1;
        let gap = oracle.set(w).distance_to(&zero);
        let documented = oracle.critical_set_contains(w);
        if (gap <= tol) != documented {
            mismatches += 1;
        }
    };
    match problem.dim() {
        1 => {
            for x in axis(0) {
                check(&[x]);
            }
        }
        2 => {
            for x in axis(0) {
                for y in axis(1) {
                    check(&[x, y]);
                }
            }
        }
        _ => {
            return Ok(CheckResult::new(
                format!("clarke-ground-truth[{}]", problem.name()),
                true,
                "skipped beyond dim 2".to_string(),
            ))
        }
    }
    Ok(CheckResult::new(
        format!("clarke-ground-truth[{}]", problem.name()),
        mismatches == 0,
        format!("{mismatches} mismatches over {total} lattice points"),
    ))
}

/// Sampled oracle noise is centered: the sample mean of v(w, xi) - V(w)
/// over fresh draws stays within three standard errors.
pub fn martingale_noise<F: Scalar>(
    problem: &StochasticProblem<F>,
    w: &[F],
    n_draws: usize,
    seed: u64,
) -> Result<CheckResult> {
    let mut rng = seed_rng(seed);
    let v_mean = problem.expected_oracle(w, SelectionPolicy::Zero)?;
    let dim = problem.dim();
    let mut sum: Vec<F> = linalg::zeros(dim);
    let mut sum_sq: Vec<F> = linalg::zeros(dim);
    for _ in 0..n_draws {
        let (_, s) = problem.sample(&mut rng);
        let s = s.to_vec();
        let v = problem.graph().backprop_select(w, &s, SelectionPolicy::Zero)?;
        let u = linalg::sub(&v, &v_mean);
        for i in 0..dim {
            sum[i] = sum[i] + u[i];
            sum_sq[i] = sum_sq[i] + u[i] * u[i];
        }
    }
    let n = cst::<F>(n_draws as f64);
    let mean: Vec<F> = sum.iter().map(|x: &F| *x / n).collect();
    let var = sum_sq
        .iter()
        .zip(&mean)
        .fold(F::zero(), |acc, (sq, m)| acc + (*sq / n - *m * *m));
    let std = var.sqrt();
    let bound = cst::<F>(3.0) * std / n.sqrt();
    let mean_norm = linalg::norm(&mean);
    Ok(CheckResult::new(
        format!("martingale-noise[{}]", problem.name()),
        mean_norm <= bound || std == F::zero(),
        format!("|mean| = {mean_norm:.3e}, 3 se = {bound:.3e}"),
    ))
}

/// Forms A and B produce the same trajectory up to rounding.
pub fn form_equivalence<F: Scalar>(
    problem: &StochasticProblem<F>,
    schedule: &StepSchedule<F>,
    init: &Init<F>,
    n_seeds: usize,
    steps: usize,
    master_seed: u64,
) -> Result<CheckResult> {
    let mut worst = F::zero();
    for i in 0..n_seeds {
        let seed = derive_seed(master_seed, i as u64);
        let a = run(problem, schedule, init, SelectionPolicy::Zero, seed, steps, Form::A)
            .map_err(failure_to_error)?;
        let b = run(problem, schedule, init, SelectionPolicy::Zero, seed, steps, Form::B)
            .map_err(failure_to_error)?;
        worst = worst.max(max_relative_deviation(&a, &b));
    }
    Ok(CheckResult::new(
        format!("form-equivalence[{}]", problem.name()),
        worst <= cst(1e-9),
        format!("max relative deviation {worst:.3e} over {n_seeds} seeds x {steps} steps"),
    ))
}

fn failure_to_error<F: Scalar>(f: crate::heavyball::RunFailure<F>) -> crate::error::Error {
    match f {
        crate::heavyball::RunFailure::Core(e) => e,
        crate::heavyball::RunFailure::Diverged(d) => {
            crate::error::Error::Validation(format!("unexpected divergence at step {}", d.step))
        }
    }
}

/// Velocity bound from the run's own record.
pub fn velocity_bound<F: Scalar>(record: &RunRecord<F>) -> CheckResult {
    let max_y = record.max_y_norm();
    let rhs = crate::analysis::velocity_bound_rhs(record);
    CheckResult::new(
        format!("velocity-bound[{}]", record.problem),
        max_y <= rhs,
        format!("max ||y|| = {max_y:.6} vs bound {rhs:.6}"),
    )
}

/// Scale knobs for the whole catalog suite.
#[derive(Debug, Clone, Copy)]
pub struct CheckScale {
    pub probes: usize,
    pub curves: usize,
    pub substeps: usize,
    pub run_steps: usize,
    pub run_seeds: usize,
}

impl CheckScale {
    pub fn quick() -> Self {
        CheckScale { probes: 200, curves: 5, substeps: 2000, run_steps: 2000, run_seeds: 3 }
    }

    pub fn full() -> Self {
        CheckScale { probes: 1000, curves: 20, substeps: 10_000, run_steps: 10_000, run_seeds: 5 }
    }
}

/// The invariant suite over the whole catalog.
pub fn run_catalog_checks<F: Scalar>(scale: CheckScale, master_seed: u64) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    results.push(schedule_validation());
    for (idx, name) in catalog::NAMES.iter().enumerate() {
        let problem = catalog::by_name::<F>(name)?;
        let seed = derive_seed(master_seed, idx as u64);
        results.push(selection_membership(&problem, scale.probes, seed)?);
        results.push(gradient_consistency(&problem, scale.probes, seed + 1)?);
        results.push(growth_bound(&problem, scale.probes, seed + 2)?);
        results.push(aumann_membership(&problem, scale.probes.min(300), seed + 3)?);
        results.push(path_integral_conservativity(
            &problem,
            scale.curves,
            10,
            scale.substeps,
            1e-2,
            seed + 4,
        )?);
        results.push(lower_bound_holds(&problem, scale.probes * 10, seed + 5)?);
        results.push(clarke_oracle_agreement(&problem, scale.probes.min(300), seed + 6)?);
        results.push(clarke_ground_truth(&problem, 0.01)?);
        let schedule = StepSchedule::power(F::one(), cst(0.75), F::one())
            .expect("catalog schedule is admissible");
        let (w0, y0) = catalog::default_init::<F>(name).expect("catalog init");
        let init = Init::PositionVelocity { w0, y0 };
        results.push(form_equivalence(
            &problem,
            &schedule,
            &init,
            scale.run_seeds,
            scale.run_steps,
            seed + 7,
        )?);
        let record = run(
            &problem,
            &schedule,
            &init,
            SelectionPolicy::Zero,
            derive_seed(master_seed, 100 + idx as u64),
            scale.run_steps,
            Form::A,
        )
        .map_err(failure_to_error)?;
        results.push(velocity_bound(&record));
        let grid = crate::analysis::occupation(&record, cst(0.05), 0.2)?;
        let total: F = grid.weights.values().fold(F::zero(), |a, b| a + *b);
        results.push(CheckResult::new(
            format!("occupation-normalization[{name}]"),
            (total - F::one()).abs() <= cst(1e-12),
            format!("total weight {total}"),
        ));
    }
    Ok(results)
}

fn schedule_validation() -> CheckResult {
    let reject_low = StepSchedule::<f64>::power(1.0, 0.4, 1.0).is_err();
    let reject_high = StepSchedule::<f64>::power(1.0, 1.5, 1.0).is_err();
    let reject_a = StepSchedule::<f64>::power(-1.0, 0.75, 1.0).is_err();
    let accept = StepSchedule::<f64>::power(1.0, 0.75, 1.0).is_ok()
        && StepSchedule::<f64>::power(0.1, 0.6, 2.0).is_ok()
        && StepSchedule::<f64>::constant_ratio_power(0.5, 1.0, 1.0).is_ok();
    CheckResult::new(
        "schedule-validation",
        reject_low && reject_high && reject_a && accept,
        "admissibility clauses enforced",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_catalog_checks_pass() {
        let results = run_catalog_checks::<f64>(CheckScale::quick(), 2024).unwrap();
        let failures: Vec<&CheckResult> = results.iter().filter(|r| !r.passed).collect();
        assert!(failures.is_empty(), "failing checks: {failures:#?}");
    }
}
