//! Continuous-time side: the piecewise-affine interpolated process, Euler
//! integration of the limiting differential inclusion
//!
//!   dw/dt = -r y,      dy/dt in D_F(w) - y,
//!
//! the total energy E(w, y) = F(w) + (r/2) ||y||^2, fattened-map
//! membership, and the perturbed-solution decomposition of a path.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SelectionPolicy;
use crate::heavyball::RunRecord;
use crate::linalg;
use crate::problem::StochasticProblem;
use crate::scalar::{cst, Scalar};

/// Piecewise-affine path through knot states at cumulative times
/// `tau_k = sum alpha_i`; the state is the stacked pair z = (w, y).
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedPath<F: Scalar> {
    taus: Vec<F>,
    states: Vec<Vec<F>>,
}

impl<F: Scalar> InterpolatedPath<F> {
    pub fn new(taus: Vec<F>, states: Vec<Vec<F>>) -> Result<Self> {
        if taus.is_empty() || taus.len() != states.len() {
            return Err(Error::Empty("path needs matching nonempty knots".into()));
        }
        if taus.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("knot times must be strictly increasing".into()));
        }
        let dim = states[0].len();
        if states.iter().any(|z| z.len() != dim) {
            return Err(Error::Validation("knot states must share one dimension".into()));
        }
        Ok(InterpolatedPath { taus, states })
    }

    pub fn knots(&self) -> (&[F], &[Vec<F>]) {
        (&self.taus, &self.states)
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn t_start(&self) -> F {
        self.taus[0]
    }

    pub fn t_end(&self) -> F {
        *self.taus.last().expect("nonempty")
    }

    /// Evaluate by linear interpolation; clamps outside the knot range.
    pub fn eval(&self, t: F) -> Vec<F> {
        if t <= self.taus[0] {
            return self.states[0].clone();
        }
        if t >= self.t_end() {
            return self.states[self.states.len() - 1].clone();
        }
        // knot times are sorted; find the right interval
        let idx = match self.taus.binary_search_by(|x| x.partial_cmp(&t).expect("finite time")) {
            Ok(exact) => return self.states[exact].clone(),
            Err(upper) => upper - 1,
        };
        let (t0, t1) = (self.taus[idx], self.taus[idx + 1]);
        let lam = (t - t0) / (t1 - t0);
        self.states[idx]
            .iter()
            .zip(&self.states[idx + 1])
            .map(|(a, b)| *a + lam * (*b - *a))
            .collect()
    }
}

/// Interpolated process of a recorded run: knots `(tau_k, (w_k, y_k))`.
pub fn interpolate<F: Scalar>(record: &RunRecord<F>) -> Result<InterpolatedPath<F>> {
    if record.rows.is_empty() {
        return Err(Error::Empty("record has no rows".into()));
    }
    let taus = record.rows.iter().map(|r| r.tau).collect();
    let states = record
        .rows
        .iter()
        .map(|r| {
            let mut z = r.w.clone();
            z.extend_from_slice(&r.y);
            z
        })
        .collect();
    InterpolatedPath::new(taus, states)
}

/// Total energy E(w, y) = F(w) + (r/2) ||y||^2.
pub fn energy<F: Scalar>(problem: &StochasticProblem<F>, w: &[F], y: &[F], r: F) -> Result<F> {
    Ok(problem.expected_value(w)? + r * cst::<F>(0.5) * linalg::dot(y, y))
}

/// Velocity selection rule for the inclusion's y-component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiSelector {
    /// The element of D_F(w) nearest to y (least residual ||d - y||),
    /// i.e. the projection of y onto the exact expected set.
    LeastNorm,
    /// The expected oracle under a fixed selection policy.
    PolicyFixed(SelectionPolicy),
}

/// Euler trajectory of the limiting inclusion on a uniform grid t_n = n h.
/// The w-component of the chosen velocity is -r y_n exactly by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DiTrajectory<F: Scalar> {
    pub h: F,
    pub horizon: F,
    pub r: F,
    pub w: Vec<Vec<F>>,
    pub y: Vec<Vec<F>>,
    pub chosen: Vec<Vec<F>>,
    pub energies: Vec<F>,
}

impl<F: Scalar> DiTrajectory<F> {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn time(&self, n: usize) -> F {
        cst::<F>(n as f64) * self.h
    }

    /// E(t_m) - E(t_n) + trapezoidal integral of r ||y||^2 over [t_n, t_m];
    /// zero in continuous time, O(h) for the Euler discretization.
    pub fn energy_violation(&self, n: usize, m: usize) -> F {
        assert!(n < m && m < self.len());
        let mut integral = F::zero();
        let half = cst::<F>(0.5);
        for i in n..m {
            let a = self.r * linalg::dot(&self.y[i], &self.y[i]);
            let b = self.r * linalg::dot(&self.y[i + 1], &self.y[i + 1]);
            integral = integral + half * self.h * (a + b);
        }
        self.energies[m] - self.energies[n] + integral
    }

    /// The path (tau = r t clock) for perturbed-solution checks.
    pub fn to_path(&self) -> Result<InterpolatedPath<F>> {
        let taus = (0..self.len()).map(|n| self.r * self.time(n)).collect();
        let states = self
            .w
            .iter()
            .zip(&self.y)
            .map(|(w, y)| {
                let mut z = w.clone();
                z.extend_from_slice(y);
                z
            })
            .collect();
        InterpolatedPath::new(taus, states)
    }

    /// CSV columns `t,w*,y*,E`.
    pub fn to_csv(&self) -> String {
        let dim = self.w[0].len();
        let mut out = String::from("t");
        for i in 0..dim {
            out.push_str(&format!(",w{i}"));
        }
        for i in 0..dim {
            out.push_str(&format!(",y{i}"));
        }
        out.push_str(",E\n");
        for n in 0..self.len() {
            out.push_str(&format!("{}", self.time(n)));
            for x in &self.w[n] {
                out.push_str(&format!(",{x}"));
            }
            for x in &self.y[n] {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(&format!(",{}\n", self.energies[n]));
        }
        out
    }
}

/// Explicit Euler integration of the inclusion from `z0 = (w, y)`:
/// `w <- w - h r y`, `y <- y + h (d - y)` with `d` picked by the selector.
/// Starting at an equilibrium (0 in D_F(w), y = 0) under the least-norm
/// selector the trajectory is exactly stationary.
pub fn di_euler<F: Scalar>(
    problem: &StochasticProblem<F>,
    z0: (&[F], &[F]),
    r: F,
    h: F,
    horizon: F,
    selector: DiSelector,
) -> Result<DiTrajectory<F>> {
    if !(h > F::zero()) || !(horizon >= h) {
        return Err(Error::Validation(format!("need h > 0 and horizon >= h, got {h}, {horizon}")));
    }
    let steps = (horizon / h).to_f64().expect("finite").round() as usize;
    let dim = problem.dim();
    if z0.0.len() != dim || z0.1.len() != dim {
        return Err(Error::Arity { what: "initial pair", expected: dim, got: z0.0.len() });
    }
    let mut w = z0.0.to_vec();
    let mut y = z0.1.to_vec();
    let mut out = DiTrajectory {
        h,
        horizon,
        r,
        w: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        chosen: Vec::with_capacity(steps + 1),
        energies: Vec::with_capacity(steps + 1),
    };
    for _ in 0..=steps {
        let d = match selector {
            DiSelector::LeastNorm => problem.expected_conservative_set(&w)?.project(&y),
            DiSelector::PolicyFixed(policy) => problem.expected_oracle(&w, policy)?,
        };
        out.w.push(w.clone());
        out.y.push(y.clone());
        out.chosen.push(d.clone());
        out.energies.push(energy(problem, &w, &y, r)?);
        let mut w_next = Vec::with_capacity(dim);
        let mut y_next = Vec::with_capacity(dim);
        for i in 0..dim {
            w_next.push(w[i] - h * r * y[i]);
            y_next.push(y[i] + h * (d[i] - y[i]));
        }
        w = w_next;
        y = y_next;
    }
    Ok(out)
}

/// Result of a fattened-membership probe: either a certificate point
/// `z'` with `dist(y, D_F(z')) <= delta` and `||z' - z|| <= delta`, or
/// "not found at this grid resolution" (the test is sound, not complete).
#[derive(Debug, Clone, PartialEq)]
pub enum Fattened<F: Scalar> {
    Contained { certificate: Vec<F> },
    NotFoundAtResolution,
}

impl<F: Scalar> Fattened<F> {
    pub fn is_contained(&self) -> bool {
        matches!(self, Fattened::Contained { .. })
    }
}

/// Membership `y in H^delta(z)` for `H = D_F`, probed on the lattice
/// `z + grid_step * k` intersected with the delta-ball. Lattices for
/// different deltas are nested, so membership is monotone in delta.
pub fn fattened_contains<F: Scalar>(
    problem: &StochasticProblem<F>,
    delta: F,
    z: &[F],
    y: &[F],
    grid_step: F,
) -> Result<Fattened<F>> {
    if delta < F::zero() {
        return Err(Error::Validation("delta must be >= 0".into()));
    }
    if !(grid_step > F::zero()) {
        return Err(Error::Validation("grid step must be > 0".into()));
    }
    let dim = problem.dim();
    if dim > 2 {
        return Err(Error::Capability(format!(
            "fattened membership limited to dim <= 2, got {dim}"
        )));
    }
    if z.len() != dim || y.len() != dim {
        return Err(Error::Arity { what: "fattened probe", expected: dim, got: z.len() });
    }
    let reach = (delta / grid_step).to_f64().expect("finite").floor() as i64;
    let offsets: Vec<i64> = (-reach..=reach).collect();
    let probe = |zp: Vec<F>| -> Result<Option<Vec<F>>> {
        if linalg::dist(&zp, z) > delta {
            return Ok(None);
        }
        let set = problem.expected_conservative_set(&zp)?;
        Ok((set.distance_to(y) <= delta).then_some(zp))
    };
    match dim {
        1 => {
            for &i in &offsets {
                let zp = vec![z[0] + cst::<F>(i as f64) * grid_step];
                if let Some(cert) = probe(zp)? {
                    return Ok(Fattened::Contained { certificate: cert });
                }
            }
        }
        _ => {
            for &i in &offsets {
                for &j in &offsets {
                    let zp = vec![
                        z[0] + cst::<F>(i as f64) * grid_step,
                        z[1] + cst::<F>(j as f64) * grid_step,
                    ];
                    if let Some(cert) = probe(zp)? {
                        return Ok(Fattened::Contained { certificate: cert });
                    }
                }
            }
        }
    }
    Ok(Fattened::NotFoundAtResolution)
}

/// Per-window integral of the residual term U in the perturbed-solution
/// decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct WindowResidual {
    pub t_start: f64,
    pub integral_norm: f64,
}

/// Report of the perturbed-solution check: the path's slopes decomposed as
/// (certified inclusion element) + U, with the sliding-window sup of
/// ||integral of U|| and the fattening radii actually used.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedReport {
    pub window: f64,
    pub delta_max: f64,
    pub sup_window_residual: f64,
    pub max_w_slope_residual: f64,
    pub n_intervals: usize,
    pub windows: Vec<WindowResidual>,
}

/// Decompose each knot interval's slope against the inclusion:
/// the y-slope element `V(w_(k+1)) - y_k` lies in
/// `D_F^(delta_k)(w_k) - y_k` with `delta_k = alpha_k ||y_k||` (or the
/// supplied sequence, when larger); the leftover is U. Slopes live on the
/// `tau / r` clock, so they are scaled by `r` before the comparison.
pub fn perturbed_solution_check<F: Scalar>(
    path: &InterpolatedPath<F>,
    problem: &StochasticProblem<F>,
    r: F,
    deltas: Option<&[F]>,
    window: F,
) -> Result<PerturbedReport> {
    let p = problem.dim();
    if p != 1 {
        return Err(Error::Capability(format!(
            "perturbed-solution check limited to 1D problems, got dim {p}"
        )));
    }
    if path.state_dim() != 2 * p {
        return Err(Error::Validation(format!(
            "path state dim {} does not match the problem pair dim {}",
            path.state_dim(),
            2 * p
        )));
    }
    if !(window > F::zero()) {
        return Err(Error::Validation("window must be > 0".into()));
    }
    let (taus, states) = path.knots();
    let n = taus.len();
    if n < 2 {
        return Err(Error::Empty("path needs at least two knots".into()));
    }
    let mut delta_max = F::zero();
    let mut max_w_residual = F::zero();
    // integral of U over each interval, tau-clock measure scaled by 1/r
    let mut u_increments: Vec<Vec<F>> = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let alpha = taus[k + 1] - taus[k];
        let y_k = &states[k][p..];
        let w_next = &states[k + 1][..p];
        let slope: Vec<F> = states[k + 1]
            .iter()
            .zip(&states[k])
            .map(|(b, a)| (*b - *a) / alpha)
            .collect();
        // w-component: r * slope_w should equal -r y_k
        let mut w_res = F::zero();
        for i in 0..p {
            let res = r * slope[i] + r * y_k[i];
            w_res = w_res + res * res;
        }
        max_w_residual = max_w_residual.max(w_res.sqrt());
        // y-component: certified element V(w_(k+1)) - y_k
        let v_mean = problem.expected_oracle(w_next, SelectionPolicy::Zero)?;
        let mut u_k = Vec::with_capacity(p);
        for i in 0..p {
            let element = v_mean[i] - y_k[i];
            u_k.push(r * slope[p + i] - element);
        }
        let drift = alpha * linalg::norm(y_k);
        let delta_k = match deltas {
            Some(ds) => ds.get(k).copied().unwrap_or(drift).max(drift),
            None => drift,
        };
        delta_max = delta_max.max(delta_k);
        u_increments.push(linalg::scale(&u_k, alpha / r));
    }
    // sliding windows of the given tau-length over interval prefix sums
    let mut prefix: Vec<Vec<F>> = Vec::with_capacity(n);
    prefix.push(linalg::zeros(p));
    for inc in &u_increments {
        prefix.push(linalg::add(prefix.last().expect("nonempty"), inc));
    }
    let mut windows = Vec::new();
    let mut sup = F::zero();
    let mut hi = 0usize;
    for lo in 0..n - 1 {
        let t_end = taus[lo] + window * r;
        if hi < lo + 1 {
            hi = lo + 1;
        }
        while hi < n - 1 && taus[hi + 1] <= t_end {
            hi += 1;
        }
        let integral = linalg::sub(&prefix[hi], &prefix[lo]);
        let norm = linalg::norm(&integral);
        sup = sup.max(norm);
        windows.push(WindowResidual {
            t_start: taus[lo].to_report(),
            integral_norm: norm.to_report(),
        });
    }
    // keep the JSON payload bounded
    let stride = windows.len().div_ceil(512).max(1);
    let windows: Vec<WindowResidual> =
        windows.into_iter().step_by(stride).collect();
    Ok(PerturbedReport {
        window: window.to_report(),
        delta_max: delta_max.to_report(),
        sup_window_residual: sup.to_report(),
        max_w_slope_residual: max_w_residual.to_report(),
        n_intervals: n - 1,
        windows,
    })
}
