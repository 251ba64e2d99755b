//! The stochastic heavy ball recursion in both of its forms, with full
//! per-step recording.
//!
//! Form A (two-timescale pair):
//!   w_(k+1) = w_k - alpha_k y_k
//!   y_(k+1) = beta_k v(w_(k+1), xi_(k+1)) + (1 - beta_k) y_k
//!
//! Form B (one-equation momentum):
//!   w_(k+1) = w_k - mu_k v(w_k, xi_k) + nu_k (w_k - w_(k-1))
//!
//! with mu_k = alpha_k beta_(k-1), nu_k = alpha_k (1 - beta_(k-1)) / alpha_(k-1)
//! and y_0 = (w_0 - w_1) / alpha_0. Both forms consume one sample per step,
//! evaluated at the current head iterate, so a shared seed aligns the
//! sample streams and the w-trajectories agree up to rounding.

use crate::error::{Error, Result};
use crate::graph::SelectionPolicy;
use crate::linalg;
use crate::problem::StochasticProblem;
use crate::rng::{seed_rng, RngState};
use crate::scalar::{cst, Scalar};
use crate::schedule::StepSchedule;

/// Any coordinate beyond this magnitude aborts the run: boundedness of the
/// trajectory is an assumption, not a theorem, and runs violating it must
/// fail loudly.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Form {
    A,
    B,
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Form::A => write!(f, "A"),
            Form::B => write!(f, "B"),
        }
    }
}

/// Pair iterate plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState<F: Scalar> {
    pub k: usize,
    pub w: Vec<F>,
    pub y: Vec<F>,
    pub tau: F,
}

/// Initial condition: either the pair-form `(w_0, y_0)` or the
/// one-equation `(w_1, w_0)`; each determines the other through
/// `y_0 = (w_0 - w_1) / alpha_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum Init<F: Scalar> {
    PositionVelocity { w0: Vec<F>, y0: Vec<F> },
    Pair { w1: Vec<F>, w0: Vec<F> },
}

impl<F: Scalar> Init<F> {
    fn resolve(&self, alpha0: F) -> (Vec<F>, Vec<F>) {
        match self {
            Init::PositionVelocity { w0, y0 } => (w0.clone(), y0.clone()),
            Init::Pair { w1, w0 } => {
                let y0 = linalg::scale(&linalg::sub(w0, w1), F::one() / alpha0);
                (w0.clone(), y0)
            }
        }
    }
}

/// One recorded step: state at index k plus the oracle values evaluated at
/// `w_k` with sample `xi_k` (row 0 carries the deterministic mean oracle
/// and zero noise; its sample index is -1).
#[derive(Debug, Clone, PartialEq)]
pub struct Row<F: Scalar> {
    pub k: usize,
    pub tau: F,
    pub alpha: F,
    pub beta: F,
    pub w: Vec<F>,
    pub y: Vec<F>,
    pub f_value: F,
    pub energy: F,
    pub v: Vec<F>,
    pub v_mean: Vec<F>,
    pub noise: Vec<F>,
    pub xi: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Diverged { step: usize },
}

/// Full trajectory record; row count = iteration count + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<F: Scalar> {
    pub problem: String,
    pub form: Form,
    pub policy: SelectionPolicy,
    pub seed: u64,
    pub r: F,
    pub dim: usize,
    pub rows: Vec<Row<F>>,
    pub status: RunStatus,
}

/// Run that hit the divergence guard; the partial record is preserved.
#[derive(Debug, Clone)]
pub struct Diverged<F: Scalar> {
    pub step: usize,
    pub record: RunRecord<F>,
}

#[derive(Debug)]
pub enum RunFailure<F: Scalar> {
    Diverged(Box<Diverged<F>>),
    Core(Error),
}

impl<F: Scalar> From<Error> for RunFailure<F> {
    fn from(e: Error) -> Self {
        RunFailure::Core(e)
    }
}

impl<F: Scalar> std::fmt::Display for RunFailure<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunFailure::Diverged(d) => write!(f, "trajectory diverged at step {}", d.step),
            RunFailure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn check_bounded<F: Scalar>(v: &[F]) -> bool {
    let limit = cst::<F>(DIVERGENCE_LIMIT);
    v.iter().all(|x| x.is_finite() && x.abs() <= limit)
}

#[allow(clippy::too_many_arguments)]
fn make_row<F: Scalar>(
    problem: &StochasticProblem<F>,
    schedule: &StepSchedule<F>,
    r: F,
    k: usize,
    tau: F,
    w: &[F],
    y: &[F],
    v: Vec<F>,
    v_mean: Vec<F>,
    xi: i64,
) -> Result<Row<F>> {
    let noise = linalg::sub(&v, &v_mean);
    let f_value = problem.expected_value(w)?;
    let energy = f_value + r * cst::<F>(0.5) * linalg::dot(y, y);
    Ok(Row {
        k,
        tau,
        alpha: schedule.alpha(k),
        beta: schedule.beta(k),
        w: w.to_vec(),
        y: y.to_vec(),
        f_value,
        energy,
        v,
        v_mean,
        noise,
        xi,
    })
}

/// One pair-form step from `state`: exactly one sample is drawn, the row
/// reports the oracle values at the new iterate, and `tau` advances by
/// `alpha_k`. Divergence carries the last finite state back to the caller.
pub fn shb_step<F: Scalar>(
    state: &IterateState<F>,
    problem: &StochasticProblem<F>,
    schedule: &StepSchedule<F>,
    policy: SelectionPolicy,
    rng: &mut RngState,
) -> std::result::Result<(IterateState<F>, Row<F>), RunFailure<F>> {
    let r = schedule.ratio();
    let k = state.k;
    let alpha = schedule.alpha(k);
    let beta = schedule.beta(k);
    let w_next = linalg::axpy(&state.w, -alpha, &state.y);
    if !check_bounded(&w_next) {
        return Err(diverged_state(problem, state, k + 1));
    }
    let (xi, s) = problem.sample(rng);
    let s = s.to_vec();
    let v = problem.graph().backprop_select(&w_next, &s, policy)?;
    let v_mean = problem.expected_oracle(&w_next, policy)?;
    let y_next: Vec<F> = v
        .iter()
        .zip(&state.y)
        .map(|(vi, yi)| beta * *vi + (F::one() - beta) * *yi)
        .collect();
    if !check_bounded(&y_next) {
        return Err(diverged_state(problem, state, k + 1));
    }
    let tau = state.tau + alpha;
    let next = IterateState { k: k + 1, w: w_next, y: y_next, tau };
    let row = make_row(
        problem,
        schedule,
        r,
        k + 1,
        tau,
        &next.w,
        &next.y,
        v,
        v_mean,
        xi as i64,
    )?;
    Ok((next, row))
}

fn diverged_state<F: Scalar>(
    problem: &StochasticProblem<F>,
    state: &IterateState<F>,
    step: usize,
) -> RunFailure<F> {
    // minimal record holding the last finite state
    let record = RunRecord {
        problem: problem.name().to_string(),
        form: Form::A,
        policy: SelectionPolicy::Zero,
        seed: 0,
        r: F::one(),
        dim: state.w.len(),
        rows: Vec::new(),
        status: RunStatus::Diverged { step },
    };
    RunFailure::Diverged(Box::new(Diverged { step, record }))
}

/// New pair `(w_(k+1), w_k)` plus the record row for index k.
pub type SecondOrderStep<F> = ((Vec<F>, Vec<F>), Row<F>);

/// One one-equation step from the pair `(w_k, w_(k-1))` at index `k >= 1`
/// and accumulated time `tau_k`; `y_prev` is the reconstructed velocity
/// `y_(k-1)`.
#[allow(clippy::too_many_arguments)]
pub fn shb_step_second_order<F: Scalar>(
    pair: (&[F], &[F]),
    k: usize,
    tau: F,
    y_prev: &[F],
    problem: &StochasticProblem<F>,
    schedule: &StepSchedule<F>,
    policy: SelectionPolicy,
    rng: &mut RngState,
) -> std::result::Result<SecondOrderStep<F>, RunFailure<F>> {
    let (w_cur, w_prev) = pair;
    let r = schedule.ratio();
    let (mu, nu) = schedule.second_order(k)?;
    let beta_prev = schedule.beta(k - 1);
    let (xi, s) = problem.sample(rng);
    let s = s.to_vec();
    let v = problem.graph().backprop_select(w_cur, &s, policy)?;
    let v_mean = problem.expected_oracle(w_cur, policy)?;
    // reconstructed velocity for the record
    let y: Vec<F> = v
        .iter()
        .zip(y_prev)
        .map(|(vi, yi)| beta_prev * *vi + (F::one() - beta_prev) * *yi)
        .collect();
    let w_next: Vec<F> = w_cur
        .iter()
        .zip(w_prev)
        .zip(&v)
        .map(|((wc, wp), vi)| *wc - mu * *vi + nu * (*wc - *wp))
        .collect();
    if !check_bounded(&w_next) || !check_bounded(&y) {
        let state = IterateState { k, w: w_cur.to_vec(), y: y_prev.to_vec(), tau };
        return Err(diverged_state(problem, &state, k + 1));
    }
    let row = make_row(problem, schedule, r, k, tau, w_cur, &y, v, v_mean, xi as i64)?;
    Ok(((w_next, w_cur.to_vec()), row))
}

/// Run `steps` iterations of the chosen form. Deterministic given the seed;
/// a divergence failure embeds the partial record.
pub fn run<F: Scalar>(
    problem: &StochasticProblem<F>,
    schedule: &StepSchedule<F>,
    init: &Init<F>,
    policy: SelectionPolicy,
    seed: u64,
    steps: usize,
    form: Form,
) -> std::result::Result<RunRecord<F>, RunFailure<F>> {
    if steps == 0 {
        return Err(RunFailure::Core(Error::Validation("steps must be >= 1".into())));
    }
    let r = schedule.ratio();
    let dim = problem.dim();
    let (w0, y0) = init.resolve(schedule.alpha(0));
    if w0.len() != dim || y0.len() != dim {
        return Err(RunFailure::Core(Error::Arity {
            what: "initial state",
            expected: dim,
            got: w0.len(),
        }));
    }
    if !check_bounded(&w0) || !check_bounded(&y0) {
        return Err(RunFailure::Core(Error::Validation("initial state must be finite".into())));
    }
    let mut rng = seed_rng(seed);
    let mut record = RunRecord {
        problem: problem.name().to_string(),
        form,
        policy,
        seed,
        r,
        dim,
        rows: Vec::with_capacity(steps + 1),
        status: RunStatus::Completed,
    };
    let v0 = problem.expected_oracle(&w0, policy)?;
    record.rows.push(make_row(
        problem,
        schedule,
        r,
        0,
        F::zero(),
        &w0,
        &y0,
        v0.clone(),
        v0,
        -1,
    )?);

    match form {
        Form::A => {
            let mut state = IterateState { k: 0, w: w0, y: y0, tau: F::zero() };
            for _ in 0..steps {
                match shb_step(&state, problem, schedule, policy, &mut rng) {
                    Ok((next, row)) => {
                        record.rows.push(row);
                        state = next;
                    }
                    Err(RunFailure::Diverged(d)) => {
                        record.status = RunStatus::Diverged { step: d.step };
                        return Err(RunFailure::Diverged(Box::new(Diverged {
                            step: d.step,
                            record,
                        })));
                    }
                    Err(other) => return Err(other),
                }
            }
        }
        Form::B => {
            let alpha0 = schedule.alpha(0);
            let w1 = linalg::axpy(&record.rows[0].w, -alpha0, &record.rows[0].y);
            let mut pair = (w1, record.rows[0].w.clone());
            let mut y_prev = record.rows[0].y.clone();
            let mut tau = F::zero();
            for k in 1..=steps {
                tau = tau + schedule.alpha(k - 1);
                if !check_bounded(&pair.0) {
                    record.status = RunStatus::Diverged { step: k };
                    return Err(RunFailure::Diverged(Box::new(Diverged { step: k, record })));
                }
                match shb_step_second_order(
                    (&pair.0, &pair.1),
                    k,
                    tau,
                    &y_prev,
                    problem,
                    schedule,
                    policy,
                    &mut rng,
                ) {
                    Ok((next_pair, row)) => {
                        y_prev = row.y.clone();
                        record.rows.push(row);
                        pair = next_pair;
                    }
                    Err(RunFailure::Diverged(d)) => {
                        record.status = RunStatus::Diverged { step: d.step };
                        return Err(RunFailure::Diverged(Box::new(Diverged {
                            step: d.step,
                            record,
                        })));
                    }
                    Err(other) => return Err(other),
                }
            }
        }
    }
    Ok(record)
}

/// max_k ||w_k^a - w_k^b|| / (1 + max_k ||w_k^a||), the form-equivalence
/// deviation measure.
pub fn max_relative_deviation<F: Scalar>(a: &RunRecord<F>, b: &RunRecord<F>) -> F {
    let mut max_dev = F::zero();
    let mut max_norm = F::zero();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        max_dev = max_dev.max(linalg::dist(&ra.w, &rb.w));
        max_norm = max_norm.max(linalg::norm(&ra.w));
    }
    max_dev / (F::one() + max_norm)
}

impl<F: Scalar> RunRecord<F> {
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn final_row(&self) -> &Row<F> {
        self.rows.last().expect("records hold at least the initial row")
    }

    /// max - min of F(w_k) over the last `fraction` of the steps.
    pub fn objective_oscillation(&self, fraction: f64) -> F {
        let n = self.rows.len();
        let start = ((n as f64) * (1.0 - fraction)).floor() as usize;
        let start = start.min(n - 1);
        let mut lo = self.rows[start].f_value;
        let mut hi = lo;
        for row in &self.rows[start..] {
            lo = lo.min(row.f_value);
            hi = hi.max(row.f_value);
        }
        hi - lo
    }

    pub fn max_y_norm(&self) -> F {
        self.rows.iter().map(|r| linalg::norm(&r.y)).fold(F::zero(), F::max)
    }

    /// CSV with the documented column order:
    /// `k,tau,alpha,beta,w*,y*,F,E,v*,V*,u*,xi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("k,tau,alpha,beta");
        for i in 0..self.dim {
            out.push_str(&format!(",w{i}"));
        }
        for i in 0..self.dim {
            out.push_str(&format!(",y{i}"));
        }
        out.push_str(",F,E");
        for i in 0..self.dim {
            out.push_str(&format!(",v{i}"));
        }
        for i in 0..self.dim {
            out.push_str(&format!(",V{i}"));
        }
        for i in 0..self.dim {
            out.push_str(&format!(",u{i}"));
        }
        out.push_str(",xi\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}", row.k, row.tau, row.alpha, row.beta));
            for x in &row.w {
                out.push_str(&format!(",{x}"));
            }
            for x in &row.y {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(&format!(",{},{}", row.f_value, row.energy));
            for x in &row.v {
                out.push_str(&format!(",{x}"));
            }
            for x in &row.v_mean {
                out.push_str(&format!(",{x}"));
            }
            for x in &row.noise {
                out.push_str(&format!(",{x}"));
            }
            out.push_str(&format!(",{}\n", row.xi));
        }
        out
    }
}
