//! Stochastic objectives `F(w) = E[f(w, xi)]` with finitely supported
//! sample distributions: exact expectations, expected oracles, exact
//! expected conservative-gradient sets in low dimension, and analytic
//! Clarke subdifferentials for the catalog problems.

pub mod catalog;
mod json;

pub use json::{problem_from_json, problem_to_json};

use crate::error::{Error, Result};
use crate::graph::{ExprGraph, GrowthBound, SelectionPolicy};
use crate::linalg;
use crate::rng::RngState;
use crate::scalar::{cst, Scalar};
use crate::set::ConvexSet;

/// Finitely discrete sample distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<F: Scalar> {
    support: Vec<Vec<F>>,
    probs: Vec<F>,
    cumulative: Vec<F>,
}

impl<F: Scalar> Distribution<F> {
    pub fn new(support: Vec<Vec<F>>, probs: Vec<F>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::Validation(format!(
                "distribution needs matching nonempty support/probs, got {} / {}",
                support.len(),
                probs.len()
            )));
        }
        let arity = support[0].len();
        if support.iter().any(|s| s.len() != arity) {
            return Err(Error::Validation("support points must share one arity".into()));
        }
        for i in 0..support.len() {
            for j in (i + 1)..support.len() {
                if support[i] == support[j] {
                    return Err(Error::Validation(format!("duplicate support point at {i}, {j}")));
                }
            }
        }
        if probs.iter().any(|p| !(*p > F::zero()) || !p.is_finite()) {
            return Err(Error::Validation("probabilities must be strictly positive".into()));
        }
        let total = probs.iter().fold(F::zero(), |s, p| s + *p);
        if (total - F::one()).abs() > cst(1e-12) {
            return Err(Error::Validation(format!("probabilities sum to {total}, not 1")));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = F::zero();
        for p in &probs {
            acc = acc + *p;
            cumulative.push(acc);
        }
        Ok(Distribution { support, probs, cumulative })
    }

    pub fn point_mass(s: Vec<F>) -> Self {
        Distribution { support: vec![s], probs: vec![F::one()], cumulative: vec![F::one()] }
    }

    pub fn uniform(support: Vec<Vec<F>>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::Validation("uniform distribution needs support points".into()));
        }
        let p = F::one() / cst::<F>(n as f64);
        let mut probs = vec![p; n];
        // make the total exactly one regardless of rounding
        let partial = p * cst::<F>((n - 1) as f64);
        probs[n - 1] = F::one() - partial;
        Distribution::new(support, probs)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[Vec<F>] {
        &self.support
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn arity(&self) -> usize {
        self.support[0].len()
    }

    /// Draw one support index; the caller owns and threads the rng state.
    pub fn sample_index(&self, rng: &mut RngState) -> usize {
        let u: F = crate::rng::uniform(rng, F::zero(), F::one());
        self.cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.support.len() - 1)
    }
}

/// Closed-form Clarke subdifferentials for the catalog objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClarkeOracle {
    Abs1d,
    Flat1d,
    Artifact1d,
    Ell1,
    Ridge2d,
}

impl ClarkeOracle {
    /// `partial^c F(w)` as an explicit convex set.
    pub fn set<F: Scalar>(&self, w: &[F]) -> ConvexSet<F> {
        match self {
            ClarkeOracle::Abs1d => abs_subdiff(w[0]),
            ClarkeOracle::Flat1d => flat_subdiff(w[0]),
            ClarkeOracle::Artifact1d => {
                let g = F::one() + w[0] * cst(0.5);
                ConvexSet::Interval { lo: g, hi: g }
            }
            ClarkeOracle::Ell1 => {
                let a = flat_subdiff(w[0]);
                let b = flat_subdiff(w[1]);
                let mut corners = Vec::new();
                for x in a.points() {
                    for y in b.points() {
                        corners.push(vec![x[0], y[0]]);
                    }
                }
                ConvexSet::from_points(2, corners).expect("box hull")
            }
            ClarkeOracle::Ridge2d => {
                let half = cst::<F>(0.5);
                let g1 = vec![F::one() + half * w[0], half * w[1]];
                let g2 = vec![half * w[0], F::one() + half * w[1]];
                if w[0] > w[1] {
                    ConvexSet::singleton(&g1)
                } else if w[0] < w[1] {
                    ConvexSet::singleton(&g2)
                } else {
                    ConvexSet::from_points(2, vec![g1, g2]).expect("segment hull")
                }
            }
        }
    }

    /// Membership test for the documented Clarke critical set.
    pub fn critical_set_contains<F: Scalar>(&self, w: &[F]) -> bool {
        match self {
            ClarkeOracle::Abs1d => w[0] == F::zero(),
            ClarkeOracle::Flat1d => w[0].abs() <= F::one(),
            ClarkeOracle::Artifact1d => w[0] == cst(-2.0),
            ClarkeOracle::Ell1 => w[0].abs() <= F::one() && w[1].abs() <= F::one(),
            ClarkeOracle::Ridge2d => w[0] == -F::one() && w[1] == -F::one(),
        }
    }
}

fn abs_subdiff<F: Scalar>(x: F) -> ConvexSet<F> {
    if x > F::zero() {
        ConvexSet::Interval { lo: F::one(), hi: F::one() }
    } else if x < F::zero() {
        ConvexSet::Interval { lo: -F::one(), hi: -F::one() }
    } else {
        ConvexSet::Interval { lo: -F::one(), hi: F::one() }
    }
}

/// Subdifferential of `max(|x|, 1)`.
fn flat_subdiff<F: Scalar>(x: F) -> ConvexSet<F> {
    let one = F::one();
    if x > one {
        ConvexSet::Interval { lo: one, hi: one }
    } else if x == one {
        ConvexSet::Interval { lo: F::zero(), hi: one }
    } else if x > -one {
        ConvexSet::Interval { lo: F::zero(), hi: F::zero() }
    } else if x == -one {
        ConvexSet::Interval { lo: -one, hi: F::zero() }
    } else {
        ConvexSet::Interval { lo: -one, hi: -one }
    }
}

/// A stochastic objective with its sampled-integrand graph, finite sample
/// distribution, growth envelope, declared finite lower bound, and optional
/// analytic Clarke oracle. Immutable after construction.
#[derive(Debug, Clone)]
pub struct StochasticProblem<F: Scalar> {
    name: String,
    graph: ExprGraph<F>,
    dist: Distribution<F>,
    growth: GrowthBound<F>,
    f_star: F,
    clarke: Option<ClarkeOracle>,
    probe_box: (Vec<F>, Vec<F>),
}

impl<F: Scalar> StochasticProblem<F> {
    pub fn new(
        name: impl Into<String>,
        graph: ExprGraph<F>,
        dist: Distribution<F>,
        growth: GrowthBound<F>,
        f_star: F,
        clarke: Option<ClarkeOracle>,
        probe_box: (Vec<F>, Vec<F>),
    ) -> Result<Self> {
        if !f_star.is_finite() {
            return Err(Error::Validation(
                "declared lower bound F* must be finite (objectives are bounded below)".into(),
            ));
        }
        if dist.arity() != graph.sample_dim() {
            return Err(Error::Validation(format!(
                "distribution arity {} differs from graph sample dim {}",
                dist.arity(),
                graph.sample_dim()
            )));
        }
        if growth.kappa.len() != dist.len() {
            return Err(Error::Validation(format!(
                "growth bound has {} kappa values for {} support points",
                growth.kappa.len(),
                dist.len()
            )));
        }
        let dim = graph.input_dim();
        if probe_box.0.len() != dim || probe_box.1.len() != dim {
            return Err(Error::Validation("probe box must match the problem dimension".into()));
        }
        if probe_box.0.iter().zip(&probe_box.1).any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Validation("probe box must have lo < hi per coordinate".into()));
        }
        Ok(StochasticProblem { name: name.into(), graph, dist, growth, f_star, clarke, probe_box })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.graph.input_dim()
    }
    pub fn graph(&self) -> &ExprGraph<F> {
        &self.graph
    }
    pub fn distribution(&self) -> &Distribution<F> {
        &self.dist
    }
    pub fn growth(&self) -> &GrowthBound<F> {
        &self.growth
    }
    pub fn f_star(&self) -> F {
        self.f_star
    }
    pub fn clarke_oracle(&self) -> Option<ClarkeOracle> {
        self.clarke
    }
    pub fn probe_box(&self) -> (&[F], &[F]) {
        (&self.probe_box.0, &self.probe_box.1)
    }

    /// Exact expectation `F(w) = sum p_i f(w, s_i)`.
    pub fn expected_value(&self, w: &[F]) -> Result<F> {
        let mut total = F::zero();
        for (s, p) in self.dist.support().iter().zip(self.dist.probs()) {
            total = total + *p * self.graph.eval(w, s)?;
        }
        Ok(total)
    }

    /// Expected oracle `V(w) = sum p_i v(w, s_i)` under one selection policy.
    pub fn expected_oracle(&self, w: &[F], policy: SelectionPolicy) -> Result<Vec<F>> {
        let mut total = linalg::zeros(self.dim());
        for (s, p) in self.dist.support().iter().zip(self.dist.probs()) {
            let v = self.graph.backprop_select(w, s, policy)?;
            total = linalg::axpy(&total, *p, &v);
        }
        Ok(total)
    }

    /// Exact expected conservative gradient `D_F(w) = sum p_i D(w, s_i)`
    /// as a probability-weighted Minkowski sum of the per-sample sets.
    pub fn expected_conservative_set(&self, w: &[F]) -> Result<ConvexSet<F>> {
        let mut acc: Option<ConvexSet<F>> = None;
        for (s, p) in self.dist.support().iter().zip(self.dist.probs()) {
            let part = self.graph.conservative_set(w, s)?.scale(*p);
            acc = Some(match acc {
                None => part,
                Some(prev) => prev.minkowski(&part)?,
            });
        }
        acc.ok_or_else(|| Error::Empty("empty distribution".into()))
    }

    /// Analytic Clarke subdifferential, when the problem declares one.
    pub fn clarke_set(&self, w: &[F]) -> Option<ConvexSet<F>> {
        self.clarke.map(|oracle| oracle.set(w))
    }

    /// `(dist(0, D_F(w)), dist(0, partial^c F(w)) when available)`.
    pub fn criticality_gap(&self, w: &[F]) -> Result<(F, Option<F>)> {
        let zero = linalg::zeros(self.dim());
        let d_gap = self.expected_conservative_set(w)?.distance_to(&zero);
        let clarke_gap = self.clarke_set(w).map(|set| set.distance_to(&zero));
        Ok((d_gap, clarke_gap))
    }

    /// Draw one sample; returns its support index and point.
    pub fn sample(&self, rng: &mut RngState) -> (usize, &[F]) {
        let idx = self.dist.sample_index(rng);
        (idx, &self.dist.support()[idx])
    }

    /// True when `w` lies exactly on a kink of the integrand for any
    /// support point, or on an injected artifact anchor.
    pub fn kink_or_artifact_hit(&self, w: &[F]) -> Result<bool> {
        if self.graph.artifact_at(w).is_some() {
            return Ok(true);
        }
        for s in self.dist.support() {
            if !self.graph.active_kinks(w, s)?.is_empty() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// True when the integrand has nonsmooth primitives or injected
    /// artifacts, i.e. the avoidance experiment has something to detect.
    pub fn has_nonsmooth_anchors(&self) -> bool {
        !self.graph.artifacts().is_empty()
            || self.graph.nodes().iter().any(crate::graph::NodeOp::is_nonsmooth)
    }
}
