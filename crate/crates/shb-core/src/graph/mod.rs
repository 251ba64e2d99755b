//! Scalar expression graphs over a frozen primitive catalog, with
//! reverse-mode selection of conservative-gradient elements.
//!
//! Every primitive is semialgebraic and locally Lipschitz, and its Clarke
//! subdifferential at a kink is the convex hull of the two one-sided
//! derivatives. That closure property is what makes the policy-enumeration
//! construction of the full set `D(w, s)` exact, so the catalog is closed:
//! constant, input coordinate, sample coordinate, add, mul, neg, max2,
//! relu, abs, square.

pub(crate) mod json;

pub use json::{graph_from_json, graph_to_json};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{cst, Scalar};
use crate::set::ConvexSet;

/// Rule for picking a derivative element at a kink point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionPolicy {
    /// One-sided derivative from below the switching value.
    Left,
    /// One-sided derivative from above the switching value.
    Right,
    /// relu'(0) = 0, abs'(0) = 0, max2 ties take the first argument.
    #[default]
    Zero,
    /// Midpoint of the two one-sided derivatives.
    Midpoint,
}

impl SelectionPolicy {
    pub const ALL: [SelectionPolicy; 4] = [
        SelectionPolicy::Left,
        SelectionPolicy::Right,
        SelectionPolicy::Zero,
        SelectionPolicy::Midpoint,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeOp<F: Scalar> {
    Const(F),
    Input(usize),
    Sample(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Max2(usize, usize),
    Relu(usize),
    Abs(usize),
    Square(usize),
}

impl<F: Scalar> NodeOp<F> {
    fn inputs(&self) -> Vec<usize> {
        match *self {
            NodeOp::Const(_) | NodeOp::Input(_) | NodeOp::Sample(_) => vec![],
            NodeOp::Neg(a) | NodeOp::Relu(a) | NodeOp::Abs(a) | NodeOp::Square(a) => vec![a],
            NodeOp::Add(a, b) | NodeOp::Mul(a, b) | NodeOp::Max2(a, b) => vec![a, b],
        }
    }

    pub fn is_nonsmooth(&self) -> bool {
        matches!(self, NodeOp::Relu(_) | NodeOp::Abs(_) | NodeOp::Max2(_, _))
    }
}

/// Injected conservative-gradient artifact: at the anchor point (matched by
/// exact coordinate equality) the gradient set is augmented with the closed
/// ball of the given radius around the origin, making the anchor a critical
/// point of the conservative calculus without touching the function values.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact<F: Scalar> {
    pub anchor: Vec<F>,
    pub radius: F,
}

/// Per-sample growth envelope: every element of `D(w, s_i)` must satisfy
/// `|v| <= kappa[i] * psi(|w|)`, with `psi` a polynomial with nonnegative
/// coefficients (constant term first).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GrowthBound<F: Scalar> {
    pub kappa: Vec<F>,
    pub psi_coeffs: Vec<F>,
}

impl<F: Scalar> GrowthBound<F> {
    pub fn new(kappa: Vec<F>, psi_coeffs: Vec<F>) -> Result<Self> {
        if kappa.iter().any(|k| *k < F::zero() || !k.is_finite()) {
            return Err(Error::Validation("growth bound kappa must be nonnegative".into()));
        }
        if psi_coeffs.iter().any(|c| *c < F::zero() || !c.is_finite()) {
            return Err(Error::Validation(
                "growth bound psi coefficients must be nonnegative".into(),
            ));
        }
        Ok(GrowthBound { kappa, psi_coeffs })
    }

    pub fn psi(&self, t: F) -> F {
        self.psi_coeffs.iter().rev().fold(F::zero(), |acc, c| acc * t + *c)
    }

    pub fn bound(&self, sample_index: usize, w_norm: F) -> F {
        self.kappa[sample_index] * self.psi(w_norm)
    }
}

/// Computation graph of `f(w, s)`; immutable after construction, all
/// operations are pure functions of their arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprGraph<F: Scalar> {
    nodes: Vec<NodeOp<F>>,
    output: usize,
    artifacts: Vec<Artifact<F>>,
    input_dim: usize,
    sample_dim: usize,
}

/// Active kinks beyond this count make the policy enumeration intractable.
pub const MAX_ACTIVE_KINKS: usize = 12;

impl<F: Scalar> ExprGraph<F> {
    pub fn new(
        nodes: Vec<NodeOp<F>>,
        output: usize,
        artifacts: Vec<Artifact<F>>,
        input_dim: usize,
        sample_dim: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Graph("graph has no nodes".into()));
        }
        if output >= nodes.len() {
            return Err(Error::Graph(format!(
                "output id {output} out of range ({} nodes)",
                nodes.len()
            )));
        }
        for (id, node) in nodes.iter().enumerate() {
            for input in node.inputs() {
                if input >= id {
                    return Err(Error::Graph(format!(
                        "node {id} depends on node {input}; inputs must precede the node"
                    )));
                }
            }
            match node {
                NodeOp::Const(c) if !c.is_finite() => {
                    return Err(Error::Graph(format!("node {id}: non-finite constant")));
                }
                NodeOp::Input(i) if *i >= input_dim => {
                    return Err(Error::Graph(format!(
                        "node {id}: input coordinate {i} out of range (dim {input_dim})"
                    )));
                }
                NodeOp::Sample(j) if *j >= sample_dim => {
                    return Err(Error::Graph(format!(
                        "node {id}: sample coordinate {j} out of range (dim {sample_dim})"
                    )));
                }
                _ => {}
            }
        }
        for artifact in &artifacts {
            if artifact.anchor.len() != input_dim {
                return Err(Error::Graph(format!(
                    "artifact anchor dim {} differs from input dim {input_dim}",
                    artifact.anchor.len()
                )));
            }
            if artifact.radius < F::zero() || !artifact.radius.is_finite() {
                return Err(Error::Graph("artifact radius must be finite and >= 0".into()));
            }
        }
        Ok(ExprGraph { nodes, output, artifacts, input_dim, sample_dim })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }

    pub fn nodes(&self) -> &[NodeOp<F>] {
        &self.nodes
    }

    pub fn output(&self) -> usize {
        self.output
    }

    pub fn artifacts(&self) -> &[Artifact<F>] {
        &self.artifacts
    }

    fn check_arity(&self, w: &[F], s: &[F]) -> Result<()> {
        if w.len() != self.input_dim {
            return Err(Error::Arity { what: "input vector", expected: self.input_dim, got: w.len() });
        }
        if s.len() != self.sample_dim {
            return Err(Error::Arity { what: "sample vector", expected: self.sample_dim, got: s.len() });
        }
        Ok(())
    }

    fn forward(&self, w: &[F], s: &[F]) -> Vec<F> {
        let mut values: Vec<F> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match *node {
                NodeOp::Const(c) => c,
                NodeOp::Input(i) => w[i],
                NodeOp::Sample(j) => s[j],
                NodeOp::Add(a, b) => values[a] + values[b],
                NodeOp::Mul(a, b) => values[a] * values[b],
                NodeOp::Neg(a) => -values[a],
                NodeOp::Max2(a, b) => {
                    let (x, y): (F, F) = (values[a], values[b]);
                    if x >= y {
                        x
                    } else {
                        y
                    }
                }
                NodeOp::Relu(a) => {
                    let x: F = values[a];
                    if x > F::zero() {
                        x
                    } else {
                        F::zero()
                    }
                }
                NodeOp::Abs(a) => values[a].abs(),
                NodeOp::Square(a) => values[a] * values[a],
            };
            values.push(v);
        }
        values
    }

    /// Forward evaluation of `f(w, s)`.
    pub fn eval(&self, w: &[F], s: &[F]) -> Result<F> {
        self.check_arity(w, s)?;
        Ok(self.forward(w, s)[self.output])
    }

    /// Node ids of nonsmooth primitives sitting exactly at their kink.
    /// Kink detection is exact floating equality: kinks are measure zero
    /// and only exact hits select a nonsmooth branch.
    pub fn active_kinks(&self, w: &[F], s: &[F]) -> Result<Vec<usize>> {
        self.check_arity(w, s)?;
        let values = self.forward(w, s);
        Ok(self.active_kinks_from(&values))
    }

    fn active_kinks_from(&self, values: &[F]) -> Vec<usize> {
        let mut active = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let at_kink = match *node {
                NodeOp::Relu(a) | NodeOp::Abs(a) => values[a] == F::zero(),
                NodeOp::Max2(a, b) => values[a] == values[b],
                _ => false,
            };
            if at_kink {
                active.push(id);
            }
        }
        active
    }

    /// Smallest switching-value magnitude over all nonsmooth nodes
    /// (infinite for smooth graphs): the margin before any kink flips.
    pub fn kink_distance(&self, w: &[F], s: &[F]) -> Result<F> {
        self.check_arity(w, s)?;
        let values = self.forward(w, s);
        let mut dist = F::infinity();
        for node in &self.nodes {
            match *node {
                NodeOp::Relu(a) | NodeOp::Abs(a) => dist = dist.min(values[a].abs()),
                NodeOp::Max2(a, b) => dist = dist.min((values[a] - values[b]).abs()),
                _ => {}
            }
        }
        Ok(dist)
    }

    /// The artifact whose anchor equals `w` on every coordinate, if any.
    pub fn artifact_at(&self, w: &[F]) -> Option<&Artifact<F>> {
        self.artifacts.iter().find(|a| a.anchor.iter().zip(w).all(|(x, y)| x == y))
    }

    /// True when `(w, s)` touches a kink of any primitive or `w` is an
    /// injected artifact anchor.
    pub fn kink_or_artifact_hit(&self, w: &[F], s: &[F]) -> Result<bool> {
        Ok(!self.active_kinks(w, s)?.is_empty() || self.artifact_at(w).is_some())
    }

    /// Reverse-mode selection of one element of `D(w, s)`, with the same
    /// `policy` applied at every active kink. Where every touched primitive
    /// is differentiable this is the gradient of `f(., s)`.
    ///
    /// At an injected artifact anchor, `Zero` returns the least-norm element
    /// of the augmented set (the origin, which the artifact ball always
    /// contains); the other policies return their ordinary selection.
    pub fn backprop_select(&self, w: &[F], s: &[F], policy: SelectionPolicy) -> Result<Vec<F>> {
        self.check_arity(w, s)?;
        if policy == SelectionPolicy::Zero && self.artifact_at(w).is_some() {
            return Ok(linalg::zeros(self.input_dim));
        }
        let values = self.forward(w, s);
        Ok(self.backprop_with(&values, |_| policy))
    }

    fn backprop_with(&self, values: &[F], policy_at: impl Fn(usize) -> SelectionPolicy) -> Vec<F> {
        let n = self.nodes.len();
        let mut adj = vec![F::zero(); n];
        adj[self.output] = F::one();
        let mut grad = vec![F::zero(); self.input_dim];
        let half = cst::<F>(0.5);
        for id in (0..n).rev() {
            let a_out = adj[id];
            if a_out == F::zero() {
                continue;
            }
            match self.nodes[id] {
                NodeOp::Const(_) | NodeOp::Sample(_) => {}
                NodeOp::Input(i) => grad[i] = grad[i] + a_out,
                NodeOp::Add(a, b) => {
                    adj[a] = adj[a] + a_out;
                    adj[b] = adj[b] + a_out;
                }
                NodeOp::Mul(a, b) => {
                    adj[a] = adj[a] + a_out * values[b];
                    adj[b] = adj[b] + a_out * values[a];
                }
                NodeOp::Neg(a) => adj[a] = adj[a] - a_out,
                NodeOp::Square(a) => {
                    adj[a] = adj[a] + a_out * (values[a] + values[a]);
                }
                NodeOp::Relu(a) => {
                    let x = values[a];
                    let d = if x > F::zero() {
                        F::one()
                    } else if x < F::zero() {
                        F::zero()
                    } else {
                        match policy_at(id) {
                            SelectionPolicy::Left | SelectionPolicy::Zero => F::zero(),
                            SelectionPolicy::Right => F::one(),
                            SelectionPolicy::Midpoint => half,
                        }
                    };
                    adj[a] = adj[a] + a_out * d;
                }
                NodeOp::Abs(a) => {
                    let x = values[a];
                    let d = if x > F::zero() {
                        F::one()
                    } else if x < F::zero() {
                        -F::one()
                    } else {
                        match policy_at(id) {
                            SelectionPolicy::Left => -F::one(),
                            SelectionPolicy::Right => F::one(),
                            SelectionPolicy::Zero => F::zero(),
                            SelectionPolicy::Midpoint => F::zero(),
                        }
                    };
                    adj[a] = adj[a] + a_out * d;
                }
                NodeOp::Max2(a, b) => {
                    let (x, y) = (values[a], values[b]);
                    let (da, db) = if x > y {
                        (F::one(), F::zero())
                    } else if x < y {
                        (F::zero(), F::one())
                    } else {
                        match policy_at(id) {
                            SelectionPolicy::Left => (F::zero(), F::one()),
                            SelectionPolicy::Right | SelectionPolicy::Zero => (F::one(), F::zero()),
                            SelectionPolicy::Midpoint => (half, half),
                        }
                    };
                    adj[a] = adj[a] + a_out * da;
                    adj[b] = adj[b] + a_out * db;
                }
            }
        }
        grad
    }

    /// The full set `D(w, s)`: convex hull of the selections over the
    /// Cartesian product of {left, right, zero} policies at every active
    /// kink, merged with the artifact ball when `w` is an anchor.
    pub fn conservative_set(&self, w: &[F], s: &[F]) -> Result<ConvexSet<F>> {
        self.check_arity(w, s)?;
        if self.input_dim > 3 {
            return Err(Error::Capability(format!(
                "conservative_set limited to dim <= 3, got {}",
                self.input_dim
            )));
        }
        let values = self.forward(w, s);
        let kinks = self.active_kinks_from(&values);
        if kinks.len() > MAX_ACTIVE_KINKS {
            return Err(Error::Capability(format!(
                "{} active kinks exceed the enumeration limit {MAX_ACTIVE_KINKS}",
                kinks.len()
            )));
        }
        const CHOICES: [SelectionPolicy; 3] =
            [SelectionPolicy::Left, SelectionPolicy::Right, SelectionPolicy::Zero];
        let mut points = Vec::new();
        let combos = 3usize.pow(kinks.len() as u32);
        for combo in 0..combos {
            let mut c = combo;
            let mut assignment = Vec::with_capacity(kinks.len());
            for _ in 0..kinks.len() {
                assignment.push(CHOICES[c % 3]);
                c /= 3;
            }
            let pick = |id: usize| {
                kinks
                    .iter()
                    .position(|&k| k == id)
                    .map_or(SelectionPolicy::Zero, |i| assignment[i])
            };
            points.push(self.backprop_with(&values, pick));
        }
        if let Some(artifact) = self.artifact_at(w) {
            points.extend(ball_vertices(self.input_dim, artifact.radius)?);
        }
        ConvexSet::from_points(self.input_dim, points)
    }

    /// Numerical conservativity check along a piecewise-linear curve:
    /// `| f(end) - f(start) - sum of midpoint-rule <v, dgamma> |`.
    /// For a conservative gradient this vanishes at rate O(1/m) on
    /// piecewise-smooth segments.
    pub fn path_integral_residual(
        &self,
        s: &[F],
        curve: &[Vec<F>],
        substeps: usize,
        policy: SelectionPolicy,
    ) -> Result<F> {
        self.path_residual_with(s, curve, substeps, |x| self.backprop_select(x, s, policy))
    }

    /// Shared midpoint-rule residual driver; `oracle` supplies the gradient
    /// element at each probe point.
    pub fn path_residual_with(
        &self,
        s: &[F],
        curve: &[Vec<F>],
        substeps: usize,
        oracle: impl Fn(&[F]) -> Result<Vec<F>>,
    ) -> Result<F> {
        if substeps == 0 {
            return Err(Error::Validation("substeps must be >= 1".into()));
        }
        if curve.len() < 2 {
            return Err(Error::Validation("curve needs at least two breakpoints".into()));
        }
        for p in curve {
            if !linalg::all_finite(p) {
                return Err(Error::Validation("curve breakpoints must be finite".into()));
            }
        }
        let m = cst::<F>(substeps as f64);
        let mut integral = F::zero();
        for pair in curve.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let delta = linalg::sub(b, a);
            for i in 0..substeps {
                let t = (cst::<F>(i as f64) + cst::<F>(0.5)) / m;
                let x = linalg::axpy(a, t, &delta);
                let v = oracle(&x)?;
                integral = integral + linalg::dot(&v, &delta) / m;
            }
        }
        let gain = self.eval(curve.last().expect("nonempty"), s)?
            - self.eval(curve.first().expect("nonempty"), s)?;
        Ok((gain - integral).abs())
    }
}

/// Vertices whose hull covers the closed ball of radius `rho` around the
/// origin: interval endpoints in 1D, a 32-point circle in 2D.
fn ball_vertices<F: Scalar>(dim: usize, rho: F) -> Result<Vec<Vec<F>>> {
    if rho == F::zero() {
        return Ok(vec![linalg::zeros(dim)]);
    }
    match dim {
        1 => Ok(vec![vec![-rho], vec![rho]]),
        2 => {
            let n = 32;
            Ok((0..n)
                .map(|i| {
                    let theta = cst::<F>(2.0 * std::f64::consts::PI * i as f64 / n as f64);
                    vec![rho * theta.cos(), rho * theta.sin()]
                })
                .collect())
        }
        d => Err(Error::Capability(format!("artifact ball merge limited to dim <= 2, got {d}"))),
    }
}

/// Convenience builder for catalog graphs and tests.
pub struct GraphBuilder<F: Scalar> {
    nodes: Vec<NodeOp<F>>,
    input_dim: usize,
    sample_dim: usize,
}

impl<F: Scalar> GraphBuilder<F> {
    pub fn new(input_dim: usize, sample_dim: usize) -> Self {
        GraphBuilder { nodes: Vec::new(), input_dim, sample_dim }
    }

    fn push(&mut self, op: NodeOp<F>) -> usize {
        self.nodes.push(op);
        self.nodes.len() - 1
    }

    pub fn constant(&mut self, c: F) -> usize {
        self.push(NodeOp::Const(c))
    }
    pub fn input(&mut self, i: usize) -> usize {
        self.push(NodeOp::Input(i))
    }
    pub fn sample(&mut self, j: usize) -> usize {
        self.push(NodeOp::Sample(j))
    }
    pub fn add(&mut self, a: usize, b: usize) -> usize {
        self.push(NodeOp::Add(a, b))
    }
    pub fn mul(&mut self, a: usize, b: usize) -> usize {
        self.push(NodeOp::Mul(a, b))
    }
    pub fn neg(&mut self, a: usize) -> usize {
        self.push(NodeOp::Neg(a))
    }
    pub fn sub(&mut self, a: usize, b: usize) -> usize {
        let nb = self.neg(b);
        self.add(a, nb)
    }
    pub fn max2(&mut self, a: usize, b: usize) -> usize {
        self.push(NodeOp::Max2(a, b))
    }
    pub fn relu(&mut self, a: usize) -> usize {
        self.push(NodeOp::Relu(a))
    }
    pub fn abs(&mut self, a: usize) -> usize {
        self.push(NodeOp::Abs(a))
    }
    pub fn square(&mut self, a: usize) -> usize {
        self.push(NodeOp::Square(a))
    }

    pub fn finish(self, output: usize) -> Result<ExprGraph<F>> {
        self.finish_with_artifacts(output, Vec::new())
    }

    pub fn finish_with_artifacts(
        self,
        output: usize,
        artifacts: Vec<Artifact<F>>,
    ) -> Result<ExprGraph<F>> {
        ExprGraph::new(self.nodes, output, artifacts, self.input_dim, self.sample_dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_of_diff() -> ExprGraph<f64> {
        // f(w, s) = |w - s|
        let mut b = GraphBuilder::new(1, 1);
        let w = b.input(0);
        let s = b.sample(0);
        let d = b.sub(w, s);
        let out = b.abs(d);
        b.finish(out).unwrap()
    }

    fn relu_minus_relu_neg() -> ExprGraph<f64> {
        // f(w) = relu(w) - relu(-w), identically w
        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let r1 = b.relu(w);
        let nw = b.neg(w);
        let r2 = b.relu(nw);
        let out = b.sub(r1, r2);
        b.finish(out).unwrap()
    }

    fn abs1d_graph() -> ExprGraph<f64> {
        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let out = b.abs(w);
        b.finish(out).unwrap()
    }

    #[test]
    fn eval_matches_hand_values() {
        let g = abs_of_diff();
        assert_eq!(g.eval(&[2.0], &[1.0]).unwrap(), 1.0);

        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let r = b.relu(w);
        let g = b.finish(r).unwrap();
        assert_eq!(g.eval(&[-3.0], &[]).unwrap(), 0.0);

        let mut b = GraphBuilder::new(1, 1);
        let w = b.input(0);
        let s = b.sample(0);
        let d = b.sub(w, s);
        let sq = b.square(d);
        let g = b.finish(sq).unwrap();
        assert_eq!(g.eval(&[0.5], &[-0.5]).unwrap(), 1.0);
    }

    #[test]
    fn eval_rejects_arity_mismatch() {
        let g = abs_of_diff();
        assert!(matches!(g.eval(&[1.0, 2.0], &[0.0]), Err(Error::Arity { .. })));
        assert!(matches!(g.eval(&[1.0], &[]), Err(Error::Arity { .. })));
    }

    #[test]
    fn backprop_away_from_kinks_is_the_gradient() {
        let g = abs_of_diff();
        let v = g.backprop_select(&[2.0], &[1.0], SelectionPolicy::Zero).unwrap();
        assert_eq!(v, vec![1.0]);
    }

    #[test]
    fn zero_policy_creates_the_artificial_critical_point() {
        // relu'(0) = 0 at both kinks gives 0*1 - 0*(-1) = 0, although the
        // function is the identity and its Clarke subdifferential is {1}.
        let g = relu_minus_relu_neg();
        let v = g.backprop_select(&[0.0], &[], SelectionPolicy::Zero).unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn abs_kink_selections_lie_in_the_clarke_interval() {
        let g = abs1d_graph();
        assert_eq!(g.backprop_select(&[0.0], &[], SelectionPolicy::Left).unwrap(), vec![-1.0]);
        assert_eq!(g.backprop_select(&[0.0], &[], SelectionPolicy::Right).unwrap(), vec![1.0]);
        assert_eq!(g.backprop_select(&[0.0], &[], SelectionPolicy::Zero).unwrap(), vec![0.0]);
        assert_eq!(g.backprop_select(&[0.0], &[], SelectionPolicy::Midpoint).unwrap(), vec![0.0]);
    }

    #[test]
    fn conservative_set_at_abs_kink_is_clarke_interval() {
        let g = abs1d_graph();
        let set = g.conservative_set(&[0.0], &[]).unwrap();
        assert_eq!(set, ConvexSet::Interval { lo: -1.0, hi: 1.0 });
    }

    #[test]
    fn conservative_set_of_identity_composition_is_zero_two() {
        let g = relu_minus_relu_neg();
        let set = g.conservative_set(&[0.0], &[]).unwrap();
        assert_eq!(set, ConvexSet::Interval { lo: 0.0, hi: 2.0 });
    }

    #[test]
    fn artifact_ball_merges_into_the_set() {
        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let out = b.abs(w);
        let g = b
            .finish_with_artifacts(out, vec![Artifact { anchor: vec![0.0], radius: 2.0 }])
            .unwrap();
        let set = g.conservative_set(&[0.0], &[]).unwrap();
        assert_eq!(set, ConvexSet::Interval { lo: -2.0, hi: 2.0 });
        // elsewhere unchanged
        let set = g.conservative_set(&[0.5], &[]).unwrap();
        assert_eq!(set, ConvexSet::Interval { lo: 1.0, hi: 1.0 });
        // zero policy returns the least-norm element of the augmented set
        let v = g.backprop_select(&[0.0], &[], SelectionPolicy::Zero).unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn path_residual_symmetric_abs_is_zero() {
        let g = abs1d_graph();
        let curve = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let r = g.path_integral_residual(&[], &curve, 2, SelectionPolicy::Zero).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn path_residual_square_midpoint_rule() {
        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let sq = b.square(w);
        let g = b.finish(sq).unwrap();
        let curve = vec![vec![0.0], vec![1.0]];
        let r = g.path_integral_residual(&[], &curve, 1000, SelectionPolicy::Zero).unwrap();
        assert!(r <= 1e-3, "residual {r}");
    }

    #[test]
    fn path_residual_relu_closed_form() {
        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let r = b.relu(w);
        let g = b.finish(r).unwrap();
        let curve = vec![vec![-1.0], vec![2.0]];
        let res = g.path_integral_residual(&[], &curve, 1000, SelectionPolicy::Zero).unwrap();
        assert!(res <= 1e-2, "residual {res}");
    }

    #[test]
    fn growth_bound_polynomial() {
        let gb = GrowthBound::new(vec![2.0], vec![1.0, 0.5]).unwrap();
        assert_eq!(gb.psi(2.0), 2.0);
        assert_eq!(gb.bound(0, 2.0), 4.0);
        assert!(GrowthBound::new(vec![-1.0], vec![1.0]).is_err());
    }

    #[test]
    fn max2_tie_selections() {
        let mut b = GraphBuilder::new(2, 0);
        let x = b.input(0);
        let y = b.input(1);
        let m = b.max2(x, y);
        let g = b.finish(m).unwrap();
        let at = [1.0, 1.0];
        assert_eq!(g.backprop_select(&at, &[], SelectionPolicy::Zero).unwrap(), vec![1.0, 0.0]);
        assert_eq!(g.backprop_select(&at, &[], SelectionPolicy::Left).unwrap(), vec![0.0, 1.0]);
        assert_eq!(g.backprop_select(&at, &[], SelectionPolicy::Right).unwrap(), vec![1.0, 0.0]);
        assert_eq!(
            g.backprop_select(&at, &[], SelectionPolicy::Midpoint).unwrap(),
            vec![0.5, 0.5]
        );
        let set = g.conservative_set(&at, &[]).unwrap();
        // segment between (1,0) and (0,1)
        assert!(set.contains(&[0.5, 0.5], 1e-12));
        assert!(set.contains(&[1.0, 0.0], 1e-12));
        assert!(!set.contains(&[0.0, 0.0], 1e-9));
    }
}
