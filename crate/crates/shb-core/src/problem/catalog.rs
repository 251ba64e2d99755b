//! Built-in benchmark problems. Each exercises a distinct ingredient:
//! an isolated kink (`abs1d`), a flat critical plateau under sampling
//! noise (`flat1d`), an artificial critical point of the compositional
//! calculus (`artifact1d`), coordinate coupling (`ell1`), a curved ridge
//! (`ridge2d`), and a small piecewise-linear regression (`toyrelu`).
//!
//! Documented Clarke critical sets (see `ClarkeOracle::critical_set_contains`):
//! abs1d {0}; flat1d [-1, 1]; artifact1d {-2}; ell1 [-1,1]^2;
//! ridge2d {(-1, -1)}; toyrelu has no analytic oracle.

use super::{ClarkeOracle, Distribution, StochasticProblem};
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, GrowthBound};
use crate::linalg;
use crate::rng::{split_rng, uniform};
use crate::scalar::{cst, Scalar};

pub const NAMES: [&str; 6] = ["abs1d", "flat1d", "artifact1d", "ell1", "ridge2d", "toyrelu"];

pub fn by_name<F: Scalar>(name: &str) -> Result<StochasticProblem<F>> {
    match name {
        "abs1d" => abs1d(),
        "flat1d" => flat1d(),
        "artifact1d" => artifact1d(),
        "ell1" => ell1(),
        "ridge2d" => ridge2d(),
        "toyrelu" => toyrelu(2, 6, 7),
        other => Err(Error::Validation(format!(
            "unknown catalog problem {other:?}; known: {NAMES:?}"
        ))),
    }
}

/// Default experiment initialization `(w_0, y_0)` per catalog problem.
pub fn default_init<F: Scalar>(name: &str) -> Option<(Vec<F>, Vec<F>)> {
    let init = |w: &[f64]| {
        let w: Vec<F> = w.iter().map(|&x| cst(x)).collect();
        let y = vec![F::zero(); w.len()];
        (w, y)
    };
    match name {
        "abs1d" | "flat1d" => Some(init(&[5.0])),
        "artifact1d" => Some(init(&[1.5])),
        "ell1" => Some(init(&[3.0, -3.0])),
        "ridge2d" => Some(init(&[2.0, 1.0])),
        "toyrelu" => Some(init(&[1.5, -1.0])),
        _ => None,
    }
}

/// f(w) = |w|. Minimum and unique Clarke critical point at 0.
pub fn abs1d<F: Scalar>() -> Result<StochasticProblem<F>> {
    let mut b = GraphBuilder::new(1, 0);
    let w = b.input(0);
    let out = b.abs(w);
    StochasticProblem::new(
        "abs1d",
        b.finish(out)?,
        Distribution::point_mass(vec![]),
        GrowthBound::new(vec![F::one()], vec![F::one()])?,
        F::zero(),
        Some(ClarkeOracle::Abs1d),
        (vec![cst(-6.0)], vec![cst(6.0)]),
    )
}

/// f(w, s) = |w - s| with P uniform on {-1, +1}; F(w) = max(|w|, 1) is
/// flat on the whole plateau [-1, 1].
pub fn flat1d<F: Scalar>() -> Result<StochasticProblem<F>> {
    let mut b = GraphBuilder::new(1, 1);
    let w = b.input(0);
    let s = b.sample(0);
    let d = b.sub(w, s);
    let out = b.abs(d);
    StochasticProblem::new(
        "flat1d",
        b.finish(out)?,
        Distribution::uniform(vec![vec![-F::one()], vec![F::one()]])?,
        GrowthBound::new(vec![F::one(), F::one()], vec![F::one()])?,
        F::one(),
        Some(ClarkeOracle::Flat1d),
        (vec![cst(-6.0)], vec![cst(6.0)]),
    )
}

/// f(w) = relu(w) - relu(-w) + w^2/4 = w + w^2/4. The function is smooth
/// with its minimum at -2, but the two relu kinks at 0 make the
/// compositional gradient set [0, 2] there: an artificial critical point
/// ( 0 in D_F(0), 0 not in partial^c F(0) = {1} ).
pub fn artifact1d<F: Scalar>() -> Result<StochasticProblem<F>> {
    let mut b = GraphBuilder::new(1, 0);
    let w = b.input(0);
    let r1 = b.relu(w);
    let nw = b.neg(w);
    let r2 = b.relu(nw);
    let lin = b.sub(r1, r2);
    let sq = b.square(w);
    let quarter = b.constant(cst(0.25));
    let curv = b.mul(quarter, sq);
    let out = b.add(lin, curv);
    StochasticProblem::new(
        "artifact1d",
        b.finish(out)?,
        Distribution::point_mass(vec![]),
        GrowthBound::new(vec![F::one()], vec![cst(2.0), cst(0.5)])?,
        -F::one(),
        Some(ClarkeOracle::Artifact1d),
        (vec![cst(-6.0)], vec![cst(6.0)]),
    )
}

/// f(w, s) = |w1 - s1| + |w2 - s2| with P uniform on the four corners
/// {-1, 1}^2; F(w) = max(|w1|, 1) + max(|w2|, 1), flat on [-1, 1]^2.
pub fn ell1<F: Scalar>() -> Result<StochasticProblem<F>> {
    let mut b = GraphBuilder::new(2, 2);
    let w1 = b.input(0);
    let w2 = b.input(1);
    let s1 = b.sample(0);
    let s2 = b.sample(1);
    let d1 = b.sub(w1, s1);
    let a1 = b.abs(d1);
    let d2 = b.sub(w2, s2);
    let a2 = b.abs(d2);
    let out = b.add(a1, a2);
    let one = F::one();
    let support = vec![vec![one, one], vec![one, -one], vec![-one, one], vec![-one, -one]];
    let sqrt2 = cst::<F>(2.0).sqrt();
    StochasticProblem::new(
        "ell1",
        b.finish(out)?,
        Distribution::uniform(support)?,
        GrowthBound::new(vec![sqrt2; 4], vec![F::one()])?,
        cst(2.0),
        Some(ClarkeOracle::Ell1),
        (vec![cst(-4.0); 2], vec![cst(4.0); 2]),
    )
}

/// f(w) = max(w1, w2) + ||w||^2 / 4. Unique Clarke critical point
/// (-1, -1) on the nonsmooth ridge w1 = w2.
pub fn ridge2d<F: Scalar>() -> Result<StochasticProblem<F>> {
    let mut b = GraphBuilder::new(2, 0);
    let w1 = b.input(0);
    let w2 = b.input(1);
    let m = b.max2(w1, w2);
    let sq1 = b.square(w1);
    let sq2 = b.square(w2);
    let ss = b.add(sq1, sq2);
    let quarter = b.constant(cst(0.25));
    let curv = b.mul(quarter, ss);
    let out = b.add(m, curv);
    StochasticProblem::new(
        "ridge2d",
        b.finish(out)?,
        Distribution::point_mass(vec![]),
        GrowthBound::new(vec![F::one()], vec![F::one(), cst(0.5)])?,
        cst(-0.5),
        Some(ClarkeOracle::Ridge2d),
        (vec![cst(-4.0); 2], vec![cst(4.0); 2]),
    )
}

/// p-dimensional least squares over a finite data set:
/// f(w, (a, b)) = (relu(<a, w>) - b)^2, P uniform over `n_samples`
/// generated points. Exact set computations apply only for p <= 3;
/// no analytic Clarke oracle.
pub fn toyrelu<F: Scalar>(p: usize, n_samples: usize, seed: u64) -> Result<StochasticProblem<F>> {
    if p == 0 || n_samples == 0 {
        return Err(Error::Validation("toyrelu needs p >= 1 and n_samples >= 1".into()));
    }
    let mut rng = split_rng(seed, 0);
    // ground-truth weights follow a fixed pattern so data is reproducible
    let target: Vec<F> = (0..p)
        .map(|i| cst::<F>(if i % 2 == 0 { 1.0 } else { -0.5 } / (1 + i / 2) as f64))
        .collect();
    let mut support = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let a: Vec<F> = (0..p).map(|_| uniform(&mut rng, cst(-1.0), cst(1.0))).collect();
        let noise: F = uniform(&mut rng, cst(-0.05), cst(0.05));
        let b = linalg::dot(&a, &target).max(F::zero()) + noise;
        let mut point = a;
        point.push(b);
        support.push(point);
    }
    let kappa: Vec<F> = support
        .iter()
        .map(|s| {
            let a_norm = linalg::norm(&s[..p]);
            let b_abs = s[p].abs();
            cst::<F>(2.0) * a_norm * a_norm.max(b_abs).max(F::one())
        })
        .collect();

    let mut builder = GraphBuilder::new(p, p + 1);
    let mut dot = None;
    for i in 0..p {
        let wi = builder.input(i);
        let ai = builder.sample(i);
        let prod = builder.mul(ai, wi);
        dot = Some(match dot {
            None => prod,
            Some(acc) => builder.add(acc, prod),
        });
    }
    let dot = dot.expect("p >= 1");
    let r = builder.relu(dot);
    let b_node = builder.sample(p);
    let d = builder.sub(r, b_node);
    let out = builder.square(d);

    StochasticProblem::new(
        "toyrelu",
        builder.finish(out)?,
        Distribution::uniform(support)?,
        GrowthBound::new(kappa, vec![F::one(), F::one()])?,
        F::zero(),
        None,
        (vec![cst(-3.0); p], vec![cst(3.0); p]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SelectionPolicy;
    use crate::rng::seed_rng;

    #[test]
    fn all_catalog_problems_build() {
        for name in NAMES {
            let p = by_name::<f64>(name).unwrap();
            assert_eq!(p.name(), name);
            assert!(p.has_nonsmooth_anchors());
        }
    }

    #[test]
    fn flat_objective_values() {
        let p = by_name::<f64>("flat1d").unwrap();
        for (w, expected) in [(0.0, 1.0), (0.7, 1.0), (2.0, 2.0), (-3.0, 3.0)] {
            assert_eq!(p.expected_value(&[w]).unwrap(), expected);
        }
    }

    #[test]
    fn artifact_objective_is_coercive_with_smooth_minimum() {
        let p = by_name::<f64>("artifact1d").unwrap();
        assert_eq!(p.expected_value(&[0.0]).unwrap(), 0.0);
        assert_eq!(p.expected_value(&[-2.0]).unwrap(), -1.0);
        assert_eq!(p.expected_value(&[2.0]).unwrap(), 3.0);
        // gradient away from the anchor
        let v = p.expected_oracle(&[-2.0], SelectionPolicy::Zero).unwrap();
        assert_eq!(v, vec![0.0]);
        // artificial critical point at the anchor under the zero policy
        let v = p.expected_oracle(&[0.0], SelectionPolicy::Zero).unwrap();
        assert_eq!(v, vec![0.0]);
    }

    #[test]
    fn ridge_critical_point() {
        let p = by_name::<f64>("ridge2d").unwrap();
        let (d_gap, c_gap) = p.criticality_gap(&[-1.0, -1.0]).unwrap();
        assert!(d_gap < 1e-12, "gap {d_gap}");
        assert_eq!(c_gap, Some(0.0));
        let (d_gap, _) = p.criticality_gap(&[1.0, 0.0]).unwrap();
        assert!(d_gap > 0.5);
    }

    #[test]
    fn ell1_expected_value_on_plateau() {
        let p = by_name::<f64>("ell1").unwrap();
        assert_eq!(p.expected_value(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(p.expected_value(&[0.5, -0.5]).unwrap(), 2.0);
        assert_eq!(p.expected_value(&[2.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn toyrelu_growth_bound_holds_on_probes() {
        let p = by_name::<f64>("toyrelu").unwrap();
        let mut rng = seed_rng(3);
        let (lo, hi) = p.probe_box();
        for _ in 0..2000 {
            let w = crate::rng::uniform_box(&mut rng, lo, hi);
            let (idx, s) = p.sample(&mut rng);
            let s = s.to_vec();
            let v = p.graph().backprop_select(&w, &s, SelectionPolicy::Zero).unwrap();
            let bound = p.growth().bound(idx, crate::linalg::norm(&w));
            assert!(
                crate::linalg::norm(&v) <= bound + 1e-12,
                "|v| = {} > bound {bound}",
                crate::linalg::norm(&v)
            );
        }
    }

    #[test]
    fn toyrelu_is_reproducible() {
        let a = toyrelu::<f64>(2, 6, 7).unwrap();
        let b = toyrelu::<f64>(2, 6, 7).unwrap();
        assert_eq!(a.distribution().support(), b.distribution().support());
    }
}
