//! Compact convex sets in dimension 1 to 3: values of per-sample
//! conservative gradients, their expectations, and analytic Clarke
//! subdifferentials.
//!
//! 1D sets are intervals, 2D sets are hull-normalized counterclockwise
//! polygons, 3D sets are vertex clouds (their convex hull is implied; the
//! `hull` flag records whether the list is known to be redundancy-free).

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{cst, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet<F: Scalar> {
    Interval { lo: F, hi: F },
    Polygon { vertices: Vec<[F; 2]> },
    Cloud { points: Vec<Vec<F>>, hull: bool },
}

/// Hard cap on 3D vertex clouds after a Minkowski sum.
const MAX_CLOUD_POINTS: usize = 1000;

impl<F: Scalar> ConvexSet<F> {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Interval { .. } => 1,
            ConvexSet::Polygon { .. } => 2,
            ConvexSet::Cloud { points, .. } => points.first().map_or(3, Vec::len),
        }
    }

    pub fn interval(lo: F, hi: F) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Validation(format!("interval lo {lo} > hi {hi}")));
        }
        Ok(ConvexSet::Interval { lo, hi })
    }

    pub fn singleton(p: &[F]) -> Self {
        match p.len() {
            1 => ConvexSet::Interval { lo: p[0], hi: p[0] },
            2 => ConvexSet::Polygon { vertices: vec![[p[0], p[1]]] },
            _ => ConvexSet::Cloud { points: vec![p.to_vec()], hull: true },
        }
    }

    /// Convex hull of a finite nonempty point set in dimension `dim`.
    pub fn from_points(dim: usize, points: Vec<Vec<F>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("convex set from no points".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::Validation(format!(
                    "point of dim {} in set of dim {dim}",
                    p.len()
                )));
            }
        }
        match dim {
            1 => {
                let mut lo = points[0][0];
                let mut hi = lo;
                for p in &points[1..] {
                    lo = lo.min(p[0]);
                    hi = hi.max(p[0]);
                }
                Ok(ConvexSet::Interval { lo, hi })
            }
            2 => {
                let pts: Vec<[F; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
                Ok(ConvexSet::Polygon { vertices: hull_2d(pts) })
            }
            3 => {
                let points = dedupe(points);
                if points.len() > MAX_CLOUD_POINTS {
                    return Err(Error::Capability(format!(
                        "3D set with {} points exceeds the {MAX_CLOUD_POINTS}-point limit",
                        points.len()
                    )));
                }
                Ok(ConvexSet::Cloud { points, hull: false })
            }
            d => Err(Error::Capability(format!("convex sets limited to dim <= 3, got {d}"))),
        }
    }

    /// All extreme-point candidates as plain vectors.
    pub fn points(&self) -> Vec<Vec<F>> {
        match self {
            ConvexSet::Interval { lo, hi } => {
                if lo == hi {
                    vec![vec![*lo]]
                } else {
                    vec![vec![*lo], vec![*hi]]
                }
            }
            ConvexSet::Polygon { vertices } => vertices.iter().map(|v| v.to_vec()).collect(),
            ConvexSet::Cloud { points, .. } => points.clone(),
        }
    }

    /// Image under `x -> c x`.
    pub fn scale(&self, c: F) -> Self {
        match self {
            ConvexSet::Interval { lo, hi } => {
                let (a, b) = (*lo * c, *hi * c);
                ConvexSet::Interval { lo: a.min(b), hi: a.max(b) }
            }
            ConvexSet::Polygon { vertices } => {
                let pts = vertices.iter().map(|v| vec![v[0] * c, v[1] * c]).collect();
                ConvexSet::from_points(2, pts).expect("scaled polygon")
            }
            ConvexSet::Cloud { points, .. } => ConvexSet::Cloud {
                points: points.iter().map(|p| linalg::scale(p, c)).collect(),
                hull: false,
            },
        }
    }

    /// Minkowski sum, hull-normalized (all-pairs vertex sums).
    pub fn minkowski(&self, other: &Self) -> Result<Self> {
        let d = self.dim();
        if d != other.dim() {
            return Err(Error::Validation(format!(
                "minkowski sum of dims {d} and {}",
                other.dim()
            )));
        }
        if let (ConvexSet::Interval { lo: a, hi: b }, ConvexSet::Interval { lo: c, hi: e }) =
            (self, other)
        {
            return Ok(ConvexSet::Interval { lo: *a + *c, hi: *b + *e });
        }
        let mut sums = Vec::new();
        for p in self.points() {
            for q in other.points() {
                sums.push(linalg::add(&p, &q));
            }
        }
        ConvexSet::from_points(d, sums)
    }

    /// Euclidean distance from `q` to the set.
    pub fn distance_to(&self, q: &[F]) -> F {
        linalg::dist(&self.project(q), q)
    }

    /// Nearest point of the set to `q`; returns `q` itself (bitwise) when
    /// `q` lies inside, so projections of members are exact.
    pub fn project(&self, q: &[F]) -> Vec<F> {
        match self {
            ConvexSet::Interval { lo, hi } => {
                let x = q[0];
                vec![if x < *lo {
                    *lo
                } else if x > *hi {
                    *hi
                } else {
                    x
                }]
            }
            ConvexSet::Polygon { vertices } => project_polygon(vertices, q),
            ConvexSet::Cloud { points, .. } => {
                let shifted: Vec<Vec<F>> = points.iter().map(|p| linalg::sub(p, q)).collect();
                let x = wolfe_min_norm(&shifted);
                // Snap membership to exactness.
                if linalg::norm(&x) <= cst(1e-12) {
                    q.to_vec()
                } else {
                    linalg::add(&x, q)
                }
            }
        }
    }

    pub fn contains(&self, q: &[F], tol: F) -> bool {
        self.distance_to(q) <= tol
    }
}

fn dedupe<F: Scalar>(mut pts: Vec<Vec<F>>) -> Vec<Vec<F>> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    pts
}

fn cross<F: Scalar>(o: &[F; 2], a: &[F; 2], b: &[F; 2]) -> F {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew monotone chain; strictly convex output in ccw order.
/// Degenerate inputs collapse to one point or a two-point segment.
fn hull_2d<F: Scalar>(mut pts: Vec<[F; 2]>) -> Vec<[F; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<[F; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], &p) <= F::zero()
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[F; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], &p) <= F::zero()
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.is_empty() {
        // fully collinear input: keep the extreme endpoints
        return vec![pts[0], pts[pts.len() - 1]];
    }
    lower
}

fn project_segment<F: Scalar>(a: &[F], b: &[F], q: &[F]) -> Vec<F> {
    let ab = linalg::sub(b, a);
    let denom = linalg::dot(&ab, &ab);
    if denom == F::zero() {
        return a.to_vec();
    }
    let t = (linalg::dot(&linalg::sub(q, a), &ab) / denom).max(F::zero()).min(F::one());
    linalg::axpy(a, t, &ab)
}

fn project_polygon<F: Scalar>(vertices: &[[F; 2]], q: &[F]) -> Vec<F> {
    match vertices.len() {
        0 => panic!("empty polygon"),
        1 => vertices[0].to_vec(),
        2 => project_segment(&vertices[0], &vertices[1], q),
        n => {
            let qp = [q[0], q[1]];
            let inside = (0..n).all(|i| {
                let a = &vertices[i];
                let b = &vertices[(i + 1) % n];
                cross(a, b, &qp) >= F::zero()
            });
            if inside {
                return q.to_vec();
            }
            let mut best: Option<(F, Vec<F>)> = None;
            for i in 0..n {
                let p = project_segment(&vertices[i], &vertices[(i + 1) % n], q);
                let d = linalg::dist(&p, q);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, p));
                }
            }
            best.expect("nonempty polygon").1
        }
    }
}

/// Wolfe's minimum-norm-point algorithm over conv(points).
/// Finite active-set method; the affine subproblem is a tiny KKT solve.
fn wolfe_min_norm<F: Scalar>(points: &[Vec<F>]) -> Vec<F> {
    let dim = points[0].len();
    let tol = cst::<F>(1e-14);
    // start from the shortest point
    let mut active: Vec<usize> = vec![argmin_norm(points)];
    let mut lambda: Vec<F> = vec![F::one()];
    let mut x = points[active[0]].clone();
    for _ in 0..200 {
        // optimality: min_j <x, p_j> >= <x, x> - tol
        let xx = linalg::dot(&x, &x);
        let scale = F::one() + xx;
        let (j, best) = points
            .iter()
            .enumerate()
            .map(|(j, p)| (j, linalg::dot(&x, p)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
            .expect("nonempty");
        if best >= xx - tol * scale || active.contains(&j) {
            return x;
        }
        active.push(j);
        lambda.push(F::zero());
        // minor cycle: restore a relative-interior representation
        for _ in 0..200 {
            match affine_min_norm(points, &active) {
                None => return x,
                Some(mu) => {
                    if mu.iter().all(|&m| m > tol) {
                        lambda = mu;
                        x = combine(points, &active, &lambda);
                        break;
                    }
                    // step toward mu until the first coefficient hits zero
                    let mut theta = F::one();
                    for (l, m) in lambda.iter().zip(&mu) {
                        if *m <= tol {
                            let denom = *l - *m;
                            if denom > F::zero() {
                                theta = theta.min(*l / denom);
                            }
                        }
                    }
                    lambda = lambda
                        .iter()
                        .zip(&mu)
                        .map(|(l, m)| *l + theta * (*m - *l))
                        .collect();
                    // drop zeroed points
                    let keep: Vec<bool> = lambda.iter().map(|&l| l > tol).collect();
                    if keep.iter().all(|&k| k) {
                        x = combine(points, &active, &lambda);
                        break;
                    }
                    active = active
                        .iter()
                        .zip(&keep)
                        .filter_map(|(a, &k)| k.then_some(*a))
                        .collect();
                    lambda = lambda.into_iter().zip(keep).filter_map(|(l, k)| k.then_some(l)).collect();
                    let total = lambda.iter().fold(F::zero(), |s, &l| s + l);
                    for l in &mut lambda {
                        *l = *l / total;
                    }
                    x = combine(points, &active, &lambda);
                }
            }
        }
        let _ = dim;
    }
    x
}

fn argmin_norm<F: Scalar>(points: &[Vec<F>]) -> usize {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, linalg::dot(p, p)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
        .expect("nonempty")
        .0
}

fn combine<F: Scalar>(points: &[Vec<F>], active: &[usize], lambda: &[F]) -> Vec<F> {
    let dim = points[0].len();
    let mut x = vec![F::zero(); dim];
    for (&i, &l) in active.iter().zip(lambda) {
        for (xk, pk) in x.iter_mut().zip(&points[i]) {
            *xk = *xk + l * *pk;
        }
    }
    x
}

/// min ||sum mu_i p_i||^2 subject to sum mu_i = 1 over the active set,
/// via the bordered normal equations. Returns None on a singular system.
fn affine_min_norm<F: Scalar>(points: &[Vec<F>], active: &[usize]) -> Option<Vec<F>> {
    let m = active.len();
    let n = m + 1;
    // unknowns: [alpha, mu_1..mu_m]
    let mut a = vec![vec![F::zero(); n + 1]; n];
    a[0][0] = F::zero();
    for j in 0..m {
        a[0][j + 1] = F::one();
        a[j + 1][0] = F::one();
    }
    a[0][n] = F::one();
    for i in 0..m {
        for j in 0..m {
            a[i + 1][j + 1] = linalg::dot(&points[active[i]], &points[active[j]]);
        }
        a[i + 1][n] = F::zero();
    }
    gaussian_solve(&mut a).map(|sol| sol[1..].to_vec())
}

fn gaussian_solve<F: Scalar>(a: &mut [Vec<F>]) -> Option<Vec<F>> {
    let n = a.len();
    for col in 0..n {
        let (pivot, mag) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
            .expect("rows");
        if mag < cst(1e-13) {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (slot, pv) in row[col..=n].iter_mut().zip(&pivot_row[col..=n]) {
                    *slot = *slot - f * *pv;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}
