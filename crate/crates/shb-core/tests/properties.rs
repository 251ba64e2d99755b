//! Property tests for the structural invariants of sets, schedules, and
//! graph selections.

use proptest::prelude::*;

use shb_core::graph::{GraphBuilder, SelectionPolicy};
use shb_core::schedule::StepSchedule;
use shb_core::set::ConvexSet;

fn point2(range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, 2)
}

fn point3(range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, 3)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hull_contains_every_input_point(pts in prop::collection::vec(point2(10.0), 1..20)) {
        let set = ConvexSet::from_points(2, pts.clone()).unwrap();
        for p in &pts {
            prop_assert!(set.contains(p, 1e-9), "{p:?} escaped its own hull");
        }
    }

    #[test]
    fn minkowski_sum_contains_pairwise_sums(
        a in prop::collection::vec(point2(5.0), 1..8),
        b in prop::collection::vec(point2(5.0), 1..8),
        ia in 0usize..8,
        ib in 0usize..8,
    ) {
        let sa = ConvexSet::from_points(2, a.clone()).unwrap();
        let sb = ConvexSet::from_points(2, b.clone()).unwrap();
        let sum = sa.minkowski(&sb).unwrap();
        let pa = &a[ia % a.len()];
        let pb = &b[ib % b.len()];
        let s = vec![pa[0] + pb[0], pa[1] + pb[1]];
        prop_assert!(sum.contains(&s, 1e-9));
    }

    #[test]
    fn projection_is_no_farther_than_any_vertex(
        pts in prop::collection::vec(point2(5.0), 1..12),
        q in point2(8.0),
    ) {
        let set = ConvexSet::from_points(2, pts.clone()).unwrap();
        let d = set.distance_to(&q);
        for p in &pts {
            let dp = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            prop_assert!(d <= dp + 1e-9);
        }
    }

    #[test]
    fn cloud_projection_is_certified_optimal(
        pts in prop::collection::vec(point3(4.0), 1..16),
        q in point3(6.0),
    ) {
        // duality certificate: for the separating direction d = q - x*,
        // every distance is at least (<d, q> - max_p <d, p>) / |d|, and
        // the projection achieves it up to tolerance
        let set = ConvexSet::from_points(3, pts.clone()).unwrap();
        let x = set.project(&q);
        let upper = norm(&q.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<f64>>());
        let d: Vec<f64> = q.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dn = norm(&d);
        if dn > 1e-12 {
            let support = pts
                .iter()
                .map(|p| p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let qd: f64 = q.iter().zip(&d).map(|(a, b)| a * b).sum();
            let lower = (qd - support) / dn;
            prop_assert!(upper - lower <= 1e-9, "gap {} vs {}", upper, lower);
        }
        // every input point stays inside the cloud's hull
        for p in &pts {
            prop_assert!(set.contains(p, 1e-9));
        }
    }

    #[test]
    fn admissible_schedules_keep_beta_in_range(
        a in 0.01f64..10.0,
        gamma in 0.5001f64..=1.0,
        r in 0.01f64..10.0,
        k in 0usize..100_000,
    ) {
        let s = StepSchedule::power(a, gamma, r).unwrap();
        let beta = s.beta(k);
        prop_assert!(beta > 0.0 && beta < 1.0);
        prop_assert!(s.alpha(k) > 0.0);
        // once unclamped the ratio is pinned to r
        if s.alpha(k) / r < 1.0 - 1e-9 {
            prop_assert!((s.alpha(k) / s.beta(k) - r).abs() <= 1e-6 * r);
        }
    }

    #[test]
    fn second_order_coefficients_invert_the_pair_form(
        a in 0.01f64..5.0,
        gamma in 0.5001f64..=1.0,
        r in 0.01f64..5.0,
        k in 1usize..1000,
    ) {
        let s = StepSchedule::power(a, gamma, r).unwrap();
        let (mu, nu) = s.second_order(k).unwrap();
        let beta_prev = s.beta(k - 1);
        prop_assert!((mu - s.alpha(k) * beta_prev).abs() <= 1e-15 * (1.0 + mu));
        prop_assert!((nu - s.alpha(k) * (1.0 - beta_prev) / s.alpha(k - 1)).abs() <= 1e-15 * (1.0 + nu));
    }

    #[test]
    fn kink_selections_stay_between_one_sided_derivatives(x in -2.0f64..2.0) {
        // |w - x| has its kink at x; every policy's selection lies in the
        // Clarke interval of the kink
        let mut b = GraphBuilder::new(1, 1);
        let w = b.input(0);
        let s = b.sample(0);
        let d = b.sub(w, s);
        let out = b.abs(d);
        let g = b.finish(out).unwrap();
        for policy in SelectionPolicy::ALL {
            let v = g.backprop_select(&[x], &[x], policy).unwrap()[0];
            prop_assert!((-1.0..=1.0).contains(&v));
        }
        let set = g.conservative_set(&[x], &[x]).unwrap();
        prop_assert_eq!(set, ConvexSet::Interval { lo: -1.0, hi: 1.0 });
    }

    #[test]
    fn eval_and_backprop_are_pure(w in -3.0f64..3.0, s in -3.0f64..3.0) {
        let mut b = GraphBuilder::new(1, 1);
        let wi = b.input(0);
        let si = b.sample(0);
        let d = b.sub(wi, si);
        let sq = b.square(d);
        let ab = b.abs(d);
        let out = b.add(sq, ab);
        let g = b.finish(out).unwrap();
        let f1 = g.eval(&[w], &[s]).unwrap();
        let f2 = g.eval(&[w], &[s]).unwrap();
        prop_assert_eq!(f1, f2);
        let v1 = g.backprop_select(&[w], &[s], SelectionPolicy::Zero).unwrap();
        let v2 = g.backprop_select(&[w], &[s], SelectionPolicy::Zero).unwrap();
        prop_assert_eq!(v1, v2);
    }
}
