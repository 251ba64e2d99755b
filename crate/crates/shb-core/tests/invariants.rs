//! Module-level invariants at their stated probe counts, on top of the
//! per-module unit tests: full-scale randomized checks, the expectation
//! variant of the conservativity test, occupation-detector stability, and
//! trajectory shadowing by the limiting inclusion.

use shb_core::analysis::{essential_candidates, occupation, theorem_report, AnalysisParams};
use shb_core::dynamics::{di_euler, interpolate, DiSelector};
use shb_core::graph::{Artifact, GraphBuilder, SelectionPolicy};
use shb_core::heavyball::{run, Form, Init};
use shb_core::problem::{catalog, Distribution, StochasticProblem};
use shb_core::rng::{seed_rng, uniform_box};
use shb_core::schedule::StepSchedule;
use shb_core::verify;
use shb_core::Problem64;

const CATALOG: [&str; 6] = ["abs1d", "flat1d", "artifact1d", "ell1", "ridge2d", "toyrelu"];

fn reference_schedule() -> StepSchedule<f64> {
    StepSchedule::power(1.0, 0.75, 1.0).unwrap()
}

fn catalog_run(name: &str, steps: usize, seed: u64) -> shb_core::RunRecord64 {
    let problem = catalog::by_name::<f64>(name).unwrap();
    let (w0, y0) = catalog::default_init(name).unwrap();
    let init = Init::PositionVelocity { w0, y0 };
    run(&problem, &reference_schedule(), &init, SelectionPolicy::Zero, seed, steps, Form::A)
        .unwrap()
}

#[test]
fn selection_membership_at_stated_scale() {
    for (i, name) in CATALOG.iter().enumerate() {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::selection_membership(&problem, 10_000, 300 + i as u64).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn gradient_consistency_at_stated_scale() {
    for (i, name) in CATALOG.iter().enumerate() {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::gradient_consistency(&problem, 10_000, 400 + i as u64).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn growth_bound_at_stated_scale() {
    for (i, name) in CATALOG.iter().enumerate() {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::growth_bound(&problem, 10_000, 500 + i as u64).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn lower_bound_at_stated_scale() {
    for (i, name) in CATALOG.iter().enumerate() {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::lower_bound_holds(&problem, 100_000, 600 + i as u64).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn clarke_oracle_agreement_at_stated_scale() {
    for (i, name) in CATALOG.iter().enumerate() {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::clarke_oracle_agreement(&problem, 1000, 700 + i as u64).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn clarke_ground_truth_on_the_lattice() {
    for name in CATALOG {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::clarke_ground_truth(&problem, 0.01).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn expectation_conservativity_matches_per_sample_bounds() {
    for (i, name) in CATALOG.iter().enumerate() {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let r = verify::expected_path_integral_conservativity(
            &problem,
            20,
            10,
            10_000,
            1e-2,
            800 + i as u64,
        )
        .unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn martingale_noise_is_centered() {
    for (name, w) in [
        ("flat1d", vec![0.5]),
        ("ell1", vec![0.3, -0.2]),
        ("toyrelu", vec![0.5, 0.5]),
    ] {
        let problem: Problem64 = catalog::by_name(name).unwrap();
        let r = verify::martingale_noise(&problem, &w, 1000, 900).unwrap();
        assert!(r.passed, "{}: {}", r.name, r.detail);
    }
}

#[test]
fn artifact_locality() {
    // conservative_set with an artifact equals the artifact-free set at
    // every probed w different from the anchor
    let build = |artifacts: Vec<Artifact<f64>>| {
        let mut b = GraphBuilder::new(1, 0);
        let w = b.input(0);
        let out = b.abs(w);
        b.finish_with_artifacts(out, artifacts).unwrap()
    };
    let plain = build(vec![]);
    let with_artifact = build(vec![Artifact { anchor: vec![0.25], radius: 1.5 }]);
    let mut rng = seed_rng(17);
    for _ in 0..2000 {
        let w = uniform_box(&mut rng, &[-2.0], &[2.0]);
        if w[0] == 0.25 {
            continue;
        }
        assert_eq!(
            plain.conservative_set(&w, &[]).unwrap(),
            with_artifact.conservative_set(&w, &[]).unwrap()
        );
    }
    // and differs exactly at the anchor
    assert_ne!(
        plain.conservative_set(&[0.25], &[]).unwrap(),
        with_artifact.conservative_set(&[0.25], &[]).unwrap()
    );
}

#[test]
fn essential_candidates_are_accumulation_points() {
    for name in ["abs1d", "flat1d"] {
        let record = catalog_run(name, 30_000, 3);
        let grid = occupation(&record, 0.05, 0.2).unwrap();
        let candidates = essential_candidates(&grid, 0.05).unwrap();
        assert!(!candidates.is_empty());
        let p = record.dim;
        let reach = 0.05 * ((2 * p) as f64).sqrt();
        for (center, _) in candidates {
            let near = record.rows.iter().any(|row| {
                let mut d2 = 0.0;
                for i in 0..p {
                    d2 += (row.w[i] - center[i]).powi(2) + (row.y[i] - center[p + i]).powi(2);
                }
                d2.sqrt() <= reach
            });
            assert!(near, "{name}: candidate {center:?} has no recorded iterate within {reach}");
        }
    }
}

#[test]
fn occupation_detector_is_stable_under_refinement() {
    // halving epsilon never creates a candidate farther than epsilon from
    // a previous one (theta fixed)
    for name in ["abs1d", "flat1d"] {
        for seed in [0u64, 1, 2] {
            let record = catalog_run(name, 30_000, seed);
            let coarse = essential_candidates(&occupation(&record, 0.05, 0.2).unwrap(), 0.05).unwrap();
            let fine = essential_candidates(&occupation(&record, 0.025, 0.2).unwrap(), 0.05).unwrap();
            for (c_fine, _) in &fine {
                let near = coarse.iter().any(|(c0, _)| {
                    c_fine
                        .iter()
                        .zip(c0)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                        <= 0.05
                });
                assert!(near, "{name} seed {seed}: refined candidate {c_fine:?} is isolated");
            }
        }
    }
}

#[test]
fn report_consistency_between_items() {
    // the energy-minimal candidate's verdict never passes while the
    // essential verdict fails on that same point with the same tolerance
    let params = AnalysisParams::default();
    for name in ["abs1d", "flat1d", "artifact1d"] {
        let problem = catalog::by_name::<f64>(name).unwrap();
        let record = catalog_run(name, 30_000, 9);
        let report = theorem_report(&record, &problem, &params).unwrap();
        if let Some(i) = report.energy_min_index {
            let c = &report.candidates[i];
            let point_passes = c.d_gap <= params.gap_tol && c.y_norm <= params.y_tol;
            assert_eq!(report.minimal_criticality, point_passes);
            if report.minimal_criticality && report.candidates.len() == 1 {
                assert!(report.essential_criticality);
            }
        }
    }
}

#[test]
fn interpolated_tail_shadows_the_inclusion() {
    // the interpolated process started at tau_k stays near some inclusion
    // trajectory over windows of length 5, tighter as k grows
    for (name, seed) in [("abs1d", 0u64), ("flat1d", 0)] {
        let problem: Problem64 = catalog::by_name(name).unwrap();
        let record = catalog_run(name, 30_000, seed);
        let path = interpolate(&record).unwrap();
        let mut eps = Vec::new();
        for k in [100usize, 1000, 10_000] {
            let row = &record.rows[k];
            let traj = di_euler(
                &problem,
                (&row.w, &row.y),
                1.0,
                1e-3,
                5.0,
                DiSelector::LeastNorm,
            )
            .unwrap();
            let mut sup: f64 = 0.0;
            for n in 0..traj.len() {
                let t = row.tau + traj.time(n);
                let z = path.eval(t);
                let mut d2 = 0.0;
                for i in 0..problem.dim() {
                    d2 += (z[i] - traj.w[n][i]).powi(2);
                    d2 += (z[problem.dim() + i] - traj.y[n][i]).powi(2);
                }
                sup = sup.max(d2.sqrt());
            }
            eps.push(sup);
        }
        assert!(
            eps[0] >= eps[1] && eps[1] >= eps[2],
            "{name}: shadowing distances not decreasing: {eps:?}"
        );
    }
}

#[test]
fn aumann_membership_in_three_dimensions() {
    // p = 3 exercises the vertex-cloud Minkowski and projection paths;
    // the probe below sits exactly on sample 0's relu kink, so that
    // per-sample set is a segment while the others stay singletons
    let problem = catalog::toyrelu::<f64>(3, 5, 11).unwrap();
    let a0 = &problem.distribution().support()[0];
    let kink_w = vec![a0[1], -a0[0], 0.0];
    assert_eq!(a0[0] * kink_w[0] + a0[1] * kink_w[1] + a0[2] * kink_w[2], 0.0);
    let mut points = vec![kink_w, vec![0.0; 3]];
    let mut rng = seed_rng(33);
    let (lo, hi) = problem.probe_box();
    for _ in 0..200 {
        points.push(uniform_box(&mut rng, lo, hi));
    }
    for w in &points {
        let set = problem.expected_conservative_set(w).unwrap();
        for policy in [
            SelectionPolicy::Left,
            SelectionPolicy::Right,
            SelectionPolicy::Zero,
            SelectionPolicy::Midpoint,
        ] {
            let mean = problem.expected_oracle(w, policy).unwrap();
            let d = set.distance_to(&mean);
            assert!(d <= 1e-9, "distance {d} at {w:?} under {policy:?}");
        }
    }
}

#[test]
fn enumeration_handles_many_simultaneous_kinks() {
    // eight relus of the same input: at 0 each selects 0 or 1, so the
    // enumerated set of the sum is exactly [0, 8]
    let mut b = GraphBuilder::<f64>::new(1, 0);
    let w = b.input(0);
    let mut acc = b.relu(w);
    for _ in 1..8 {
        let r = b.relu(w);
        acc = b.add(acc, r);
    }
    let g = b.finish(acc).unwrap();
    let set = g.conservative_set(&[0.0], &[]).unwrap();
    assert_eq!(set, shb_core::set::ConvexSet::Interval { lo: 0.0, hi: 8.0 });

    // thirteen active kinks exceed the enumeration capability
    let mut b = GraphBuilder::<f64>::new(1, 0);
    let w = b.input(0);
    let mut acc = b.relu(w);
    for _ in 1..13 {
        let r = b.relu(w);
        acc = b.add(acc, r);
    }
    let g = b.finish(acc).unwrap();
    assert!(matches!(
        g.conservative_set(&[0.0], &[]),
        Err(shb_core::Error::Capability(_))
    ));
}

#[test]
fn long_abs_run_converges_to_the_kink() {
    let record = catalog_run("abs1d", 100_000, 13);
    let final_w = record.final_row().w[0].abs();
    assert!(final_w <= 0.1, "final |w| = {final_w}");
    // a converged run parks nearly all of its occupation weight at (0, 0)
    let grid = occupation(&record, 0.05, 0.2).unwrap();
    let origin = grid.weights.get(&vec![0i64, 0]).copied().unwrap_or(0.0);
    assert!(origin >= 0.9, "origin cell weight {origin}");
}

#[test]
fn flat_run_candidates_sit_on_the_plateau() {
    let problem = catalog::by_name::<f64>("flat1d").unwrap();
    let record = catalog_run("flat1d", 100_000, 21);
    let report = theorem_report(&record, &problem, &AnalysisParams::default()).unwrap();
    assert!(!report.candidates.is_empty());
    for c in &report.candidates {
        assert!(c.w[0].abs() <= 1.0 + 1e-12, "candidate off the plateau: {c:?}");
        assert!(c.y[0].abs() <= 0.05, "candidate velocity too large: {c:?}");
        assert!(c.d_gap <= 1e-12);
    }
}

#[test]
fn recorded_noise_is_exactly_oracle_minus_mean() {
    let record = catalog_run("flat1d", 500, 4);
    assert_eq!(record.rows.len(), 501);
    for row in &record.rows {
        for i in 0..record.dim {
            assert_eq!(row.noise[i], row.v[i] - row.v_mean[i]);
        }
        assert!(row.tau >= 0.0);
    }
    // tau is nondecreasing
    for pair in record.rows.windows(2) {
        assert!(pair[0].tau <= pair[1].tau);
    }
}

#[test]
fn single_precision_instantiation_runs() {
    let problem = catalog::by_name::<f32>("flat1d").unwrap();
    let schedule = StepSchedule::<f32>::power(1.0, 0.75, 1.0).unwrap();
    let init = Init::PositionVelocity { w0: vec![2.0f32], y0: vec![0.0] };
    let record =
        run(&problem, &schedule, &init, SelectionPolicy::Zero, 5, 2000, Form::A).unwrap();
    assert_eq!(record.rows.len(), 2001);
    let final_w = record.final_row().w[0];
    assert!(final_w.abs() <= 1.5, "f32 run wandered to {final_w}");
    let set = problem.expected_conservative_set(&[1.0f32]).unwrap();
    assert!(set.contains(&[0.5f32], 1e-6));
}

#[test]
fn divergent_runs_fail_loudly_with_diagnostics() {
    // a quartic objective with an aggressive constant schedule blows up
    let mut b = GraphBuilder::<f64>::new(1, 0);
    let w = b.input(0);
    let sq = b.square(w);
    let out = b.square(sq);
    let problem = StochasticProblem::new(
        "quartic",
        b.finish(out).unwrap(),
        Distribution::point_mass(vec![]),
        shb_core::graph::GrowthBound::new(vec![4.0], vec![0.0, 0.0, 0.0, 1.0]).unwrap(),
        0.0,
        None,
        (vec![-10.0], vec![10.0]),
    )
    .unwrap();
    let schedule = StepSchedule::constant_unchecked(1.0, 1.0);
    let init = Init::PositionVelocity { w0: vec![3.0], y0: vec![0.0] };
    for form in [Form::A, Form::B] {
        match run(&problem, &schedule, &init, SelectionPolicy::Zero, 0, 50, form) {
            Err(shb_core::heavyball::RunFailure::Diverged(d)) => {
                assert!(d.step > 0 && d.step <= 50);
                assert!(!d.record.rows.is_empty());
            }
            other => panic!("expected divergence in form {form}, got {other:?}"),
        }
    }
}
