//! A small, self-contained laboratory for the nonsmooth stochastic heavy
//! ball method with conservative-gradient oracles.
//!
//! The crate is organized around the experiment pipeline:
//!
//! - [`graph`]: expression graphs over a frozen semialgebraic primitive
//!   catalog, reverse-mode selection of conservative-gradient elements,
//!   exact per-sample gradient sets by policy enumeration, artifact
//!   injection, and path-integral conservativity checks.
//! - [`set`]: compact convex sets (intervals, polygons, vertex clouds)
//!   with Minkowski sums and exact point projections.
//! - [`problem`]: finitely supported stochastic objectives, exact
//!   expectations and expected gradient sets, analytic Clarke oracles,
//!   and the benchmark catalog.
//! - [`schedule`]: validated step-size schedules.
//! - [`heavyball`]: the recursion in pair form and one-equation form with
//!   full per-step recording.
//! - [`dynamics`]: the interpolated process, Euler integration of the
//!   limiting differential inclusion, energy dissipation, fattened-map
//!   membership, perturbed-solution checks.
//! - [`analysis`]: essential accumulation candidates, criticality reports,
//!   noise-tail convergence, velocity bounds, avoidance statistics.
//!
//! All numerics are generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the shipped `f64` working
//! precision.
//!
//! # Example
//!
//! Run the method on the flat-plateau benchmark and verify that the
//! essential accumulation candidates are critical:
//!
//! ```
//! use shb_core::analysis::{theorem_report, AnalysisParams};
//! use shb_core::graph::SelectionPolicy;
//! use shb_core::heavyball::{run, Form, Init};
//! use shb_core::problem::catalog;
//! use shb_core::schedule::StepSchedule;
//!
//! let problem = catalog::by_name::<f64>("flat1d").unwrap();
//! let schedule = StepSchedule::power(1.0, 0.75, 1.0).unwrap();
//! let init = Init::PositionVelocity { w0: vec![5.0], y0: vec![0.0] };
//! let record = run(&problem, &schedule, &init, SelectionPolicy::Zero, 0, 20_000, Form::A)
//!     .expect("bounded trajectory");
//! let report = theorem_report(&record, &problem, &AnalysisParams::default()).unwrap();
//! assert!(report.essential_criticality && report.objective_converged);
//! ```

// `!(x > 0)` rejects NaN where `x <= 0` would accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod graph;
mod linalg;
pub mod problem;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod set;
pub mod verify;

pub mod heavyball;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Working-precision aliases.
pub type ExprGraph64 = graph::ExprGraph<f64>;
pub type ConvexSet64 = set::ConvexSet<f64>;
pub type Problem64 = problem::StochasticProblem<f64>;
pub type Schedule64 = schedule::StepSchedule<f64>;
pub type RunRecord64 = heavyball::RunRecord<f64>;
pub type Path64 = dynamics::InterpolatedPath<f64>;
pub type DiTrajectory64 = dynamics::DiTrajectory<f64>;
