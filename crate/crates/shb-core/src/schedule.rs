//! Step-size schedules for the two-timescale recursion: the descent
//! sequence `alpha_k` and the memory sequence `beta_k` with
//! `alpha_k / beta_k -> r` (exponential memory).

use crate::error::{Error, Result};
use crate::scalar::{cst, Scalar};

/// Validated step-size schedule.
///
/// `power`: `alpha_k = a (k+1)^(-gamma)`, `beta_k = min(alpha_k / r, beta_max)`
/// with `beta_max` just below one, so early large `alpha_k` never pushes
/// `beta_k` out of (0, 1); the clamp triggers for finitely many k only, so
/// the ratio still converges to `r`.
///
/// `constant-ratio-power`: same `alpha_k`, but `beta_k = alpha_k / r`
/// exactly, which requires `a < r` up front.
///
/// `constant`: fixed `(alpha, beta)` for unit tests; admissibility is
/// deliberately not enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule<F: Scalar> {
    Power { a: F, gamma: F, r: F },
    ConstantRatioPower { a: F, gamma: F, r: F },
    Constant { alpha: F, beta: F },
}

fn validate_common<F: Scalar>(a: F, gamma: F, r: F) -> Result<()> {
    if !(a > F::zero()) {
        return Err(Error::Schedule {
            clause: format!("stepsize positivity requires a > 0 (alpha_k > 0), got a = {a}"),
        });
    }
    if !(gamma > cst(0.5)) {
        return Err(Error::Schedule {
            clause: format!(
                "square summability requires gamma > 1/2 (sum alpha_k^2 < infinity), got gamma = {gamma}"
            ),
        });
    }
    if !(gamma <= F::one()) {
        return Err(Error::Schedule {
            clause: format!(
                "divergence of the step sum requires gamma <= 1 (sum alpha_k = infinity), got gamma = {gamma}"
            ),
        });
    }
    if !(r > F::zero()) {
        return Err(Error::Schedule {
            clause: format!("memory ratio requires r > 0 (alpha_k/beta_k -> r), got r = {r}"),
        });
    }
    Ok(())
}

/// Largest admissible beta: `1 - 1e-9` in the working precision, nudged
/// below one when the precision cannot represent it.
fn beta_max<F: Scalar>() -> F {
    let clamp = F::one() - cst::<F>(1e-9);
    let below_one = F::one() - F::epsilon() * cst::<F>(0.5);
    clamp.min(below_one)
}

impl<F: Scalar> StepSchedule<F> {
    pub fn power(a: F, gamma: F, r: F) -> Result<Self> {
        validate_common(a, gamma, r)?;
        Ok(StepSchedule::Power { a, gamma, r })
    }

    pub fn constant_ratio_power(a: F, gamma: F, r: F) -> Result<Self> {
        validate_common(a, gamma, r)?;
        if !(a / r < F::one()) {
            return Err(Error::Schedule {
                clause: format!(
                    "beta_k in (0,1) requires a < r for the constant-ratio family, got a = {a}, r = {r}"
                ),
            });
        }
        Ok(StepSchedule::ConstantRatioPower { a, gamma, r })
    }

    /// Fixed test schedule; validation bypassed.
    pub fn constant_unchecked(alpha: F, beta: F) -> Self {
        StepSchedule::Constant { alpha, beta }
    }

    pub fn alpha(&self, k: usize) -> F {
        match *self {
            StepSchedule::Power { a, gamma, .. }
            | StepSchedule::ConstantRatioPower { a, gamma, .. } => {
                a * cst::<F>((k + 1) as f64).powf(-gamma)
            }
            StepSchedule::Constant { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self, k: usize) -> F {
        match *self {
            StepSchedule::Power { r, .. } => (self.alpha(k) / r).min(beta_max()),
            StepSchedule::ConstantRatioPower { r, .. } => self.alpha(k) / r,
            StepSchedule::Constant { beta, .. } => beta,
        }
    }

    /// The memory ratio `r` the schedule converges to.
    pub fn ratio(&self) -> F {
        match *self {
            StepSchedule::Power { r, .. } | StepSchedule::ConstantRatioPower { r, .. } => r,
            StepSchedule::Constant { alpha, beta } => alpha / beta,
        }
    }

    /// Second-order coefficients `(mu_k, nu_k)` of the one-equation form:
    /// `mu_k = alpha_k beta_(k-1)`, `nu_k = alpha_k (1 - beta_(k-1)) / alpha_(k-1)`.
    /// Undefined at k = 0: the one-equation form starts from `(w_1, w_0)`.
    pub fn second_order(&self, k: usize) -> Result<(F, F)> {
        if k == 0 {
            return Err(Error::Index(
                "second-order coefficients (mu_0, nu_0) are undefined; the pair form starts at k = 1"
                    .into(),
            ));
        }
        let alpha_k = self.alpha(k);
        let beta_prev = self.beta(k - 1);
        let mu = alpha_k * beta_prev;
        let nu = alpha_k * (F::one() - beta_prev) / self.alpha(k - 1);
        Ok((mu, nu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_schedule_first_step() {
        let s = StepSchedule::<f64>::power(1.0, 0.75, 1.0).unwrap();
        assert_eq!(s.alpha(0), 1.0);
        assert_eq!(s.beta(0), 1.0 - 1e-9);
    }

    #[test]
    fn power_schedule_tenth_step() {
        let s = StepSchedule::<f64>::power(0.1, 0.6, 2.0).unwrap();
        let a9 = 0.1 * 10f64.powf(-0.6);
        assert!((s.alpha(9) - a9).abs() < 1e-15);
        assert!((s.alpha(9) - 0.02512).abs() < 1e-5);
        assert_eq!(s.beta(9), s.alpha(9) / 2.0);
    }

    #[test]
    fn gamma_below_half_cites_square_summability() {
        let err = StepSchedule::<f64>::power(1.0, 0.4, 1.0).unwrap_err();
        match err {
            Error::Schedule { clause } => assert!(clause.contains("square summability"), "{clause}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gamma_above_one_cites_divergence() {
        let err = StepSchedule::<f64>::power(1.0, 1.5, 1.0).unwrap_err();
        match err {
            Error::Schedule { clause } => assert!(clause.contains("divergence"), "{clause}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn invalid_a_and_r_are_rejected() {
        assert!(StepSchedule::<f64>::power(0.0, 0.75, 1.0).is_err());
        assert!(StepSchedule::<f64>::power(1.0, 0.75, 0.0).is_err());
        assert!(StepSchedule::<f64>::constant_ratio_power(2.0, 0.75, 1.0).is_err());
    }

    #[test]
    fn second_order_constant_schedule() {
        let s = StepSchedule::<f64>::constant_unchecked(0.1, 0.5);
        let (mu, nu) = s.second_order(3).unwrap();
        assert!((mu - 0.05).abs() < 1e-15);
        assert!((nu - 0.5).abs() < 1e-15);
    }

    #[test]
    fn beta_one_turns_momentum_off() {
        let s = StepSchedule::constant_unchecked(0.1, 1.0);
        let (mu, nu) = s.second_order(1).unwrap();
        assert_eq!(mu, 0.1);
        assert_eq!(nu, 0.0);
    }

    #[test]
    fn second_order_power_first_step() {
        let s = StepSchedule::<f64>::power(1.0, 0.75, 1.0).unwrap();
        let (mu, nu) = s.second_order(1).unwrap();
        let a1 = 2f64.powf(-0.75);
        assert!((mu - a1 * (1.0 - 1e-9)).abs() < 1e-12);
        assert!((nu - a1 * 1e-9).abs() < 1e-15);
    }

    #[test]
    fn second_order_at_zero_is_an_index_error() {
        let s = StepSchedule::<f64>::power(1.0, 0.75, 1.0).unwrap();
        assert!(matches!(s.second_order(0), Err(Error::Index(_))));
    }

    #[test]
    fn ratio_is_exact_once_unclamped() {
        let s = StepSchedule::<f64>::power(1.0, 0.75, 1.0).unwrap();
        for k in 1..2000 {
            if s.alpha(k) < 1.0 {
                let ratio = s.alpha(k) / s.beta(k);
                assert!((ratio - 1.0).abs() <= 1e-6, "k={k} ratio={ratio}");
            }
        }
    }

    #[test]
    fn f32_beta_stays_below_one() {
        let s = StepSchedule::<f32>::power(1.0, 0.75, 1.0).unwrap();
        assert!(s.beta(0) < 1.0);
    }
}
