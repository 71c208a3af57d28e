//! Closed-form limits of the normalized weighted tail series.
//!
//! Two weighting regimes are covered:
//!
//! * [`Regime::PowerLog`]: weights `(log n)^a (loglog n)^b / n`, normalizer
//!   `(ε² - a - 1)^{b+1/2}`, critical multiplier `sqrt(1 + a)`. The limit is
//!   `2 sqrt(1/(π(a+1))) exp(-2τ sqrt(1+a)) Γ(b + 1/2)` for the running
//!   maximum and half of that for `|S_n|`.
//! * [`Regime::InverseLog`]: weights `(loglog n)^b / (n log n)`, normalizer
//!   `ε^{2(b+1)}`, critical multiplier 0. The `|S_n|` limit is
//!   `Γ(b + 3/2) / ((b+1) sqrt π)`; the maximum picks up an extra factor
//!   `2 Σ (-1)^k (2k+1)^{-(2b+2)}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytic::{alt_power_series, gamma_over_sqrt_pi, Statistic};
use crate::error::{ensure, Result};

const BETA_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `(log n)^a (loglog n)^b / n` weights, limit taken as ε ↘ sqrt(1+a).
    PowerLog,
    /// `(loglog n)^b / (n log n)` weights, limit taken as ε ↘ 0.
    InverseLog,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::PowerLog => "thm1",
            Regime::InverseLog => "thm2",
        })
    }
}

/// Exponents `(a, b)` of the series weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightExponents {
    pub a: f64,
    pub b: f64,
}

impl WeightExponents {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Checks the exponent ranges required by `regime`. The inverse-log
    /// regime ignores `a`.
    pub fn validate(&self, regime: Regime) -> Result<()> {
        match regime {
            Regime::PowerLog => {
                ensure(self.a > -1.0 && self.a.is_finite(), "a", self.a, "a > -1")?;
                ensure(self.b > -0.5 && self.b.is_finite(), "b", self.b, "b > -1/2")
            }
            Regime::InverseLog => ensure(self.b > -1.0 && self.b.is_finite(), "b", self.b, "b > -1"),
        }
    }

    /// Value of ε at which the normalized series starts to blow up.
    pub fn critical_epsilon(&self, regime: Regime) -> f64 {
        match regime {
            Regime::PowerLog => (1.0 + self.a).sqrt(),
            Regime::InverseLog => 0.0,
        }
    }
}

/// Limit of `a_n(ε) · loglog n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftLimit(pub f64);

/// Limit for the power-log regime.
pub fn power_log_limit(w: WeightExponents, tau: DriftLimit, statistic: Statistic) -> Result<f64> {
    w.validate(Regime::PowerLog)?;
    ensure(tau.0.is_finite(), "tau", tau.0, "tau finite")?;
    let root = (1.0 + w.a).sqrt();
    // Γ(b+1/2)/sqrt(π(a+1)) written so that a = b = τ = 0 gives exactly 1.
    let abs = gamma_over_sqrt_pi(w.b + 0.5)? / root * (-2.0 * tau.0 * root).exp();
    Ok(match statistic {
        Statistic::Abs => abs,
        Statistic::Max => 2.0 * abs,
    })
}

/// Limit for the inverse-log regime.
pub fn inverse_log_limit(b: f64, statistic: Statistic) -> Result<f64> {
    ensure(b > -1.0 && b.is_finite(), "b", b, "b > -1")?;
    let abs = gamma_over_sqrt_pi(b + 1.5)? / (b + 1.0);
    Ok(match statistic {
        Statistic::Abs => abs,
        Statistic::Max => 2.0 * abs * alt_power_series(b, BETA_TOL)?,
    })
}

/// Limit for either regime; `tau` is ignored by the inverse-log regime,
/// whose limit does not depend on the drift.
pub fn limit_constant(regime: Regime, w: WeightExponents, tau: DriftLimit, statistic: Statistic) -> Result<f64> {
    match regime {
        Regime::PowerLog => power_log_limit(w, tau, statistic),
        Regime::InverseLog => inverse_log_limit(w.b, statistic),
    }
}

/// Converts a multiplier `ε'` of the plain scale `sqrt(n loglog n)` into the
/// multiplier `ε` of `σ φ(n) = σ sqrt(2 n loglog n)`: `ε' = ε σ sqrt 2`.
pub fn epsilon_from_plain_scale(eps_plain: f64, sigma: f64) -> Result<f64> {
    ensure(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "sigma > 0")?;
    Ok(eps_plain / (sigma * std::f64::consts::SQRT_2))
}

/// Inverse-log limit when the threshold is `ε' sqrt(n loglog n)` and the
/// normalizer is `ε'^{2(b+1)}`: the constant is multiplied by `(2σ²)^{b+1}`.
/// For `b = 0` and `|S_n|` this is `σ²`.
pub fn inverse_log_limit_plain_scale(b: f64, sigma: f64, statistic: Statistic) -> Result<f64> {
    ensure(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "sigma > 0")?;
    Ok((2.0 * sigma * sigma).powf(b + 1.0) * inverse_log_limit(b, statistic)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::gamma_fn;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_case_is_one() {
        let w = WeightExponents::new(0.0, 0.0);
        assert_eq!(power_log_limit(w, DriftLimit(0.0), Statistic::Abs).unwrap(), 1.0);
        assert_eq!(power_log_limit(w, DriftLimit(0.0), Statistic::Max).unwrap(), 2.0);
    }

    #[test]
    fn shifted_case_matches_direct_evaluation() {
        let w = WeightExponents::new(3.0, 0.5);
        let got = power_log_limit(w, DriftLimit(0.25), Statistic::Abs).unwrap();
        let direct = (1.0 / (4.0 * PI)).sqrt() * (-1f64).exp() * gamma_fn(1.0).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!((got - (-1f64).exp() / (2.0 * PI.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn inverse_log_values() {
        assert_eq!(inverse_log_limit(0.0, Statistic::Abs).unwrap(), 0.5);
        assert_eq!(inverse_log_limit(1.0, Statistic::Abs).unwrap(), 0.375);
        let max = inverse_log_limit(0.0, Statistic::Max).unwrap();
        assert!((max - 0.915_965_594_2).abs() < 1e-9);
    }

    #[test]
    fn plain_scale_conversion() {
        for sigma in [0.5, 1.0, 3.0] {
            let v = inverse_log_limit_plain_scale(0.0, sigma, Statistic::Abs).unwrap();
            assert!((v - sigma * sigma).abs() < 1e-14 * sigma * sigma);
        }
        let eps = epsilon_from_plain_scale(2f64.sqrt() * 3.0 * 0.1, 3.0).unwrap();
        assert!((eps - 0.1).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let bad_a = WeightExponents::new(-1.5, 0.0);
        assert!(power_log_limit(bad_a, DriftLimit(0.0), Statistic::Abs).is_err());
        let bad_b = WeightExponents::new(0.0, -0.5);
        assert!(power_log_limit(bad_b, DriftLimit(0.0), Statistic::Abs).is_err());
        assert!(inverse_log_limit(-1.0, Statistic::Abs).is_err());
        assert!(power_log_limit(WeightExponents::new(0.0, 0.0), DriftLimit(f64::NAN), Statistic::Abs).is_err());
    }

    proptest! {
        #[test]
        fn max_is_twice_abs(a in -0.99f64..5.0, b in -0.49f64..5.0, tau in -2.0f64..2.0) {
            let w = WeightExponents::new(a, b);
            let abs = power_log_limit(w, DriftLimit(tau), Statistic::Abs).unwrap();
            let max = power_log_limit(w, DriftLimit(tau), Statistic::Max).unwrap();
            prop_assert_eq!(max, 2.0 * abs);
        }

        #[test]
        fn drift_reflection(a in -0.99f64..5.0, b in -0.49f64..3.0, tau in 0.0f64..1.5) {
            let w = WeightExponents::new(a, b);
            let plus = power_log_limit(w, DriftLimit(tau), Statistic::Abs).unwrap();
            let minus = power_log_limit(w, DriftLimit(-tau), Statistic::Abs).unwrap();
            let factor = (4.0 * tau * (1.0 + a).sqrt()).exp();
            prop_assert!((minus / plus - factor).abs() <= 1e-12 * factor);
            let bigger = power_log_limit(w, DriftLimit(tau + 0.1), Statistic::Abs).unwrap();
            prop_assert!(bigger < plus);
        }

        #[test]
        fn inverse_log_ratio_is_twice_beta(b in -0.95f64..4.0) {
            let abs = inverse_log_limit(b, Statistic::Abs).unwrap();
            let max = inverse_log_limit(b, Statistic::Max).unwrap();
            let beta = alt_power_series(b, 1e-14).unwrap();
            prop_assert!((max / abs - 2.0 * beta).abs() < 1e-12);
        }
    }
}
