//! Special functions used throughout the crate.
//!
//! Logarithms follow the clamped convention `log x = ln(max(x, e))`, so both
//! `log` and `loglog` are at least 1 for every positive argument. The normal
//! tail is backed by the correctly-rounded-in-practice `erfc` from `libm`; the
//! supremum-of-|W| tail is the reflection series over odd multiples of the
//! threshold.

use std::f64::consts::{E, LN_2, PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::lab::EmpiricalTail;

/// Hard cap on the number of terms summed by any alternating series here.
pub const MAX_SERIES_TERMS: usize = 1_000_000;

/// Terms below this magnitude are treated as zero.
const ABSOLUTE_TERM_FLOOR: f64 = 1e-300;

/// Beyond this point `ln Q(x)` switches to the continued-fraction form.
const LOG_TAIL_SWITCH: f64 = 30.0;

/// `ln(max(x, e))`, i.e. the natural logarithm clamped below at 1.
pub fn log_e(x: f64) -> Result<f64> {
    ensure(x.is_finite() && x > 0.0, "x", x, "x > 0 and finite")?;
    Ok(clamped_ln(x))
}

/// `log_e(log_e(x))`.
pub fn loglog(x: f64) -> Result<f64> {
    ensure(x.is_finite() && x > 0.0, "x", x, "x > 0 and finite")?;
    Ok(clamped_lnln(x))
}

/// `sqrt(2 x loglog x)`, the iterated-logarithm scale.
pub fn phi(x: f64) -> Result<f64> {
    ensure(x.is_finite() && x > 0.0, "n", x, "n > 0 and finite")?;
    Ok((2.0 * x * clamped_lnln(x)).sqrt())
}

#[inline]
pub(crate) fn clamped_ln(x: f64) -> f64 {
    if x <= E {
        1.0
    } else {
        x.ln()
    }
}

#[inline]
pub(crate) fn clamped_lnln(x: f64) -> f64 {
    clamped_ln(clamped_ln(x))
}

/// `P(N >= x)` for a standard normal `N`.
///
/// Underflows to 0 past `x ≈ 38.5`; `ln_normal_upper_tail` stays finite there.
pub fn normal_upper_tail(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(x / SQRT_2)
}

/// `P(|N| >= x)`; equal to 1 for `x <= 0`.
pub fn abs_normal_tail(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        libm::erfc(x / SQRT_2)
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `ln P(N >= x)`, finite for every finite `x`.
pub fn ln_normal_upper_tail(x: f64) -> f64 {
    if x < LOG_TAIL_SWITCH {
        return if x < 0.0 {
            (-normal_upper_tail(-x)).ln_1p()
        } else {
            normal_upper_tail(x).ln()
        };
    }
    // Mills ratio Q(x)/pdf(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated
    // bottom-up; 40 levels is far past convergence for x >= 30.
    let mut tail = x;
    for k in (1..=40).rev() {
        tail = x + k as f64 / tail;
    }
    -0.5 * x * x - 0.5 * (2.0 * PI).ln() - tail.ln()
}

/// Partial sum `4 Σ_{k=0}^{m} (-1)^k Q((2k+1)x)` of the reflection series.
///
/// Partial sums with even `m` lie above the limit, odd `m` below it.
pub fn sup_wiener_partial_sum(x: f64, m: usize) -> f64 {
    let mut sum = 0.0;
    for k in 0..=m {
        let term = 4.0 * normal_upper_tail((2 * k + 1) as f64 * x);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// `P(sup_{0<=s<=1} |W(s)| >= x)` via the alternating reflection series.
///
/// Summation stops once the next term drops below `tol` times the running
/// sum (or below 1e-300), so the truncation error is at most that term. At
/// `x = 0` the value is 1 by continuity.
pub fn sup_wiener_tail(x: f64, tol: f64) -> Result<f64> {
    ensure(x >= 0.0 && !x.is_nan(), "x", x, "x >= 0")?;
    ensure(tol > 0.0 && tol.is_finite(), "tol", tol, "tol > 0")?;
    Ok(sup_wiener_tail_unchecked(x, tol))
}

pub(crate) fn sup_wiener_tail_unchecked(x: f64, tol: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let mut sum = 4.0 * normal_upper_tail(x);
    let mut previous = sum;
    for k in 1..MAX_SERIES_TERMS {
        let term = 4.0 * normal_upper_tail((2 * k + 1) as f64 * x);
        if term < tol * sum.abs() || term < ABSOLUTE_TERM_FLOOR {
            return sum.clamp(0.0, 1.0);
        }
        previous = sum;
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    // Cap reached (x below ~1e-5): the limit lies between the last two
    // partial sums.
    (0.5 * (sum + previous)).clamp(0.0, 1.0)
}

/// `ln P(sup|W| >= x)`, finite for every finite `x`.
pub fn ln_sup_wiener_tail(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < LOG_TAIL_SWITCH {
        sup_wiener_tail_unchecked(x, 1e-16).ln()
    } else {
        // Q(3x)/Q(x) < exp(-4x^2) is far below one ulp here.
        2.0 * LN_2 + ln_normal_upper_tail(x)
    }
}

/// `ln P(|N| >= x)`.
pub fn ln_abs_normal_tail(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        LN_2 + ln_normal_upper_tail(x)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments.
///
/// Integers and half-integers are computed exactly up to the final rounding
/// (`Γ(1/2)` is `sqrt(π)` to the last bit); everything else goes through the
/// g = 7, n = 9 Lanczos approximation, good to roughly 1e-14 relative on
/// (0, 30].
pub fn gamma_fn(z: f64) -> Result<f64> {
    ensure(z > 0.0 && z.is_finite(), "z", z, "z > 0")?;
    Ok(gamma_positive(z))
}

pub(crate) fn gamma_positive(z: f64) -> f64 {
    if let Some(ratio) = half_integer_ratio(z) {
        return ratio * PI.sqrt();
    }
    if z.fract() == 0.0 && z <= 171.0 {
        return (2..z as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    lanczos(z)
}

/// `Γ(z)/sqrt(π)`, exact for half-integers where the ratio is rational.
pub fn gamma_over_sqrt_pi(z: f64) -> Result<f64> {
    ensure(z > 0.0 && z.is_finite(), "z", z, "z > 0")?;
    Ok(half_integer_ratio(z).unwrap_or_else(|| gamma_positive(z) / PI.sqrt()))
}

/// For `z = m + 1/2` returns `Π_{k=1}^{m} (k - 1/2) = Γ(z)/sqrt(π)`.
fn half_integer_ratio(z: f64) -> Option<f64> {
    let shifted = z - 0.5;
    if shifted.fract() != 0.0 || !(0.0..=170.0).contains(&shifted) {
        return None;
    }
    Some((1..=shifted as u64).fold(1.0, |acc, k| acc * (k as f64 - 0.5)))
}

fn lanczos(z: f64) -> f64 {
    if z < 0.5 {
        return PI / ((PI * z).sin() * lanczos(1.0 - z));
    }
    let z = z - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * ((z + 0.5) * t.ln() - t).exp() * series
}

/// `Σ_{k>=0} (-1)^k / (2k+1)^{2b+2}` (the Dirichlet beta function at 2b+2).
///
/// Exponents above 1 are summed directly whenever the bracketing bound
/// reaches `tol` within `MAX_SERIES_TERMS`; otherwise the Cohen–Rodriguez
/// Villegas–Zagier acceleration is used, whose error is at most
/// `2 / (3 + sqrt 8)^n` because the terms are moments of a positive measure.
pub fn alt_power_series(b: f64, tol: f64) -> Result<f64> {
    ensure(b > -1.0 && b.is_finite(), "b", b, "b > -1")?;
    ensure(tol > 0.0 && tol.is_finite(), "tol", tol, "tol > 0")?;
    let exponent = 2.0 * b + 2.0;
    let tol = tol.max(1e-16);
    if exponent > 1.0 {
        // Smallest m with (2m+3)^{-s} <= tol bounds the error of S_m.
        let needed = ((tol.powf(-1.0 / exponent) - 3.0) / 2.0).ceil().max(0.0);
        if needed < MAX_SERIES_TERMS as f64 {
            return Ok(direct_alternating_sum(exponent, needed as usize));
        }
    }
    Ok(accelerated_alternating_sum(exponent, tol))
}

/// Midpoint of the partial sums `S_m` and `S_{m+1}`, summed from the small
/// end so rounding does not swamp the tail.
fn direct_alternating_sum(exponent: f64, m: usize) -> f64 {
    let term = |k: usize| ((2 * k + 1) as f64).powf(-exponent);
    let mut sum = 0.0;
    for k in (0..=m).rev() {
        if k % 2 == 0 {
            sum += term(k);
        } else {
            sum -= term(k);
        }
    }
    let next = term(m + 1);
    if (m + 1) % 2 == 0 {
        sum + 0.5 * next
    } else {
        sum - 0.5 * next
    }
}

fn accelerated_alternating_sum(exponent: f64, tol: f64) -> f64 {
    let rate = 3.0 + 8f64.sqrt();
    let n = ((2.0 / tol).ln() / rate.ln()).ceil().max(1.0) as usize;
    let mut d = rate.powi(n as i32);
    d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut sum = 0.0;
    for k in 0..n {
        c = b - c;
        sum += c * ((2 * k + 1) as f64).powf(-exponent);
        let kf = k as f64;
        let nf = n as f64;
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    sum / d
}

/// Which functional of the walk a tail probability refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Running maximum `M_n = max_{k<=n} |S_k|`.
    Max,
    /// Terminal absolute value `|S_n|`.
    Abs,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::Max => "max",
            Statistic::Abs => "abs",
        })
    }
}

/// A tail-probability function `x ↦ P(Z >= x)` on the standardized scale.
#[derive(Debug, Clone)]
pub enum TailModel {
    /// `Z = |N|`.
    AbsNormal,
    /// `Z = sup_{0<=s<=1} |W(s)|`.
    SupWiener,
    /// Simulated standardized statistics on an n-grid.
    Empirical(Arc<EmpiricalTail>),
}

impl TailModel {
    pub fn name(&self) -> &'static str {
        match self {
            TailModel::AbsNormal => "abs-normal",
            TailModel::SupWiener => "sup-wiener",
            TailModel::Empirical(_) => "empirical",
        }
    }

    pub fn statistic(&self) -> Statistic {
        match self {
            TailModel::AbsNormal => Statistic::Abs,
            TailModel::SupWiener => Statistic::Max,
            TailModel::Empirical(table) => table.statistic(),
        }
    }

    /// The analytic model matching a statistic.
    pub fn analytic_for(statistic: Statistic) -> Self {
        match statistic {
            Statistic::Abs => TailModel::AbsNormal,
            Statistic::Max => TailModel::SupWiener,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self, TailModel::Empirical(_))
    }

    /// Tail probability at standardized threshold `x` for walk length `n`.
    /// Analytic models ignore `n`.
    pub fn tail(&self, n: u64, x: f64) -> f64 {
        match self {
            TailModel::AbsNormal => abs_normal_tail(x),
            TailModel::SupWiener => {
                if x <= 0.0 {
                    1.0
                } else {
                    sup_wiener_tail_unchecked(x, 1e-15)
                }
            }
            TailModel::Empirical(table) => table.tail(n, x),
        }
    }

    /// `ln tail(x)` for the analytic models, finite far beyond underflow.
    pub(crate) fn ln_tail(&self, x: f64) -> Option<f64> {
        match self {
            TailModel::AbsNormal => Some(ln_abs_normal_tail(x)),
            TailModel::SupWiener => Some(ln_sup_wiener_tail(x)),
            TailModel::Empirical(_) => None,
        }
    }

    /// Constant `C` with `tail(x) <= C·Q(x)` for all `x > 0`.
    pub(crate) fn normal_envelope(&self) -> Option<f64> {
        match self {
            TailModel::AbsNormal => Some(2.0),
            TailModel::SupWiener => Some(4.0),
            TailModel::Empirical(_) => None,
        }
    }

    /// Threshold beyond which the model's tail vanishes identically.
    pub fn support_bound(&self) -> Option<f64> {
        match self {
            TailModel::Empirical(table) => Some(table.support_bound()),
            _ => None,
        }
    }
}
