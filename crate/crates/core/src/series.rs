//! Weighted tail-probability series `S(ε) = Σ_{n>=1} w(n) T(x_n(ε))`.
//!
//! The first `splice` terms are summed directly. Past the splice the sum is
//! replaced by the integral over `u = loglog x`, where the integrand becomes
//!
//! ```text
//! power-log:    exp((a+1) u) u^b T(sqrt(2u) (ε + d/u))
//! inverse-log:               u^b T(sqrt(2u) (ε + d/u))
//! ```
//!
//! with `d` the drift coefficient. The integral is cut at `U` where the
//! Gaussian envelope `T(x) <= C Q(x)` bounds the remainder, and the
//! sum-versus-integral gap is bounded by the term at the splice whenever the
//! summand is verified to be decreasing past it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{clamped_ln, clamped_lnln, TailModel};
use crate::constants::{limit_constant, DriftLimit, Regime, WeightExponents};
use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate_pieces, QuadOptions};

pub const DEFAULT_SPLICE: u64 = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-6;

const HEAD_CHUNK: u64 = 1 << 16;
const MONOTONE_SAMPLES: usize = 256;
const MAX_CUTOFF: f64 = 1e9;

/// Threshold perturbation `a_n(ε) = d / loglog n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum DriftSchedule {
    Zero,
    /// `a_n(ε) loglog n = τ` for every n.
    Canonical(f64),
    /// `a_n = c / loglog n`, independent of ε.
    Bounded(f64),
}

impl DriftSchedule {
    pub fn coefficient(&self) -> f64 {
        match *self {
            DriftSchedule::Zero => 0.0,
            DriftSchedule::Canonical(tau) => tau,
            DriftSchedule::Bounded(c) => c,
        }
    }

    pub fn value(&self, n: u64) -> f64 {
        self.coefficient() / clamped_lnln(n as f64)
    }

    /// Limit of `a_n loglog n`.
    pub fn limit(&self) -> DriftLimit {
        DriftLimit(self.coefficient())
    }
}

/// Everything needed to describe one weighted series.
#[derive(Debug, Clone)]
pub struct SeriesSpec {
    pub regime: Regime,
    pub weights: WeightExponents,
    pub drift: DriftSchedule,
    /// Increment standard deviation. Cancels for the analytic models; the
    /// empirical assembly uses it to express thresholds in walk units.
    pub sigma: f64,
    pub model: TailModel,
}

impl SeriesSpec {
    pub fn new(regime: Regime, weights: WeightExponents, model: TailModel) -> Self {
        Self {
            regime,
            weights,
            drift: DriftSchedule::Zero,
            sigma: 1.0,
            model,
        }
    }

    pub fn with_drift(mut self, drift: DriftSchedule) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate(self.regime)?;
        ensure(
            self.sigma > 0.0 && self.sigma.is_finite(),
            "sigma",
            self.sigma,
            "sigma > 0",
        )?;
        let d = self.drift.coefficient();
        ensure(d.is_finite(), "drift", d, "drift coefficient finite")
    }

    pub fn critical_epsilon(&self) -> f64 {
        self.weights.critical_epsilon(self.regime)
    }

    /// Errors unless the series converges at `eps`.
    pub fn check_epsilon(&self, eps: f64) -> Result<()> {
        ensure(eps.is_finite() && eps > 0.0, "epsilon", eps, "epsilon > 0")?;
        let critical = self.critical_epsilon();
        let converges = match self.regime {
            Regime::PowerLog => eps * eps > 1.0 + self.weights.a,
            Regime::InverseLog => eps > 0.0,
        };
        if converges {
            Ok(())
        } else {
            Err(Error::Divergent { epsilon: eps, critical })
        }
    }

    /// Weight of term `n` with clamped logarithms.
    pub fn weight(&self, n: u64) -> f64 {
        weight_at(self.regime, self.weights, n as f64)
    }

    /// Standardized threshold `sqrt(2 loglog n) (ε + a_n)`.
    pub fn threshold(&self, n: u64, eps: f64) -> f64 {
        let l2 = clamped_lnln(n as f64);
        (2.0 * l2).sqrt() * (eps + self.drift.coefficient() / l2)
    }

    /// Threshold in walk units, `σ φ(n) (ε + a_n)`.
    pub fn walk_threshold(&self, n: u64, eps: f64) -> f64 {
        self.sigma * (n as f64).sqrt() * self.threshold(n, eps)
    }

    pub fn term(&self, n: u64, eps: f64) -> f64 {
        self.weight(n) * self.model.tail(n, self.threshold(n, eps))
    }

    /// Normalizing factor in front of the series.
    pub fn normalizer(&self, eps: f64) -> f64 {
        match self.regime {
            Regime::PowerLog => (eps * eps - self.weights.a - 1.0).powf(self.weights.b + 0.5),
            Regime::InverseLog => eps.powf(2.0 * (self.weights.b + 1.0)),
        }
    }

    /// Closed-form limit of the normalized series.
    pub fn limit(&self) -> Result<f64> {
        limit_constant(self.regime, self.weights, self.drift.limit(), self.model.statistic())
    }

    fn growth(&self) -> f64 {
        match self.regime {
            Regime::PowerLog => self.weights.a + 1.0,
            Regime::InverseLog => 0.0,
        }
    }
}

fn weight_at(regime: Regime, w: WeightExponents, x: f64) -> f64 {
    let l1 = clamped_ln(x);
    let l2 = clamped_ln(l1);
    match regime {
        Regime::PowerLog => l1.powf(w.a) * l2.powf(w.b) / x,
        Regime::InverseLog => l2.powf(w.b) / (x * l1),
    }
}

/// Free-function form of [`SeriesSpec::weight`].
pub fn weight(n: u64, spec: &SeriesSpec) -> f64 {
    spec.weight(n)
}

/// One named contribution to an error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorTerm {
    pub source: &'static str,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: f64,
    pub head_terms: u64,
    pub head_sum: f64,
    pub tail_estimate: f64,
    pub error_bound: f64,
    pub breakdown: Vec<ErrorTerm>,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    /// Last index summed directly.
    pub splice: u64,
    /// Relative tolerance on the error bound.
    pub tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            splice: DEFAULT_SPLICE,
            tol: DEFAULT_TOL,
        }
    }
}

/// Evaluates `S(ε)` with the default splice; `tol` bounds `error_bound / value`.
pub fn evaluate_series(spec: &SeriesSpec, eps: f64, tol: f64) -> Result<SeriesResult> {
    evaluate_series_with(
        spec,
        eps,
        &SeriesOptions {
            tol,
            ..SeriesOptions::default()
        },
    )
}

pub fn evaluate_series_with(spec: &SeriesSpec, eps: f64, opts: &SeriesOptions) -> Result<SeriesResult> {
    spec.validate()?;
    spec.check_epsilon(eps)?;
    ensure(opts.tol > 0.0 && opts.tol.is_finite(), "tol", opts.tol, "tol > 0")?;
    ensure(opts.splice >= 16, "splice", opts.splice as f64, "splice >= 16")?;

    let splice = opts.splice;
    let head_sum = head_sum(spec, eps, 1, splice);
    let last = spec.term(splice, eps);

    let (tail, mut breakdown) = if spec.model.is_analytic() {
        let budget = opts.tol * head_sum.max(f64::MIN_POSITIVE);
        let part = tail_integral(spec, eps, splice, last, budget)?;
        (part.estimate, part.breakdown())
    } else {
        empirical_tail_check(spec, eps, splice)?;
        (0.0, Vec::new())
    };

    let value = head_sum + tail;
    let rounding = 4.0 * f64::EPSILON * (head_sum + tail.abs());
    breakdown.push(ErrorTerm {
        source: "rounding",
        bound: rounding,
    });
    let error_bound: f64 = breakdown.iter().map(|t| t.bound).sum();
    if error_bound > opts.tol * value {
        return Err(Error::ToleranceNotMet {
            achieved: error_bound / value.max(f64::MIN_POSITIVE),
            requested: opts.tol,
        });
    }
    Ok(SeriesResult {
        value,
        head_terms: splice,
        head_sum,
        tail_estimate: tail,
        error_bound,
        breakdown,
    })
}

/// `Σ_{n=first}^{last} w(n) T(x_n)`, chunked so the result does not depend on
/// the rayon schedule.
pub fn head_sum(spec: &SeriesSpec, eps: f64, first: u64, last: u64) -> f64 {
    if last < first {
        return 0.0;
    }
    let chunks = (last - first) / HEAD_CHUNK + 1;
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = first + c * HEAD_CHUNK;
            let hi = (lo + HEAD_CHUNK - 1).min(last);
            neumaier((lo..=hi).map(|n| spec.term(n, eps)))
        })
        .collect();
    neumaier(partials.into_iter())
}

/// Exact block weight `Σ_{n=first}^{last} w(n)`.
pub fn weight_sum(spec: &SeriesSpec, first: u64, last: u64) -> f64 {
    if last < first {
        return 0.0;
    }
    neumaier((first..=last).map(|n| spec.weight(n)))
}

fn neumaier<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Estimate of `Σ_{n>splice} w(n) T(x_n)` with its error components.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailPart {
    pub estimate: f64,
    pub quadrature: f64,
    pub cutoff: f64,
    pub sum_vs_integral: f64,
}

impl TailPart {
    pub fn error(&self) -> f64 {
        self.quadrature + self.cutoff + self.sum_vs_integral
    }

    fn breakdown(&self) -> Vec<ErrorTerm> {
        vec![
            ErrorTerm {
                source: "quadrature",
                bound: self.quadrature,
            },
            ErrorTerm {
                source: "cutoff",
                bound: self.cutoff,
            },
            ErrorTerm {
                source: "sum_vs_integral",
                bound: self.sum_vs_integral,
            },
        ]
    }
}

/// Mass of the analytic series strictly beyond `splice`.
pub(crate) fn tail_beyond(spec: &SeriesSpec, eps: f64, splice: u64, budget: f64) -> Result<TailPart> {
    spec.validate()?;
    spec.check_epsilon(eps)?;
    ensure(splice >= 16, "splice", splice as f64, "splice >= 16")?;
    tail_integral(spec, eps, splice, spec.term(splice, eps), budget)
}

fn tail_integral(spec: &SeriesSpec, eps: f64, splice: u64, last_term: f64, budget: f64) -> Result<TailPart> {
    let envelope = spec
        .model
        .normal_envelope()
        .ok_or(Error::UnsupportedModel(spec.model.name()))?;
    let b = spec.weights.b;
    let growth = spec.growth();
    let drift = spec.drift.coefficient();
    let model = &spec.model;
    let ln_g = |u: f64| {
        let x = (2.0 * u).sqrt() * (eps + drift / u);
        let ln_t = model.ln_tail(x).expect("analytic model");
        growth * u + b * u.ln() + ln_t
    };

    let u0 = clamped_lnln(splice as f64);
    let (upper, cutoff) = choose_cutoff(envelope, eps, drift, b - 0.5, eps * eps - growth, u0, budget / 10.0)?;

    let mut breaks = vec![u0];
    let mut edge = u0;
    while edge * 2.0 < upper {
        edge *= 2.0;
        breaks.push(edge);
    }
    breaks.push(upper);
    let opts = QuadOptions {
        abs_tol: budget / 4.0 / breaks.len() as f64,
        rel_tol: 0.0,
        max_intervals: 2000,
    };
    let quad = integrate_pieces(|u| ln_g(u).exp(), &breaks, opts);

    // Sample ln f(x) = ln g(u) - e^u - u along the tail to verify monotonicity.
    let mut previous = last_term.ln();
    let mut peak = last_term;
    let mut monotone = true;
    for j in 1..=MONOTONE_SAMPLES {
        let u = u0 * (upper / u0).powf(j as f64 / MONOTONE_SAMPLES as f64);
        let ln_f = ln_g(u) - u.exp() - u;
        if ln_f > previous {
            monotone = false;
        }
        peak = peak.max(ln_f.exp());
        previous = ln_f;
    }
    let sum_vs_integral = if monotone {
        0.5 * last_term
    } else {
        // Total variation of a summand that rises to `peak` and decays to 0.
        2.0 * peak - 0.5 * last_term
    };

    Ok(TailPart {
        estimate: quad.value - 0.5 * last_term,
        quadrature: quad.error,
        cutoff,
        sum_vs_integral,
    })
}

/// Smallest doubling `U` whose analytic remainder bound is below `target`.
///
/// With `T <= C Q(x)`, `Q(x) <= exp(-x²/2) / (x sqrt(2π))` and
/// `x >= sqrt(2u) ε_low`, the integrand past `U` is at most
/// `C e^{-2εd} / (2 sqrt(π) ε_low) u^s e^{-κu}`.
fn choose_cutoff(envelope: f64, eps: f64, drift: f64, s: f64, kappa: f64, u0: f64, target: f64) -> Result<(f64, f64)> {
    let negative_drift = (-drift).max(0.0);
    let mut upper = (2.0 * u0)
        .max(2.0 * negative_drift / eps)
        .max(2.0 * s.max(0.0) / kappa + 1.0);
    loop {
        let eps_low = eps - negative_drift / upper;
        let rate = kappa - s.max(0.0) / upper;
        let ln_bound = envelope.ln() - 2.0 * eps * drift - (2.0 * std::f64::consts::PI.sqrt() * eps_low).ln()
            + s * upper.ln()
            - kappa * upper
            - rate.ln();
        let bound = ln_bound.exp();
        if bound <= target {
            return Ok((upper, bound));
        }
        if upper > MAX_CUTOFF {
            return Err(Error::ToleranceNotMet {
                achieved: bound,
                requested: target,
            });
        }
        upper *= 2.0;
    }
}

/// Zero-tail check for empirical tables: every threshold past the splice
/// must already sit beyond the table's support.
fn empirical_tail_check(spec: &SeriesSpec, eps: f64, splice: u64) -> Result<()> {
    let support = spec
        .model
        .support_bound()
        .ok_or(Error::UnsupportedModel(spec.model.name()))?;
    let next = splice + 1;
    let increasing = spec.drift.coefficient() <= eps * clamped_lnln(next as f64);
    if increasing && spec.threshold(next, eps) > support {
        Ok(())
    } else {
        Err(Error::UnsupportedModel(spec.model.name()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedValue {
    pub value: f64,
    pub error_bound: f64,
    pub series: SeriesResult,
}

/// Normalizer times `S(ε)`.
pub fn normalized_value(spec: &SeriesSpec, eps: f64, tol: f64) -> Result<NormalizedValue> {
    normalized_value_with(
        spec,
        eps,
        &SeriesOptions {
            tol,
            ..SeriesOptions::default()
        },
    )
}

pub fn normalized_value_with(spec: &SeriesSpec, eps: f64, opts: &SeriesOptions) -> Result<NormalizedValue> {
    let series = evaluate_series_with(spec, eps, opts)?;
    let factor = spec.normalizer(eps);
    Ok(NormalizedValue {
        value: factor * series.value,
        error_bound: factor * series.error_bound,
        series,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub series: f64,
    pub normalized: f64,
    pub limit: f64,
    pub ratio: f64,
    /// Bound on the error of `normalized`.
    pub error_bound: f64,
    pub failure: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Normalized series along a grid approaching the critical multiplier.
///
/// Rows are independent; a failing row is recorded rather than aborting.
pub fn epsilon_sweep(spec: &SeriesSpec, grid: &[f64], opts: &SeriesOptions) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidInput("sweep grid must be strictly decreasing".into()));
    }
    let limit = spec.limit()?;
    let rows = grid
        .par_iter()
        .map(|&eps| match normalized_value_with(spec, eps, opts) {
            Ok(nv) => SweepRow {
                epsilon: eps,
                series: nv.series.value,
                normalized: nv.value,
                limit,
                ratio: nv.value / limit,
                error_bound: nv.error_bound,
                failure: None,
            },
            Err(e) => SweepRow {
                epsilon: eps,
                series: f64::NAN,
                normalized: f64::NAN,
                limit,
                ratio: f64::NAN,
                error_bound: f64::NAN,
                failure: Some(e.to_string()),
            },
        })
        .collect();
    Ok(rows)
}

/// Grid `critical² + gap` (power-log) or `gap` (inverse-log, on ε²) for
/// geometric gaps from `start_gap` down to `end_gap`.
pub fn default_grid(spec: &SeriesSpec, start_gap: f64, end_gap: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let ratio = (end_gap / start_gap).powf(1.0 / (points - 1) as f64);
    let crit_sq = spec.critical_epsilon().powi(2);
    (0..points)
        .map(|i| (crit_sq + start_gap * ratio.powi(i as i32)).sqrt())
        .collect()
}
