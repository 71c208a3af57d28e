//! Truncation diagnostics and moment-condition checks.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::dist::DistributionSpec;
use super::walk::{over_path_chunks, path_rng, McConfig};
use crate::analytic::{clamped_ln, clamped_lnln, normal_pdf};
use crate::constants::WeightExponents;
use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate_pieces, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub p: f64,
}

impl TruncationParams {
    pub fn new(p: f64) -> Self {
        Self { p }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.p > 0.5 && self.p <= 2.0, "p", self.p, "1/2 < p <= 2")
    }
}

/// `c_n = sqrt(n) / (loglog n)^p`.
pub fn truncation_level(n: u64, p: f64) -> f64 {
    (n as f64).sqrt() / clamped_lnln(n as f64).powf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n: u64,
    pub p: f64,
    pub c_n: f64,
    /// `n Var(X 1{|X| <= c_n})`, closed form.
    pub b_n: f64,
    pub b_n_over_n: f64,
    /// `sqrt(n) / (loglog n)²`.
    pub delta_threshold: f64,
    /// Fraction of paths with `Δ_n >= delta_threshold`.
    pub delta_exceedance: f64,
    pub paths: u64,
}

/// `B_n` from the truncated-moment metadata and the Monte Carlo frequency
/// of a large `Δ_n`.
///
/// The laws are symmetric, so the truncated mean vanishes and
/// `S̄'_{nk} - S_k = -Σ_{j<=k} X_j 1{|X_j| > c_n}`.
pub fn truncation_diagnostics(
    dist: &DistributionSpec,
    n: u64,
    params: TruncationParams,
    mc: &McConfig,
) -> Result<TruncationReport> {
    dist.validate()?;
    params.validate()?;
    mc.validate()?;
    ensure(n >= 1, "n", n as f64, "n >= 1")?;
    let c_n = truncation_level(n, params.p);
    let second = dist.truncated_second_moment(c_n);
    let mean = dist.truncated_mean(c_n);
    let b_n_over_n = second - mean * mean;
    let delta_threshold = (n as f64).sqrt() / clamped_lnln(n as f64).powi(2);

    let hits: u64 = over_path_chunks(mc, |range| {
        let mut hits = 0u64;
        for path in range {
            let mut rng = path_rng(mc.seed, path);
            let mut sampler = dist.sampler();
            let mut d = 0.0f64;
            let mut worst = 0.0f64;
            for _ in 0..n {
                let x = sampler.next(&mut rng);
                if x.abs() > c_n {
                    d += x - mean;
                } else {
                    d -= mean;
                }
                worst = worst.max(d.abs());
            }
            hits += u64::from(worst >= delta_threshold);
        }
        hits
    })?
    .into_iter()
    .sum();

    Ok(TruncationReport {
        n,
        p: params.p,
        c_n,
        b_n: n as f64 * b_n_over_n,
        b_n_over_n,
        delta_threshold,
        delta_exceedance: hits as f64 / mc.paths as f64,
        paths: mc.paths,
    })
}

/// `E[X² 1{|X| <= c}]` as `∫_0^c 2t P(|X| > t) dt - c² P(|X| > c)`.
pub fn truncated_second_moment_by_quadrature(dist: &DistributionSpec, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let kink = match *dist {
        DistributionSpec::Normal { sigma } => 40.0 * sigma,
        DistributionSpec::Rademacher | DistributionSpec::TwoSidedPareto { .. } => 1.0,
        DistributionSpec::UniformSym { half_width } => half_width,
    };
    let mut breaks = vec![0.0, kink.min(c), c];
    breaks.dedup();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let q = integrate_pieces(|t| 2.0 * t * dist.abs_tail(t), &breaks, opts);
    q.value - c * c * dist.abs_tail(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub tail_second_moment: f64,
    /// `loglog(t) E[X² 1{|X| >= t}]`.
    pub profile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub ex: f64,
    pub ex2: f64,
    /// `E[X² (log|X|)^a (loglog|X|)^{b-1}]`, possibly infinite.
    pub functional: f64,
    pub profile: Vec<ProfileRow>,
    pub moment_verdict: Verdict,
    pub tail_decay_verdict: Verdict,
    /// Describes how the tail-decay verdict was reached.
    pub tail_decay_method: &'static str,
}

pub const TAIL_DECAY_METHOD: &str = "heuristic: log-log slope of the profile over the top decade of the t-grid";

/// Smallest `t_max` for which a tail-decay verdict is attempted.
pub const VERDICT_T_MIN: f64 = 1e6;
const PASS_SLOPE: f64 = -0.05;

pub fn moment_report(dist: &DistributionSpec, w: WeightExponents, t_grid: &[f64]) -> Result<MomentReport> {
    dist.validate()?;
    ensure(w.a.is_finite() && w.b.is_finite(), "weights", w.a, "finite exponents")?;
    if t_grid.is_empty() || t_grid.windows(2).any(|p| !(p[0] < p[1])) || t_grid[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "t-grid must be positive and strictly increasing".into(),
        ));
    }
    let functional = moment_functional(dist, w)?;
    let profile: Vec<ProfileRow> = t_grid
        .iter()
        .map(|&t| {
            let tsm = dist.tail_second_moment(t);
            ProfileRow {
                t,
                tail_second_moment: tsm,
                profile: clamped_lnln(t) * tsm,
            }
        })
        .collect();
    Ok(MomentReport {
        ex: dist.mean(),
        ex2: dist.variance(),
        functional,
        moment_verdict: if functional.is_finite() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        tail_decay_verdict: tail_decay_verdict_of(&profile),
        tail_decay_method: TAIL_DECAY_METHOD,
        profile,
    })
}

fn tail_decay_verdict_of(profile: &[ProfileRow]) -> Verdict {
    let t_max = profile.last().map_or(0.0, |r| r.t);
    if profile.iter().any(|r| !r.profile.is_finite()) {
        return Verdict::Fail;
    }
    if t_max < VERDICT_T_MIN {
        return Verdict::Indeterminate;
    }
    let last = profile.last().unwrap().profile;
    if last == 0.0 {
        return Verdict::Pass;
    }
    let top: Vec<&ProfileRow> = profile.iter().filter(|r| r.t >= t_max / 10.0).collect();
    if top.len() < 2 || top.iter().any(|r| r.profile <= 0.0) {
        return Verdict::Indeterminate;
    }
    let xs: Vec<f64> = top.iter().map(|r| r.t.ln()).collect();
    let ys: Vec<f64> = top.iter().map(|r| r.profile.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    if slope <= PASS_SLOPE {
        Verdict::Pass
    } else if slope >= 0.0 {
        Verdict::Fail
    } else {
        Verdict::Indeterminate
    }
}

/// `E[X² (log|X|)^a (loglog|X|)^{b-1}]` with clamped logarithms.
pub fn moment_functional(dist: &DistributionSpec, w: WeightExponents) -> Result<f64> {
    dist.validate()?;
    let (a, b) = (w.a, w.b);
    let h = move |t: f64| {
        let l1 = clamped_ln(t);
        l1.powf(a) * clamped_ln(l1).powf(b - 1.0)
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let ee = E.powf(E);
    Ok(match *dist {
        // |X| = 1 and both clamped logarithms equal 1 there.
        DistributionSpec::Rademacher => 1.0,
        DistributionSpec::Normal { sigma } => {
            let top = 40.0 * sigma;
            let mut breaks: Vec<f64> = [0.0, E, ee, top].into_iter().filter(|&x| x <= top).collect();
            breaks.dedup();
            let q = integrate_pieces(|t| 2.0 * t * t * h(t) * normal_pdf(t / sigma) / sigma, &breaks, opts);
            q.value
        }
        DistributionSpec::UniformSym { half_width } => {
            let mut breaks: Vec<f64> = [0.0, E, ee].into_iter().filter(|&x| x < half_width).collect();
            breaks.push(half_width);
            integrate_pieces(|t| t * t * h(t) / half_width, &breaks, opts).value
        }
        DistributionSpec::TwoSidedPareto { alpha } => pareto_functional(alpha, a, b, opts),
    })
}

/// Density of `|X|` is `α t^{-α-1}` on `t >= 1`. With `v = ln t` the
/// integrand is `α e^{(2-α)v} L(v)^a (ln L(v))^{b-1}`, `L(v) = max(v, e)`;
/// past `v = e` the further substitution `y = ln v` gives
/// `α e^{(2-α)e^y + (a+1)y} y^{b-1}`.
fn pareto_functional(alpha: f64, a: f64, b: f64, opts: QuadOptions) -> f64 {
    let g = alpha - 2.0;
    if g == 0.0 && !(a < -1.0 || (a == -1.0 && b < 0.0)) {
        return f64::INFINITY;
    }
    // v in [0, e]: both clamped logs are 1.
    let head = if g == 0.0 {
        alpha * E
    } else {
        alpha * (1.0 - (-g * E).exp()) / g
    };
    let ln_f = move |y: f64| -g * y.exp() + (a + 1.0) * y + (b - 1.0) * y.ln();
    let f = move |y: f64| alpha * ln_f(y).exp();
    let mut total = 0.0;
    let mut lo = 1.0;
    let mut width = 1.0;
    // Integrate in growing panels until a panel stops contributing.
    for _ in 0..200 {
        let part = integrate_pieces(f, &[lo, lo + width], opts).value;
        total += part;
        if part <= 1e-17 * (head + total) && ln_f(lo + width) < ln_f(lo) {
            break;
        }
        lo += width;
        width *= 1.5;
    }
    head + total
}
