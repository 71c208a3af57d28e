use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytic::{abs_normal_tail, normal_pdf, normal_upper_tail};
use crate::error::{ensure, Result};

/// Symmetric increment laws with closed-form moment metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal {
        sigma: f64,
    },
    Rademacher,
    /// Uniform on `[-half_width, half_width]`.
    UniformSym {
        half_width: f64,
    },
    /// Random sign times a Pareto magnitude: `P(|X| > t) = t^{-alpha}` for `t >= 1`.
    TwoSidedPareto {
        alpha: f64,
    },
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Normal { sigma } => write!(f, "normal(sigma={sigma})"),
            DistributionSpec::Rademacher => f.write_str("rademacher"),
            DistributionSpec::UniformSym { half_width } => write!(f, "uniform(half_width={half_width})"),
            DistributionSpec::TwoSidedPareto { alpha } => write!(f, "pareto(alpha={alpha})"),
        }
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Normal { sigma } => ensure(sigma > 0.0 && sigma.is_finite(), "sigma", sigma, "sigma > 0"),
            DistributionSpec::Rademacher => Ok(()),
            DistributionSpec::UniformSym { half_width } => ensure(
                half_width > 0.0 && half_width.is_finite(),
                "half_width",
                half_width,
                "half_width > 0",
            ),
            DistributionSpec::TwoSidedPareto { alpha } => {
                ensure(alpha >= 2.0 && alpha.is_finite(), "alpha", alpha, "alpha >= 2")
            }
        }
    }

    pub fn mean(&self) -> f64 {
        0.0
    }

    /// `E X²`; infinite for the Pareto law with `alpha = 2`.
    pub fn variance(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { sigma } => sigma * sigma,
            DistributionSpec::Rademacher => 1.0,
            DistributionSpec::UniformSym { half_width } => half_width * half_width / 3.0,
            DistributionSpec::TwoSidedPareto { alpha } => {
                if alpha > 2.0 {
                    alpha / (alpha - 2.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Standard deviation used to scale thresholds (1 when the variance is
    /// infinite, so that walk units stay meaningful).
    pub fn scale(&self) -> f64 {
        let v = self.variance();
        if v.is_finite() {
            v.sqrt()
        } else {
            1.0
        }
    }

    /// `P(|X| > t)`.
    pub fn abs_tail(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match *self {
            DistributionSpec::Normal { sigma } => abs_normal_tail(t / sigma),
            DistributionSpec::Rademacher => {
                if t < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::UniformSym { half_width } => (1.0 - t / half_width).max(0.0),
            DistributionSpec::TwoSidedPareto { alpha } => {
                if t <= 1.0 {
                    1.0
                } else {
                    t.powf(-alpha)
                }
            }
        }
    }

    /// `E[X² 1{|X| >= t}]`.
    pub fn tail_second_moment(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            DistributionSpec::Normal { sigma } => {
                let z = t / sigma;
                2.0 * sigma * sigma * (z * normal_pdf(z) + normal_upper_tail(z))
            }
            DistributionSpec::Rademacher => {
                if t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::UniformSym { half_width: h } => {
                if t >= h {
                    0.0
                } else {
                    (h * h * h - t * t * t) / (3.0 * h)
                }
            }
            DistributionSpec::TwoSidedPareto { alpha } => {
                if alpha == 2.0 {
                    f64::INFINITY
                } else {
                    alpha / (alpha - 2.0) * t.max(1.0).powf(2.0 - alpha)
                }
            }
        }
    }

    /// `E[X² 1{|X| <= c}]`, finite for every member of the catalog.
    pub fn truncated_second_moment(&self, c: f64) -> f64 {
        if c < 0.0 {
            return 0.0;
        }
        match *self {
            DistributionSpec::Normal { sigma } => {
                let z = c / sigma;
                // P(|N| <= z) - 2 z pdf(z), written to avoid 1 - (1 - tiny).
                sigma * sigma * ((1.0 - abs_normal_tail(z)) - 2.0 * z * normal_pdf(z))
            }
            DistributionSpec::Rademacher => {
                if c >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::UniformSym { half_width: h } => {
                let m = c.min(h);
                m * m * m / (3.0 * h)
            }
            DistributionSpec::TwoSidedPareto { alpha } => {
                if c < 1.0 {
                    0.0
                } else if alpha == 2.0 {
                    2.0 * c.ln()
                } else {
                    alpha / (alpha - 2.0) * (1.0 - c.powf(2.0 - alpha))
                }
            }
        }
    }

    /// `E[X 1{|X| <= c}]`, zero by symmetry.
    pub fn truncated_mean(&self, _c: f64) -> f64 {
        0.0
    }

    pub(crate) fn sampler(&self) -> Sampler {
        match *self {
            DistributionSpec::Normal { sigma } => Sampler::Normal(sigma),
            DistributionSpec::Rademacher => Sampler::Rademacher { bits: 0, left: 0 },
            DistributionSpec::UniformSym { half_width } => Sampler::Uniform(half_width),
            DistributionSpec::TwoSidedPareto { alpha } => Sampler::Pareto(-1.0 / alpha),
        }
    }
}

/// Per-path increment generator; Rademacher signs are drawn 64 at a time.
pub(crate) enum Sampler {
    Normal(f64),
    Rademacher { bits: u64, left: u32 },
    Uniform(f64),
    Pareto(f64),
}

impl Sampler {
    #[inline]
    pub fn next<R: Rng>(&mut self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal(sigma) => {
                let z: f64 = rng.sample(StandardNormal);
                *sigma * z
            }
            Sampler::Rademacher { bits, left } => {
                if *left == 0 {
                    *bits = rng.random();
                    *left = 64;
                }
                let sign = *bits & 1;
                *bits >>= 1;
                *left -= 1;
                if sign == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            Sampler::Uniform(h) => *h * (2.0 * rng.random::<f64>() - 1.0),
            Sampler::Pareto(neg_inv_alpha) => {
                let u: f64 = rng.random();
                // 1 - u lies in (0, 1], so the magnitude is finite and >= 1.
                let magnitude = (1.0 - u).powf(*neg_inv_alpha);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}
