//! Empirical tail tables and block assembly of the weighted series.
//!
//! Every simulated path is run once to the end of the grid and its statistic
//! is recorded at each grid point, so one set of paths serves all blocks.
//! The block of `n_k` runs between the geometric midpoints
//! `sqrt(n_{k-1} n_k)` and `sqrt(n_k n_{k+1})`; the first block starts at
//! `n = 1` and the last one ends at `n_max`.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::dist::DistributionSpec;
use super::walk::{over_path_chunks, path_rng, McConfig, TailEstimate};
use crate::analytic::{Statistic, TailModel};
use crate::error::{ensure, Error, Result};
use crate::series::{tail_beyond, weight_sum, ErrorTerm, SeriesResult, SeriesSpec};

/// Geometric grid `n_min, n_min γ, n_min γ², ... <= n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricGrid {
    pub n_min: u64,
    pub n_max: u64,
    pub ratio: f64,
}

impl GeometricGrid {
    pub fn new(n_min: u64, n_max: u64, ratio: f64) -> Self {
        Self { n_min, n_max, ratio }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_min >= 1, "n_min", self.n_min as f64, "n_min >= 1")?;
        ensure(self.n_max >= self.n_min, "n_max", self.n_max as f64, "n_max >= n_min")?;
        ensure(
            self.ratio > 1.0 && self.ratio <= 2.0,
            "ratio",
            self.ratio,
            "1 < ratio <= 2",
        )
    }

    /// Distinct, increasing grid points; `n_max` is always the last one.
    pub fn points(&self) -> Vec<u64> {
        let mut out = vec![self.n_min];
        let mut x = self.n_min as f64;
        loop {
            x *= self.ratio;
            let n = x.round() as u64;
            if n >= self.n_max {
                break;
            }
            if n > *out.last().unwrap() {
                out.push(n);
            }
        }
        if *out.last().unwrap() < self.n_max {
            out.push(self.n_max);
        }
        out
    }
}

/// Sorted standardized statistics `stat / (scale sqrt n)` per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    statistic: Statistic,
    grid: Vec<u64>,
    scale: f64,
    samples: Vec<Vec<f64>>,
}

impl EmpiricalTail {
    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    pub fn grid(&self) -> &[u64] {
        &self.grid
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn paths(&self) -> u64 {
        self.samples.first().map_or(0, |s| s.len() as u64)
    }

    fn block_of(&self, n: u64) -> Option<usize> {
        let k = self.grid.partition_point(|&g| g < n);
        (k < self.grid.len()).then_some(k)
    }

    /// Estimate of `P(stat >= scale sqrt(n) x)` from the block containing
    /// `n`; zero beyond the last grid point.
    pub fn estimate(&self, n: u64, x: f64) -> TailEstimate {
        let paths = self.paths();
        match self.block_of(n) {
            None => TailEstimate::from_hits(0, paths.max(1)),
            Some(k) => {
                let sorted = &self.samples[k];
                let below = sorted.partition_point(|&v| v < x);
                TailEstimate::from_hits((sorted.len() - below) as u64, paths)
            }
        }
    }

    pub fn tail(&self, n: u64, x: f64) -> f64 {
        self.estimate(n, x).p_hat
    }

    /// Largest recorded standardized statistic; the tail is 0 past it.
    pub fn support_bound(&self) -> f64 {
        self.samples
            .iter()
            .filter_map(|s| s.last().copied())
            .fold(0.0, f64::max)
    }
}

/// Simulates `mc.paths` walks to the end of `grid` and tabulates the
/// standardized statistic at every grid point.
pub fn fit_empirical_tail(
    dist: &DistributionSpec,
    statistic: Statistic,
    grid: &GeometricGrid,
    scale: f64,
    mc: &McConfig,
) -> Result<EmpiricalTail> {
    dist.validate()?;
    mc.validate()?;
    grid.validate()?;
    ensure(scale > 0.0 && scale.is_finite(), "scale", scale, "scale > 0")?;
    let points = grid.points();
    let chunks = over_path_chunks(mc, |range| {
        let mut rows = Vec::with_capacity((range.end - range.start) as usize);
        let mut buf = vec![0.0; points.len()];
        for path in range {
            record_path(dist, statistic, &points, &mut path_rng(mc.seed, path), &mut buf);
            rows.push(buf.clone());
        }
        rows
    })?;
    let mut samples = vec![Vec::with_capacity(mc.paths as usize); points.len()];
    for row in chunks.into_iter().flatten() {
        for (k, v) in row.into_iter().enumerate() {
            samples[k].push(v / (scale * (points[k] as f64).sqrt()));
        }
    }
    for s in &mut samples {
        s.sort_by(f64::total_cmp);
    }
    Ok(EmpiricalTail {
        statistic,
        grid: points,
        scale,
        samples,
    })
}

/// Writes the raw statistic at each grid point into `out`.
fn record_path(dist: &DistributionSpec, statistic: Statistic, points: &[u64], rng: &mut ChaCha8Rng, out: &mut [f64]) {
    if let (Statistic::Abs, DistributionSpec::Normal { sigma }) = (statistic, dist) {
        // Gaussian partial sums only need their increments between grid
        // points, each exactly N(0, sigma² Δn).
        let mut s = 0.0;
        let mut at = 0u64;
        for (slot, &n) in out.iter_mut().zip(points) {
            let z: f64 = StandardNormal.sample(rng);
            s += sigma * ((n - at) as f64).sqrt() * z;
            at = n;
            *slot = s.abs();
        }
        return;
    }
    let mut sampler = dist.sampler();
    let mut s = 0.0f64;
    let mut m = 0.0f64;
    let mut at = 0u64;
    for (slot, &n) in out.iter_mut().zip(points) {
        while at < n {
            s += sampler.next(rng);
            m = m.max(s.abs());
            at += 1;
        }
        *slot = match statistic {
            Statistic::Max => m,
            Statistic::Abs => s.abs(),
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRow {
    /// Grid point where the tail is estimated.
    pub n: u64,
    pub first: u64,
    pub last: u64,
    pub block_weight: f64,
    pub threshold: f64,
    pub p_hat: f64,
    pub std_err: f64,
    /// Largest deviation of the analytic tail from its value at `n` over
    /// the block, times the weight.
    pub bias_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSeries {
    pub result: SeriesResult,
    pub blocks: Vec<BlockRow>,
}

/// Options controlling the empirical assembly.
#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    /// Largest allowed ratio of the beyond-grid majorant to the value.
    pub truncation_tol: f64,
    /// Standard errors folded into the Monte Carlo part of the bound.
    pub z: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            truncation_tol: 0.1,
            z: 3.0,
        }
    }
}

/// Monte Carlo estimate of `S(ε)` for walks with increments `dist`.
///
/// `spec.model` selects the statistic; the matching analytic model supplies
/// the beyond-grid majorant and the within-block bias bound.
pub fn assemble_empirical_series(
    dist: &DistributionSpec,
    spec: &SeriesSpec,
    eps: f64,
    grid: &GeometricGrid,
    mc: &McConfig,
    opts: &AssemblyOptions,
) -> Result<EmpiricalSeries> {
    spec.validate()?;
    spec.check_epsilon(eps)?;
    ensure(mc.paths > 0, "paths", 0.0, "paths > 0")?;
    grid.validate()?;
    // The analytic remainder starts right after n_max and needs n_max >= 16.
    ensure(grid.n_max >= 16, "n_max", grid.n_max as f64, "n_max >= 16")?;
    let statistic = spec.model.statistic();
    let table = fit_empirical_tail(dist, statistic, grid, spec.sigma, mc)?;
    let analytic = SeriesSpec {
        model: TailModel::analytic_for(statistic),
        ..spec.clone()
    };

    let grid_points = table.grid();
    let mut blocks = Vec::with_capacity(grid_points.len());
    let mut first = 1u64;
    for (k, &n) in grid_points.iter().enumerate() {
        let last = match grid_points.get(k + 1) {
            Some(&next) => ((n as f64 * next as f64).sqrt().floor() as u64).clamp(n, next - 1),
            None => n,
        };
        let w = weight_sum(spec, first, last);
        let x = spec.threshold(n, eps);
        let est = table.estimate(n, x);
        // The tail is monotone in n across the block, so the block sum lies
        // between the weight times the tail at either end.
        let t_mid = analytic.model.tail(n, x);
        let t_first = analytic.model.tail(first, spec.threshold(first, eps));
        let t_last = analytic.model.tail(last, spec.threshold(last, eps));
        let spread = (t_first - t_mid).abs().max((t_mid - t_last).abs());
        blocks.push(BlockRow {
            n,
            first,
            last,
            block_weight: w,
            threshold: spec.sigma * (n as f64).sqrt() * x,
            p_hat: est.p_hat,
            std_err: est.std_err,
            bias_bound: w * spread,
        });
        first = last + 1;
    }

    let head_sum: f64 = blocks.iter().map(|b| b.block_weight * b.p_hat).sum();
    let floor = 1.0 / mc.paths as f64;
    let mc_error: f64 = blocks
        .iter()
        .map(|b| opts.z * b.block_weight * b.std_err.max(floor))
        .sum();
    let bias: f64 = blocks.iter().map(|b| b.bias_bound).sum();

    let n_max = *table.grid().last().unwrap();
    let beyond = tail_beyond(&analytic, eps, n_max, head_sum.max(f64::MIN_POSITIVE) * 1e-6)?;
    let majorant = beyond.estimate + beyond.error();
    let value = head_sum + beyond.estimate;
    let allowed = opts.truncation_tol * value;
    if majorant > allowed {
        return Err(Error::GridInsufficient { majorant, allowed });
    }

    let breakdown = vec![
        ErrorTerm {
            source: "monte_carlo",
            bound: mc_error,
        },
        ErrorTerm {
            source: "block_bias",
            bound: bias,
        },
        ErrorTerm {
            source: "beyond_grid",
            bound: majorant,
        },
    ];
    let error_bound = breakdown.iter().map(|t| t.bound).sum();
    Ok(EmpiricalSeries {
        result: SeriesResult {
            value,
            head_terms: n_max,
            head_sum,
            tail_estimate: beyond.estimate,
            error_bound,
            breakdown,
        },
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{Regime, WeightExponents};

    #[test]
    fn grid_points() {
        assert_eq!(GeometricGrid::new(16, 256, 2.0).points(), vec![16, 32, 64, 128, 256]);
        assert_eq!(GeometricGrid::new(1, 5, 1.5).points(), vec![1, 2, 3, 5]);
        assert_eq!(GeometricGrid::new(7, 7, 2.0).points(), vec![7]);
        assert!(GeometricGrid::new(16, 8, 2.0).validate().is_err());
        assert!(GeometricGrid::new(16, 64, 2.5).validate().is_err());
        assert!(GeometricGrid::new(16, 64, 1.0).validate().is_err());
    }

    #[test]
    fn table_lookup() {
        let grid = GeometricGrid::new(4, 16, 2.0);
        let mc = McConfig::new(200, 3);
        let t = fit_empirical_tail(&DistributionSpec::Rademacher, Statistic::Max, &grid, 1.0, &mc).unwrap();
        assert_eq!(t.grid(), &[4, 8, 16]);
        assert_eq!(t.paths(), 200);
        assert_eq!(t.tail(3, 0.0), 1.0);
        assert_eq!(t.tail(17, 0.0), 0.0);
        // M_4 >= 1 on every path, i.e. standardized >= 1/2.
        assert_eq!(t.tail(4, 0.5), 1.0);
        assert_eq!(t.tail(16, t.support_bound() + 1e-12), 0.0);
    }

    #[test]
    fn zero_paths_is_an_error() {
        let spec = SeriesSpec::new(Regime::PowerLog, WeightExponents::new(0.0, 0.0), TailModel::AbsNormal);
        let res = assemble_empirical_series(
            &DistributionSpec::Rademacher,
            &spec,
            1.5,
            &GeometricGrid::new(16, 64, 2.0),
            &McConfig::new(0, 1),
            &AssemblyOptions::default(),
        );
        assert!(res.is_err());
    }

    #[test]
    fn short_grid_is_insufficient() {
        let spec = SeriesSpec::new(Regime::PowerLog, WeightExponents::new(0.0, 0.0), TailModel::AbsNormal);
        let res = assemble_empirical_series(
            &DistributionSpec::Normal { sigma: 1.0 },
            &spec,
            1.2,
            &GeometricGrid::new(16, 64, 2.0),
            &McConfig::new(200, 1),
            &AssemblyOptions::default(),
        );
        assert!(matches!(res, Err(Error::GridInsufficient { .. })));
    }
}
