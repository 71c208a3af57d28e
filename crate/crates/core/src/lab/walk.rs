use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::DistributionSpec;
use crate::analytic::Statistic;
use crate::error::{ensure, Error, Result};

/// Paths handed to one rayon task.
const PATH_CHUNK: u64 = 64;

pub const MIN_PATHS: u64 = 100;

/// Random stream for one path.
///
/// The master seed keys a ChaCha8 generator and the path index selects its
/// 64-bit stream, so every path owns a counter-based substream that does not
/// depend on which worker runs it or in what order.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self {
            paths,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.paths >= MIN_PATHS, "paths", self.paths as f64, "paths >= 100")?;
        if let Some(w) = self.workers {
            ensure(w >= 1, "workers", w as f64, "workers >= 1")?;
        }
        Ok(())
    }
}

/// Runs `job` over fixed path chunks and returns the per-chunk results in
/// chunk order.
pub(crate) fn over_path_chunks<A, F>(mc: &McConfig, job: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync + Send,
{
    let paths = mc.paths;
    let chunks = paths.div_ceil(PATH_CHUNK);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| job(c * PATH_CHUNK..((c + 1) * PATH_CHUNK).min(paths)))
            .collect::<Vec<A>>()
    };
    match mc.workers {
        None => Ok(run()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkSummary {
    pub n: u64,
    pub s_n: f64,
    /// `max_{k<=n} |S_k|`.
    pub m_n: f64,
}

impl WalkSummary {
    pub fn statistic(&self, which: Statistic) -> f64 {
        match which {
            Statistic::Max => self.m_n,
            Statistic::Abs => self.s_n.abs(),
        }
    }
}

/// One path of `n` increments from stream `stream` of `seed`.
pub fn sample_walk(dist: &DistributionSpec, n: u64, stream: u64, seed: u64) -> Result<WalkSummary> {
    dist.validate()?;
    ensure(n >= 1, "n", n as f64, "n >= 1")?;
    Ok(walk(dist, n, &mut path_rng(seed, stream)))
}

pub(crate) fn walk(dist: &DistributionSpec, n: u64, rng: &mut ChaCha8Rng) -> WalkSummary {
    let mut sampler = dist.sampler();
    let mut s = 0.0f64;
    let mut m = 0.0f64;
    for _ in 0..n {
        s += sampler.next(rng);
        m = m.max(s.abs());
    }
    WalkSummary { n, s_n: s, m_n: m }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub paths: u64,
    pub hits: u64,
}

impl TailEstimate {
    pub fn from_hits(hits: u64, paths: u64) -> Self {
        let p = hits as f64 / paths as f64;
        Self {
            p_hat: p,
            std_err: (p * (1.0 - p) / paths as f64).sqrt(),
            paths,
            hits,
        }
    }
}

/// Both statistics from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPair {
    pub max: TailEstimate,
    pub abs: TailEstimate,
}

/// Fraction of paths with the chosen statistic at or above `threshold`
/// (walk units).
pub fn estimate_tail(
    dist: &DistributionSpec,
    n: u64,
    threshold: f64,
    statistic: Statistic,
    mc: &McConfig,
) -> Result<TailEstimate> {
    let pair = estimate_tail_pair(dist, n, threshold, mc)?;
    Ok(match statistic {
        Statistic::Max => pair.max,
        Statistic::Abs => pair.abs,
    })
}

pub fn estimate_tail_pair(dist: &DistributionSpec, n: u64, threshold: f64, mc: &McConfig) -> Result<TailPair> {
    dist.validate()?;
    mc.validate()?;
    ensure(n >= 1, "n", n as f64, "n >= 1")?;
    ensure(!threshold.is_nan(), "threshold", threshold, "threshold is a number")?;
    let counts = over_path_chunks(mc, |range| {
        let mut max_hits = 0u64;
        let mut abs_hits = 0u64;
        for path in range {
            let w = walk(dist, n, &mut path_rng(mc.seed, path));
            max_hits += u64::from(w.m_n >= threshold);
            abs_hits += u64::from(w.s_n.abs() >= threshold);
        }
        (max_hits, abs_hits)
    })?;
    let (max_hits, abs_hits) = counts.into_iter().fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    Ok(TailPair {
        max: TailEstimate::from_hits(max_hits, mc.paths),
        abs: TailEstimate::from_hits(abs_hits, mc.paths),
    })
}
