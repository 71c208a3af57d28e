//! Monte Carlo laboratory for i.i.d. increments.

mod diagnostics;
mod dist;
mod empirical;
mod walk;

pub use diagnostics::{
    moment_functional, moment_report, truncated_second_moment_by_quadrature, truncation_diagnostics, truncation_level,
    MomentReport, ProfileRow, TruncationParams, TruncationReport, Verdict, TAIL_DECAY_METHOD, VERDICT_T_MIN,
};
pub use dist::DistributionSpec;
pub use empirical::{
    assemble_empirical_series, fit_empirical_tail, AssemblyOptions, BlockRow, EmpiricalSeries, EmpiricalTail,
    GeometricGrid,
};
pub use walk::{
    estimate_tail, estimate_tail_pair, path_rng, sample_walk, McConfig, TailEstimate, TailPair, WalkSummary, MIN_PATHS,
};
