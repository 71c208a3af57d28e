use lilrates_core::lab::{
    assemble_empirical_series, estimate_tail_pair, moment_report, truncation_diagnostics, AssemblyOptions,
    DistributionSpec, GeometricGrid, McConfig, TailPair, TruncationParams, TruncationReport, Verdict,
};
use lilrates_core::series::{default_grid, epsilon_sweep, evaluate_series};
use lilrates_core::{
    limit_constant, DriftLimit, Regime, SeriesOptions, SeriesSpec, Statistic, TailModel, WeightExponents,
};
use serde_json::json;

use crate::args::{ConstantsArgs, MomentsArgs, SimulateArgs, StatArg, SweepArgs, TruncationArgs};
use crate::cache::{cached, Cache};
use crate::output::{Cell, CliError, Outcome, SeedInfo, Table, EXIT_TOLERANCE};

pub const SEED_ENV: &str = "LILRATES_SEED";

/// Flag, then environment, then 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<SeedInfo, CliError> {
    if let Some(value) = flag {
        return Ok(SeedInfo { value, source: "flag" });
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map(|value| SeedInfo { value, source: "env" })
            .map_err(|_| CliError::config(format!("{SEED_ENV} = {text:?} is not an unsigned integer"))),
        Err(_) => Ok(SeedInfo {
            value: 0,
            source: "default",
        }),
    }
}

fn regime_label(r: Regime) -> String {
    r.to_string()
}

fn single_statistic(stat: StatArg, command: &str) -> Result<Statistic, CliError> {
    match stat {
        StatArg::Abs => Ok(Statistic::Abs),
        StatArg::Max => Ok(Statistic::Max),
        StatArg::Both => Err(CliError::config(format!("{command} needs --stat abs or --stat max"))),
    }
}

pub fn run_constants(args: &ConstantsArgs) -> Result<Outcome, CliError> {
    let regime: Regime = args.regime.into();
    let w = WeightExponents::new(args.a, args.b);
    w.validate(regime)?;
    if !args.tau.is_finite() {
        return Err(CliError::config(format!("tau = {} must be finite", args.tau)));
    }
    let stats = args.stat.statistics();
    let mut table = Table::new(vec!["regime", "a", "b", "tau", "statistic", "value"]);
    let mut values = Vec::new();
    for &stat in &stats {
        let value = limit_constant(regime, w, DriftLimit(args.tau), stat)?;
        values.push(json!({ "statistic": stat, "value": value }));
        table.push(vec![
            Cell::Text(regime_label(regime)),
            Cell::Num(args.a),
            Cell::Num(args.b),
            Cell::Num(args.tau),
            Cell::Text(stat.to_string()),
            Cell::Sig10(value),
        ]);
    }
    let config = json!({
        "regime": regime_label(regime),
        "a": args.a,
        "b": args.b,
        "tau": args.tau,
        "statistics": stats,
    });
    let mut outcome = Outcome::new("constants", config, table);
    outcome.summary = json!({ "constants": values });
    Ok(outcome)
}

pub fn run_sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    let regime: Regime = args.weights.regime.into();
    let stat = single_statistic(args.stat, "sweep")?;
    let spec = SeriesSpec::new(
        regime,
        WeightExponents::new(args.weights.a, args.weights.b),
        TailModel::analytic_for(stat),
    )
    .with_drift(args.drift.schedule());
    spec.validate()?;
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::config(format!("tol = {} must be positive", args.tol)));
    }
    if args.splice < 16 {
        return Err(CliError::config(format!(
            "splice = {} must be at least 16",
            args.splice
        )));
    }
    let grid = match &args.eps {
        Some(list) => list.clone(),
        None => {
            if !(args.start_gap > args.end_gap && args.end_gap > 0.0) || args.points < 2 {
                return Err(CliError::config(
                    "the default grid needs start-gap > end-gap > 0 and points >= 2",
                ));
            }
            default_grid(&spec, args.start_gap, args.end_gap, args.points)
        }
    };
    if grid.is_empty() {
        return Err(CliError::config("the epsilon grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(CliError::config("the epsilon grid must be strictly decreasing"));
    }
    if grid.iter().all(|&e| spec.check_epsilon(e).is_err()) {
        return Err(CliError::config(format!(
            "every epsilon is at or below the critical value {}",
            spec.critical_epsilon()
        )));
    }

    let opts = SeriesOptions {
        splice: args.splice,
        tol: args.tol,
    };
    let rows = epsilon_sweep(&spec, &grid, &opts)?;
    let limit = spec.limit()?;
    let mut table = Table::new(vec!["epsilon", "series", "normalized", "limit", "ratio", "error_bound"]);
    let mut failures = Vec::new();
    for r in &rows {
        table.push(vec![
            Cell::Num(r.epsilon),
            Cell::Num(r.series),
            Cell::Num(r.normalized),
            Cell::Num(r.limit),
            Cell::Num(r.ratio),
            Cell::Num(r.error_bound),
        ]);
        if let Some(msg) = &r.failure {
            failures.push(format!("epsilon = {}: {msg}", r.epsilon));
        }
    }
    let last = rows.last().expect("grid is not empty");
    table.push(vec![
        Cell::Text("final".into()),
        Cell::Empty,
        Cell::Empty,
        Cell::Num(limit),
        Cell::Num(last.ratio),
        Cell::Empty,
    ]);

    let config = json!({
        "regime": regime_label(regime),
        "a": args.weights.a,
        "b": args.weights.b,
        "drift": spec.drift,
        "statistic": stat,
        "model": spec.model.name(),
        "grid": grid,
        "tol": args.tol,
        "splice": args.splice,
    });
    let mut outcome = Outcome::new("sweep", config, table);
    outcome.summary = json!({
        "limit": limit,
        "final_epsilon": last.epsilon,
        "final_ratio": last.ratio,
        "failed_rows": failures.len(),
    });
    outcome
        .notes
        .push(format!("final ratio {} at epsilon {}", last.ratio, last.epsilon));
    if !failures.is_empty() {
        outcome.exit_code = EXIT_TOLERANCE;
    }
    outcome.failures = failures;
    Ok(outcome)
}

fn mc_config(paths: u64, seed: u64, workers: Option<usize>) -> Result<McConfig, CliError> {
    let mc = McConfig { paths, seed, workers };
    mc.validate()?;
    Ok(mc)
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let dist = args.dist.spec();
    dist.validate()?;
    let seed = resolve_seed(args.mc.seed)?;
    let mc = mc_config(args.mc.paths, seed.value, args.mc.workers)?;
    let cache = Cache::open(args.mc.cache_dir.as_deref());
    let mut outcome = match args.eps {
        Some(eps) => simulate_series(args, &dist, eps, &mc)?,
        None => simulate_tail(args, &dist, &mc, cache.as_ref())?,
    };
    outcome.seed = Some(seed);
    Ok(outcome)
}

fn simulate_tail(
    args: &SimulateArgs,
    dist: &DistributionSpec,
    mc: &McConfig,
    cache: Option<&Cache>,
) -> Result<Outcome, CliError> {
    let n = args
        .n
        .ok_or_else(|| CliError::config("simulate needs --n (or --eps for a series)"))?;
    if n == 0 {
        return Err(CliError::config("n = 0 violates the constraint n >= 1"));
    }
    let threshold = match (args.threshold, args.x) {
        (Some(t), None) => t,
        (None, Some(x)) => x * dist.scale() * (n as f64).sqrt(),
        _ => return Err(CliError::config("simulate needs exactly one of --threshold or --x")),
    };
    if threshold.is_nan() {
        return Err(CliError::config("threshold must be a number"));
    }
    let params = json!({
        "dist": dist,
        "n": n,
        "threshold": threshold,
        "paths": mc.paths,
        "seed": mc.seed,
    });
    let key = Cache::key("tail", &params);
    let (pair, lookup) = cached::<TailPair, _>(cache, &key, || Ok(estimate_tail_pair(dist, n, threshold, mc)?))?;

    let mut table = Table::new(vec![
        "dist",
        "n",
        "threshold",
        "statistic",
        "p_hat",
        "std_err",
        "paths",
        "hits",
    ]);
    for stat in args.stat.statistics() {
        let est = match stat {
            Statistic::Max => pair.max,
            Statistic::Abs => pair.abs,
        };
        table.push(vec![
            Cell::Text(dist.to_string()),
            Cell::Int(n),
            Cell::Num(threshold),
            Cell::Text(stat.to_string()),
            Cell::Num(est.p_hat),
            Cell::Num(est.std_err),
            Cell::Int(est.paths),
            Cell::Int(est.hits),
        ]);
    }
    let mut config = params;
    config["statistics"] = json!(args.stat.statistics());
    config["workers"] = json!(mc.workers);
    let mut outcome = Outcome::new("simulate", config, table);
    outcome.summary = json!({ "cache": lookup.label(), "cache_key": key });
    Ok(outcome)
}

fn simulate_series(args: &SimulateArgs, dist: &DistributionSpec, eps: f64, mc: &McConfig) -> Result<Outcome, CliError> {
    let stat = single_statistic(args.stat, "simulate --eps")?;
    let regime: Regime = args.weights.regime.into();
    let spec = SeriesSpec::new(
        regime,
        WeightExponents::new(args.weights.a, args.weights.b),
        TailModel::analytic_for(stat),
    )
    .with_drift(args.drift.schedule())
    .with_sigma(dist.scale());
    let grid = GeometricGrid::new(args.grid_min, args.grid_max, args.ratio);
    let opts = AssemblyOptions {
        truncation_tol: args.truncation_tol,
        ..AssemblyOptions::default()
    };
    let series = assemble_empirical_series(dist, &spec, eps, &grid, mc, &opts)?;
    let analytic = evaluate_series(&spec, eps, 1e-6)?;

    let mut table = Table::new(vec![
        "n",
        "first",
        "last",
        "block_weight",
        "threshold",
        "p_hat",
        "std_err",
        "bias_bound",
    ]);
    for b in &series.blocks {
        table.push(vec![
            Cell::Int(b.n),
            Cell::Int(b.first),
            Cell::Int(b.last),
            Cell::Num(b.block_weight),
            Cell::Num(b.threshold),
            Cell::Num(b.p_hat),
            Cell::Num(b.std_err),
            Cell::Num(b.bias_bound),
        ]);
    }
    let r = &series.result;
    let config = json!({
        "dist": dist,
        "eps": eps,
        "regime": regime_label(regime),
        "a": args.weights.a,
        "b": args.weights.b,
        "drift": spec.drift,
        "statistic": stat,
        "grid": grid,
        "paths": mc.paths,
        "seed": mc.seed,
        "workers": mc.workers,
        "truncation_tol": opts.truncation_tol,
    });
    let mut outcome = Outcome::new("simulate", config, table);
    outcome.summary = json!({
        "value": r.value,
        "error_bound": r.error_bound,
        "blocks_sum": r.head_sum,
        "beyond_grid_estimate": r.tail_estimate,
        "breakdown": r.breakdown,
        "analytic_value": analytic.value,
        "relative_gap": (r.value - analytic.value) / analytic.value,
    });
    outcome.notes.push(format!(
        "empirical series {} ± {} (analytic {})",
        r.value, r.error_bound, analytic.value
    ));
    Ok(outcome)
}

pub fn run_truncation(args: &TruncationArgs) -> Result<Outcome, CliError> {
    let dist = args.dist.spec();
    dist.validate()?;
    let params = TruncationParams::new(args.p);
    params.validate()?;
    if args.n == 0 {
        return Err(CliError::config("n = 0 violates the constraint n >= 1"));
    }
    let seed = resolve_seed(args.seed)?;
    let mc = mc_config(args.paths, seed.value, args.workers)?;
    let key_params = json!({
        "dist": dist,
        "n": args.n,
        "p": args.p,
        "paths": mc.paths,
        "seed": mc.seed,
    });
    let key = Cache::key("truncation", &key_params);
    let cache = Cache::open(args.cache_dir.as_deref());
    let (report, lookup) = cached::<TruncationReport, _>(cache.as_ref(), &key, || {
        Ok(truncation_diagnostics(&dist, args.n, params, &mc)?)
    })?;

    let mut table = Table::new(vec![
        "dist",
        "n",
        "p",
        "c_n",
        "b_n",
        "b_n_over_n",
        "delta_threshold",
        "delta_exceedance",
        "paths",
    ]);
    table.push(vec![
        Cell::Text(dist.to_string()),
        Cell::Int(report.n),
        Cell::Num(report.p),
        Cell::Num(report.c_n),
        Cell::Num(report.b_n),
        Cell::Num(report.b_n_over_n),
        Cell::Num(report.delta_threshold),
        Cell::Num(report.delta_exceedance),
        Cell::Int(report.paths),
    ]);
    let mut config = key_params;
    config["workers"] = json!(mc.workers);
    let mut outcome = Outcome::new("truncation", config, table);
    outcome.seed = Some(seed);
    outcome.summary = json!({ "cache": lookup.label(), "cache_key": key });
    outcome
        .notes
        .push(format!("B_n = {} (c_n = {})", report.b_n, report.c_n));
    Ok(outcome)
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Indeterminate => "indeterminate",
    }
}

pub fn run_moments(args: &MomentsArgs) -> Result<Outcome, CliError> {
    let dist = args.dist.spec();
    dist.validate()?;
    let grid = match &args.t {
        Some(list) => list.clone(),
        None => {
            if !(args.t_max > 1.0) || args.t_points < 2 {
                return Err(CliError::config("the default t-grid needs t-max > 1 and t-points >= 2"));
            }
            let step = args.t_max.ln() / (args.t_points - 1) as f64;
            let mut grid: Vec<f64> = (0..args.t_points).map(|k| (k as f64 * step).exp()).collect();
            grid[0] = 1.0;
            grid[args.t_points - 1] = args.t_max;
            grid
        }
    };
    let w = WeightExponents::new(args.a, args.b);
    let report = moment_report(&dist, w, &grid)?;

    let mut table = Table::new(vec!["t", "tail_second_moment", "profile"]);
    for row in &report.profile {
        table.push(vec![
            Cell::Num(row.t),
            Cell::Num(row.tail_second_moment),
            Cell::Num(row.profile),
        ]);
    }
    let config = json!({ "dist": dist, "a": args.a, "b": args.b, "t_grid": grid });
    let mut outcome = Outcome::new("moments", config, table);
    outcome.summary = json!({
        "ex": report.ex,
        "ex2": report.ex2.to_string(),
        "functional": report.functional.to_string(),
        "moment_verdict": verdict_label(report.moment_verdict),
        "tail_decay_verdict": verdict_label(report.tail_decay_verdict),
        "tail_decay_method": report.tail_decay_method,
    });
    outcome
        .notes
        .push(format!("E X^2 = {}; functional = {}", report.ex2, report.functional));
    outcome
        .notes
        .push(format!("moment condition: {}", verdict_label(report.moment_verdict)));
    outcome.notes.push(format!(
        "tail decay: {} ({})",
        verdict_label(report.tail_decay_verdict),
        report.tail_decay_method
    ));
    Ok(outcome)
}
