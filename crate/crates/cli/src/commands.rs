//! Subcommand implementations.
//!
//! Conventions: curves are CSV with a fixed column order, scalar reports
//! are JSON; every artifact starts with (or embeds) the resolved run
//! metadata; parameter validation fails with exit 2, mid-computation
//! failures (containment, backward evolution) with exit 1.

use crate::acceptance;
use crate::artifact::{write_artifact, OutputTarget};
use crate::config::{
    check_format, load_config_file, parse_float_list, parse_index_list, resolve_params,
    AcceptArgs, Cli, Command, EstimateArgs, EvolveArgs, Metadata, RatesArgs, Resolver, SampleArgs,
    ScalesArgs, SweepArgs, VarianceArgs,
};
use crate::AppError;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use thermodiff_core::{
    ensemble_stats, rate_block, rate_conditional, rate_from_ensemble, sample_trajectories,
    variance_total, DerivedScales, EntropyEstimator, PhysicalParams, Scheme, SpatialGrid,
    SpectralState,
};

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, AppError> {
    let resolver = Resolver::new(load_config_file(cli.config.as_ref())?);
    match cli.command {
        Command::Scales(args) => scales(args, &resolver).map(|_| 0),
        Command::Variance(args) => variance(args, &resolver).map(|_| 0),
        Command::Rates(args) => rates(args, &resolver).map(|_| 0),
        Command::Evolve(args) => evolve(args, &resolver).map(|_| 0),
        Command::Sample(args) => sample(args, &resolver).map(|_| 0),
        Command::Estimate(args) => estimate(args, &resolver).map(|_| 0),
        Command::Sweep(args) => sweep(args, &resolver).map(|_| 0),
        Command::Accept(args) => accept(args, &resolver),
    }
}

fn require(condition: bool, message: impl Into<String>) -> Result<(), AppError> {
    if condition {
        Ok(())
    } else {
        Err(AppError::Usage(message.into()))
    }
}

fn record_timestep_verdict(params: &PhysicalParams, dt: f64, meta: &mut Metadata) {
    if let Ok(report) = params.validate_timestep(dt) {
        meta.push("timestep-verdict", report.verdict.label());
    }
}

fn scales(args: ScalesArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("scales");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "json")?;
    let s = params.derive_scales();
    let json = serde_json::json!({
        "meta": meta.json(),
        "dp": s.dp,
        "dx0": s.dx0,
        "diffusion_const": s.diffusion_const,
        "rate_exact": s.rate_exact,
        "mass": s.mass,
        "hbar": s.hbar,
    });
    write_json(&OutputTarget::from_flag(args.output), &json)
}

fn variance(args: VarianceArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("variance");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "csv")?;
    let t_raw = resolver.get(args.t_list, "t-list", "0,0.25,0.5,1,2".to_string())?;
    let times = parse_float_list(&t_raw, "t-list")?;
    require(
        times.iter().all(|&t| t >= 0.0),
        "--t-list entries must be non-negative",
    )?;
    meta.push("t-list", t_raw);

    let s = params.derive_scales();
    let mut out = meta.csv_comments();
    out.push_str("t,quantum_static,quantum_drift,classical,total\n");
    for &t in &times {
        let b = variance_total(&s, t).map_err(|e| AppError::Computation(e.to_string()))?;
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            b.quantum_static, b.quantum_drift, b.classical, b.total
        );
    }
    write_artifact(&OutputTarget::from_flag(args.output), &out)
}

fn rates(args: RatesArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("rates");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "csv")?;
    let dt = resolver.get(args.dt, "dt", 1e-3)?;
    require(dt > 0.0, format!("--dt must be positive, got {dt}"))?;
    let steps = resolver.get(args.steps, "steps", 100)?;
    require(steps >= 1, "--steps must be at least 1")?;
    let method = resolver.get(args.method, "method", "conditional".to_string())?;
    meta.push("dt", dt);
    meta.push("steps", steps);
    meta.push("method", &method);
    record_timestep_verdict(&params, dt, &mut meta);

    let s = params.derive_scales();
    let points: Vec<_> = match method.as_str() {
        "conditional" => (0..steps)
            .map(|n| rate_conditional(&s, n, dt))
            .collect::<Result<_, _>>(),
        "block" => (1..=steps)
            .map(|n| rate_block(&s, n, dt))
            .collect::<Result<_, _>>(),
        other => {
            return Err(AppError::Usage(format!(
                "--method must be conditional or block, got {other}"
            )))
        }
    }
    .map_err(|e| AppError::Computation(e.to_string()))?;

    let mut out = meta.csv_comments();
    out.push_str("n,dt,t,rate\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.n, p.dt, p.n as f64 * p.dt, p.rate);
    }
    write_artifact(&OutputTarget::from_flag(args.output), &out)
}

fn evolve(args: EvolveArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("evolve");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "json")?;
    let t = resolver.get(args.t, "t", 1.0)?;
    require(t >= 0.0, format!("--t must be non-negative, got {t}"))?;
    let grid_points = resolver.get(args.grid_points, "grid-points", 1 << 14)?;
    let span_sigmas = resolver.get(args.grid_span_sigmas, "grid-span-sigmas", 40.0)?;
    require(
        span_sigmas > 0.0,
        format!("--grid-span-sigmas must be positive, got {span_sigmas}"),
    )?;
    meta.push("t", t);
    meta.push("grid-points", grid_points);
    meta.push("grid-span-sigmas", span_sigmas);

    let s = params.derive_scales();
    let span = span_sigmas * (s.dx0 + s.dp * t / s.mass);
    let grid = SpatialGrid::new(grid_points, span).map_err(|e| AppError::Usage(e.to_string()))?;
    let state = SpectralState::initialize(&s, grid)
        .and_then(|st| st.evolve(t))
        .map_err(|e| AppError::Computation(e.to_string()))?;

    let moments = state.moments();
    let analytic = variance_total(&s, t)
        .map_err(|e| AppError::Computation(e.to_string()))?;
    let variance_analytic = analytic.quantum_static + analytic.quantum_drift;
    let mut max_err = 0.0f64;
    for (j, a) in state.amplitudes().iter().enumerate() {
        let exact = psi_exact(&s, grid.position(j), t)?;
        max_err = max_err.max((a - exact).norm());
    }

    if let Some(path) = &args.dump_psi {
        let mut out = meta.csv_comments();
        out.push_str("x,re_psi,im_psi,abs2\n");
        for (j, a) in state.amplitudes().iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", grid.position(j), a.re, a.im, a.norm_sqr());
        }
        write_artifact(&OutputTarget::File(path.clone()), &out)?;
    }

    let json = serde_json::json!({
        "meta": meta.json(),
        "t": t,
        "grid_points": grid_points,
        "grid_span": span,
        "grid_spacing": grid.spacing(),
        "norm": moments.norm,
        "norm_drift": (moments.norm - 1.0).abs(),
        "mean": moments.mean,
        "variance_grid": moments.variance,
        "variance_analytic": variance_analytic,
        "variance_rel_error": (moments.variance - variance_analytic).abs() / variance_analytic,
        "max_abs_error_vs_closed_form": max_err,
    });
    write_json(&OutputTarget::from_flag(args.output), &json)
}

fn psi_exact(s: &DerivedScales, x: f64, t: f64) -> Result<thermodiff_core::Complex64, AppError> {
    thermodiff_core::psi_closed_form(s, x, t).map_err(|e| AppError::Computation(e.to_string()))
}

struct EnsembleShape {
    dt: f64,
    steps: usize,
    particles: usize,
    seed: u64,
    scheme: Scheme,
}

fn resolve_ensemble_spec(
    resolver: &Resolver,
    dt: Option<f64>,
    steps: Option<usize>,
    particles: Option<usize>,
    seed: Option<u64>,
    scheme: Option<String>,
    meta: &mut Metadata,
) -> Result<EnsembleShape, AppError> {
    let dt = resolver.get(dt, "dt", 1e-3)?;
    require(dt > 0.0, format!("--dt must be positive, got {dt}"))?;
    let steps = resolver.get(steps, "steps", 10)?;
    require(steps >= 1, "--steps must be at least 1")?;
    let particles = resolver.get(particles, "particles", 10_000)?;
    require(particles >= 2, "--particles must be at least 2")?;
    let seed = resolver.seed(seed)?;
    let scheme_raw = resolver.get(scheme, "scheme", "full".to_string())?;
    let scheme = Scheme::from_str(&scheme_raw).map_err(AppError::Usage)?;
    meta.push("dt", dt);
    meta.push("steps", steps);
    meta.push("particles", particles);
    meta.push("seed", seed);
    meta.push("scheme", scheme.label());
    Ok(EnsembleShape {
        dt,
        steps,
        particles,
        seed,
        scheme,
    })
}

fn sample(args: SampleArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("sample");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "csv")?;
    let shape = resolve_ensemble_spec(
        resolver,
        args.dt,
        args.steps,
        args.particles,
        args.seed,
        args.scheme,
        &mut meta,
    )?;
    record_timestep_verdict(&params, shape.dt, &mut meta);

    let scales = params.derive_scales();
    let ensemble = sample_trajectories(
        &scales,
        shape.dt,
        shape.steps,
        shape.particles,
        shape.seed,
        shape.scheme,
    )
    .map_err(|e| AppError::Computation(e.to_string()))?;

    if let Some(path) = &args.stats_output {
        let stats = ensemble_stats(&ensemble);
        let mut out = meta.csv_comments();
        out.push_str("step,t,mean,var,se,var_analytic\n");
        for row in &stats.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.step, row.t, row.mean, row.variance, row.std_error, row.variance_analytic
            );
        }
        write_artifact(&OutputTarget::File(path.clone()), &out)?;
    }

    // The position dump goes to --output, or stdout when no artifact was
    // requested at all.
    if args.output.is_some() || args.stats_output.is_none() {
        let mut out = meta.csv_comments();
        out.push_str("particle,step,t,x\n");
        for particle in 0..ensemble.n_particles() {
            for step in 0..=ensemble.n_steps() {
                let _ = writeln!(
                    out,
                    "{particle},{step},{},{}",
                    ensemble.time_at(step),
                    ensemble.position(particle, step)
                );
            }
        }
        write_artifact(&OutputTarget::from_flag(args.output), &out)?;
    }
    Ok(())
}

fn estimate(args: EstimateArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("estimate");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "csv")?;
    let shape = resolve_ensemble_spec(
        resolver,
        args.dt,
        args.steps,
        args.particles,
        args.seed,
        args.scheme,
        &mut meta,
    )?;
    require(
        shape.steps >= 2,
        "--steps must be at least 2 to difference entropies",
    )?;
    let estimator_raw = resolver.get(args.estimator, "estimator", "plugin_gaussian".to_string())?;
    let k = resolver.get(args.k, "k", 4)?;
    require((1..=20).contains(&k), format!("--k must be in 1..=20, got {k}"))?;
    let estimator = match estimator_raw.replace('-', "_").as_str() {
        "plugin_gaussian" | "plugin" => EntropyEstimator::PluginGaussian,
        "nearest_neighbor" | "nn" => EntropyEstimator::NearestNeighbor { k },
        other => {
            return Err(AppError::Usage(format!(
                "--estimator must be plugin_gaussian or nearest_neighbor, got {other}"
            )))
        }
    };
    meta.push("estimator", estimator.label());
    meta.push("k", k);
    record_timestep_verdict(&params, shape.dt, &mut meta);

    let scales = params.derive_scales();
    let ensemble = sample_trajectories(
        &scales,
        shape.dt,
        shape.steps,
        shape.particles,
        shape.seed,
        shape.scheme,
    )
    .map_err(|e| AppError::Computation(e.to_string()))?;
    let points = rate_from_ensemble(&ensemble, estimator)
        .map_err(|e| AppError::Computation(e.to_string()))?;

    let mut out = meta.csv_comments();
    out.push_str("n,dt,t,rate\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.n, p.dt, p.n as f64 * p.dt, p.rate);
    }
    write_artifact(&OutputTarget::from_flag(args.output), &out)
}

fn sweep(args: SweepArgs, resolver: &Resolver) -> Result<(), AppError> {
    let mut meta = Metadata::new("sweep");
    let params = resolve_params(&args.params, resolver, &mut meta)?;
    check_format(args.format, resolver, "csv")?;
    let dt_raw = resolver
        .get_optional(args.dt_list, "dt-list")?
        .ok_or_else(|| AppError::Usage("--dt-list is required".to_string()))?;
    let n_raw = resolver
        .get_optional(args.n_list, "n-list")?
        .ok_or_else(|| AppError::Usage("--n-list is required".to_string()))?;
    let dts = parse_float_list(&dt_raw, "dt-list")?;
    let ns = parse_index_list(&n_raw, "n-list")?;
    meta.push("dt-list", &dt_raw);
    meta.push("n-list", &n_raw);

    let s = params.derive_scales();
    let supremum = s.dp / (s.mass * s.dx0);
    struct Cell {
        n: u64,
        dt: f64,
        cond: f64,
        block: f64,
    }
    let mut cells: Vec<Cell> = Vec::new();
    let mut cell_errors = 0usize;

    let mut out = meta.csv_comments();
    out.push_str("n,dt,n_dt,rate_cond,rate_block,rate_exact,gap_cond,gap_block,error\n");
    for &n in &ns {
        for &dt in &dts {
            match rate_conditional(&s, n, dt) {
                Ok(cond_point) => {
                    // block construction at n = 0 carries its elapsed-time
                    // limit, the supremum of the curve
                    let block = if n >= 1 {
                        rate_block(&s, n, dt)
                            .map_err(|e| AppError::Computation(e.to_string()))?
                            .rate
                    } else {
                        supremum
                    };
                    let cond = cond_point.rate;
                    let _ = writeln!(
                        out,
                        "{n},{dt},{},{cond},{block},{},{},{},",
                        n as f64 * dt,
                        s.rate_exact,
                        s.rate_exact - cond,
                        s.rate_exact - block
                    );
                    cells.push(Cell { n, dt, cond, block });
                }
                Err(e) => {
                    cell_errors += 1;
                    let _ = writeln!(out, "{n},{dt},{},,,,,,\"{e}\"", n as f64 * dt);
                }
            }
        }
    }

    // Monotonicity diagnostics: conditional rate decreasing in n at each
    // dt, block rate decreasing in elapsed time across the whole grid.
    let mut by_dt: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for c in &cells {
        by_dt.entry(c.dt.to_bits()).or_default().push((c.n, c.cond));
    }
    let conditional_ok = by_dt.values_mut().all(|group| {
        group.sort_by_key(|&(n, _)| n);
        group.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1)
    });
    let mut by_elapsed: Vec<(f64, f64)> = cells
        .iter()
        .map(|c| (c.n as f64 * c.dt, c.block))
        .collect();
    by_elapsed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let block_ok = by_elapsed.windows(2).all(|w| {
        let distinct = w[1].0 > w[0].0 * (1.0 + 1e-12) || (w[0].0 == 0.0 && w[1].0 > 0.0);
        !distinct || w[1].1 < w[0].1
    });

    let diagnostics = serde_json::json!({
        "cells": cells.len() + cell_errors,
        "cell_errors": cell_errors,
        "conditional_decreasing_in_n": conditional_ok,
        "block_decreasing_in_elapsed": block_ok,
    });
    let _ = writeln!(out, "# diagnostics = {diagnostics}");

    write_artifact(&OutputTarget::from_flag(args.output), &out)
}

fn accept(args: AcceptArgs, resolver: &Resolver) -> Result<i32, AppError> {
    let seed = resolver.seed(args.seed)?;
    let report = acceptance::run_acceptance(seed);
    for criterion in &report.criteria {
        println!("{}", acceptance::format_line(criterion));
    }
    println!(
        "overall: {} ({} criteria, {:.1} s)",
        if report.pass { "PASS" } else { "FAIL" },
        report.criteria.len(),
        report.total_runtime_ms / 1000.0
    );
    if let Some(path) = args.output {
        let json = serde_json::to_value(&report)
            .map_err(|e| AppError::Computation(e.to_string()))?;
        write_json(&OutputTarget::File(path), &json)?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn write_json(target: &OutputTarget, value: &serde_json::Value) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Computation(e.to_string()))?;
    text.push('\n');
    write_artifact(target, &text)
}
