//! Implementations of the CLI subcommands.
//!
//! Each command returns a process exit code: 0 on success, 2 when a
//! numerical routine failed to converge (artifacts are still written);
//! input and usage failures bubble up as errors and exit 1.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use std::path::Path;

use gwlimit::applications::{exceedance_probability, moments_of_sum, EstablishmentQuery};
use gwlimit::poincare::{self, Method, SolveReport, SolverConfig};
use gwlimit::reconstruct::{fit_density, moments_from_coeffs, DensityModel, MomentVector};
use gwlimit::simulate::{simulate_w, SimConfig};
use gwlimit::{Pgf, TruncatedSeries};

use crate::manifest::ManifestBuilder;
use crate::output::{read_json, read_pgf, write_csv, write_json};
use crate::{CommonArgs, SimArgs};

/// Mass threshold above which a linear-fractional truncation deserves a
/// warning on stderr.
const TRUNCATION_WARN: f64 = 1e-12;

fn parse_method(name: &str) -> Result<Method> {
    match name {
        "forward" => Ok(Method::Forward),
        "fixed" => Ok(Method::FixedPoint),
        "newton" => Ok(Method::Newton),
        other => bail!("unknown method '{other}' (expected forward | fixed | newton)"),
    }
}

fn solver_config(method: Method, order: usize, tol: Option<f64>, max_iters: Option<usize>) -> SolverConfig {
    let mut cfg = match method {
        Method::Forward => SolverConfig::forward(),
        Method::FixedPoint => SolverConfig::fixed_point(),
        Method::Newton => SolverConfig::newton(),
    }
    .with_order(order);
    if let Some(t) = tol {
        cfg = cfg.with_tol(t);
    }
    if let Some(iters) = max_iters {
        cfg = cfg.with_max_iters(iters);
    }
    cfg
}

fn run_solver(pgf: &Pgf, method: Method, cfg: &SolverConfig) -> Result<SolveReport> {
    let report = match method {
        Method::Forward => poincare::solve_forward(pgf, cfg),
        Method::FixedPoint => poincare::solve_fixed_point(pgf, cfg),
        Method::Newton => poincare::solve_newton(pgf, cfg),
    }?;
    if let Some(deficit) = report.truncation_deficit {
        if deficit > TRUNCATION_WARN {
            eprintln!(
                "warning: linear-fractional p.g.f. truncated to {} terms for the iterative \
                 solver; discarded offspring mass {deficit:e}",
                cfg.order
            );
        }
    }
    Ok(report)
}

#[derive(Serialize)]
struct SolveReportJson<'a> {
    method: Method,
    order: usize,
    tol: f64,
    iterations: usize,
    final_residual: f64,
    converged: bool,
    residual_history: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_deficit: Option<f64>,
}

fn write_phi_csv(dir: &Path, phi: &TruncatedSeries) -> Result<std::path::PathBuf> {
    write_csv(
        dir,
        "phi.csv",
        "index,coefficient",
        phi.coeffs().iter().enumerate().map(|(j, c)| format!("{j},{c}")),
    )
}

pub fn solve(
    common: &CommonArgs,
    method: &str,
    order: usize,
    tol: Option<f64>,
    max_iters: Option<usize>,
) -> Result<u8> {
    let method = parse_method(method)?;
    let pgf = read_pgf(&common.pgf)?;
    let cfg = solver_config(method, order, tol, max_iters);
    let report = run_solver(&pgf, method, &cfg)?;

    let mut manifest = ManifestBuilder::new(
        "solve",
        &common.pgf,
        json!({"method": method, "order": order, "tol": cfg.tol, "max_iters": cfg.max_iters}),
    );
    manifest.add_output(write_phi_csv(&common.out, &report.phi)?);
    manifest.add_output(write_json(
        &common.out,
        "report.json",
        &SolveReportJson {
            method,
            order,
            tol: cfg.tol,
            iterations: report.iterations,
            final_residual: report.final_residual,
            converged: report.converged,
            residual_history: &report.residual_history,
            truncation_deficit: report.truncation_deficit,
        },
    )?);
    manifest.write(&common.out)?;

    println!(
        "{}",
        json!({
            "method": method,
            "iterations": report.iterations,
            "residual": report.final_residual,
            "converged": report.converged,
        })
    );
    Ok(if report.converged { 0 } else { 2 })
}

/// Default solver choice: Newton for polynomials, forward substitution
/// for linear-fractional input (which it handles without truncation).
fn default_method(pgf: &Pgf) -> Method {
    if pgf.is_polynomial() {
        Method::Newton
    } else {
        Method::Forward
    }
}

fn sim_config(sim: &SimArgs) -> SimConfig {
    SimConfig {
        replicates: sim.sim_reps,
        generations: sim.sim_gens,
        seed: sim.seed,
        bins: sim.bins,
        tail_fit_range: (sim.tail_lo, sim.tail_hi),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn density(
    common: &CommonArgs,
    method: Option<&str>,
    order: usize,
    beta_flag: Option<f64>,
    grid: usize,
    sim: &SimArgs,
) -> Result<u8> {
    let pgf = read_pgf(&common.pgf)?;
    let inv = pgf.invariants()?;
    let method = match method {
        Some(name) => parse_method(name)?,
        None => default_method(&pgf),
    };
    let cfg = solver_config(method, order, None, None);
    let report = run_solver(&pgf, method, &cfg)?;
    let mut exit = if report.converged { 0 } else { 2 };
    if !report.converged {
        eprintln!(
            "warning: solver did not reach tolerance (residual {:e}); continuing with best iterate",
            report.final_residual
        );
    }
    let moments = moments_from_coeffs(&report.phi)?;

    let (beta, beta_source) = match beta_flag {
        Some(b) => {
            if !(b > 0.0) {
                bail!("--beta must be positive, got {b}");
            }
            (b, "user".to_string())
        }
        None => {
            let out = simulate_w(&pgf, &sim_config(sim))?;
            let fit = out
                .tail_fit
                .ok_or_else(|| anyhow!("tail fit failed; supply --beta explicitly"))?;
            (fit.beta_hat, "estimated".to_string())
        }
    };

    let model = fit_density(&moments, inv.q, inv.alpha, beta)?;
    let defect = model.mass_defect();
    if defect.abs() > 1e-3 {
        eprintln!("warning: fitted density mass deviates from 1 by {defect:e}");
    }

    if grid < 2 {
        bail!("--grid must be at least 2");
    }
    let x_max = model.quantile(0.999)?;
    let xs: Vec<f64> = (1..=grid).map(|i| x_max * i as f64 / grid as f64).collect();

    let mut manifest = ManifestBuilder::new(
        "density",
        &common.pgf,
        json!({
            "method": method, "order": order, "beta": beta, "beta_source": beta_source,
            "grid": grid, "seed": sim.seed, "sim_reps": sim.sim_reps, "sim_gens": sim.sim_gens,
            "bins": sim.bins, "tail_range": [sim.tail_lo, sim.tail_hi],
        }),
    );
    manifest.add_output(write_json(&common.out, "model.json", &model)?);
    manifest.add_output(write_csv(
        &common.out,
        "density.csv",
        "x,density",
        xs.iter().map(|&x| format!("{x},{}", model.density_at(x))),
    )?);
    manifest.add_output(write_csv(
        &common.out,
        "cdf.csv",
        "x,cdf",
        xs.iter().map(|&x| format!("{x},{}", model.cdf_at(x))),
    )?);
    manifest.write(&common.out)?;

    println!(
        "{}",
        json!({
            "q": inv.q,
            "alpha": inv.alpha,
            "beta": beta,
            "beta_source": beta_source,
            "mass_defect": defect,
            "solver_converged": report.converged,
        })
    );
    if defect.abs() > 1e-3 {
        exit = exit.max(2);
    }
    Ok(exit)
}

pub fn simulate(common: &CommonArgs, sim: &SimArgs) -> Result<u8> {
    let pgf = read_pgf(&common.pgf)?;
    let cfg = sim_config(sim);
    let out = simulate_w(&pgf, &cfg)?;

    let mut manifest = ManifestBuilder::new(
        "simulate",
        &common.pgf,
        json!({
            "replicates": cfg.replicates, "generations": cfg.generations, "seed": cfg.seed,
            "bins": cfg.bins, "tail_range": [cfg.tail_fit_range.0, cfg.tail_fit_range.1],
        }),
    );
    manifest.add_output(write_csv(
        &common.out,
        "wsamples.csv",
        "w",
        out.w_samples.iter().map(|w| format!("{w}")),
    )?);
    let hist = &out.histogram;
    manifest.add_output(write_csv(
        &common.out,
        "histogram.csv",
        "bin_lo,bin_hi,count",
        hist.counts
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{},{},{c}", hist.edges[i], hist.edges[i + 1])),
    )?);
    manifest.write(&common.out)?;

    println!(
        "{}",
        json!({
            "survived_fraction": out.survived_fraction,
            "beta_hat": out.tail_fit.map(|f| f.beta_hat),
            "r2": out.tail_fit.map(|f| f.r2),
        })
    );
    Ok(0)
}

pub fn predict(
    common: &CommonArgs,
    model_path: &Path,
    n: u32,
    level: f64,
    threshold: Option<f64>,
) -> Result<u8> {
    let pgf = read_pgf(&common.pgf)?;
    let model: DensityModel = read_json(model_path)?;
    let m = pgf.mean();
    let (lo, hi) = gwlimit::applications::prediction_interval(&model, m, n, level)?;
    let exceedance = threshold.map(|k| {
        json!({"K": k, "probability": exceedance_probability(&model, m, n, k)})
    });

    let mut manifest = ManifestBuilder::new(
        "predict",
        &common.pgf,
        json!({"model": model_path.display().to_string(), "n": n, "level": level, "K": threshold}),
    );
    let result = json!({
        "n": n,
        "level": level,
        "m": m,
        "interval": [lo, hi],
        "exceedance": exceedance,
    });
    manifest.add_output(write_json(&common.out, "prediction.json", &result)?);
    manifest.write(&common.out)?;

    println!("{result}");
    Ok(0)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("--t-grid expects lo:hi:points, got '{spec}'");
    }
    let lo: f64 = parts[0].parse().context("grid lower bound")?;
    let hi: f64 = parts[1].parse().context("grid upper bound")?;
    let points: usize = parts[2].parse().context("grid point count")?;
    if !(hi > lo) || points < 2 {
        bail!("--t-grid needs lo < hi and at least 2 points");
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

pub fn establish(
    common: &CommonArgs,
    model_path: &Path,
    threshold: f64,
    t_grid: &str,
) -> Result<u8> {
    if !(threshold > 0.0) {
        bail!("--K must be positive");
    }
    let pgf = read_pgf(&common.pgf)?;
    let model: DensityModel = read_json(model_path)?;
    let m = pgf.mean();
    if m <= 1.0 {
        bail!("mean offspring <= 1");
    }
    let ts = parse_grid(t_grid)?;
    let query = EstablishmentQuery { model: &model, m, threshold };

    let mut manifest = ManifestBuilder::new(
        "establish",
        &common.pgf,
        json!({"model": model_path.display().to_string(), "K": threshold, "t_grid": t_grid}),
    );
    manifest.add_output(write_csv(
        &common.out,
        "tau_density.csv",
        "t,density",
        ts.iter().map(|&t| format!("{t},{}", query.density(t))),
    )?);

    // Discrete establishment p.m.f. by integrating over unit intervals,
    // clipped at generation zero.
    let n_lo = ts.first().copied().unwrap_or(0.0).ceil().max(0.0) as i64;
    let n_hi = ts.last().copied().unwrap_or(0.0).floor().max(0.0) as i64;
    let pmf_rows: Vec<String> = (n_lo..=n_hi)
        .map(|n| {
            let p = if n == 0 {
                query.cdf(0.0)
            } else {
                query.cdf(n as f64) - query.cdf(n as f64 - 1.0)
            };
            format!("{n},{p}")
        })
        .collect();
    manifest.add_output(write_csv(&common.out, "tau_pmf.csv", "n,probability", pmf_rows)?);
    manifest.write(&common.out)?;
    Ok(0)
}

pub fn moments(common: &CommonArgs, k: u32, order: usize, method: Option<&str>) -> Result<u8> {
    if k < 1 {
        bail!("--k must be at least 1");
    }
    let pgf = read_pgf(&common.pgf)?;
    let method = match method {
        Some(name) => parse_method(name)?,
        None => default_method(&pgf),
    };
    let cfg = solver_config(method, order, None, None);
    let report = run_solver(&pgf, method, &cfg)?;
    let exit = if report.converged { 0 } else { 2 };
    let base = moments_from_coeffs(&report.phi)?;
    let result: MomentVector = moments_of_sum(&base, k)?;
    let q = pgf.extinction_probability()?;
    let atom = q.powi(k as i32);

    let mut manifest = ManifestBuilder::new(
        "moments",
        &common.pgf,
        json!({"k": k, "order": order, "method": method, "atom": atom}),
    );
    manifest.add_output(write_csv(
        &common.out,
        "moments.csv",
        "i,moment",
        result.values().iter().enumerate().map(|(i, m)| format!("{i},{m}")),
    )?);
    manifest.write(&common.out)?;

    println!("{}", json!({"k": k, "atom": atom, "solver_converged": report.converged}));
    Ok(exit)
}
