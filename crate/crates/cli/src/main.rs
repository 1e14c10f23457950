//! Command-line front end for the gwlimit library.
//!
//! Subcommands cover the full pipeline: `solve` the functional equation,
//! `density` to fit the distribution of W, `simulate` the process,
//! `predict` future population sizes, `establish`ment-time densities,
//! and `moments` of W or of the k-ancestor sum. Curves are written as
//! CSV, models and reports as JSON, and every run leaves a manifest
//! recording the resolved parameters and output files.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical
//! non-convergence (artifacts are still written).

mod commands;
mod manifest;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gwlimit", version, about = "Density of the Galton-Watson growth limit W")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every pipeline command.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Offspring p.g.f. as JSON ({"type":"polynomial","p":[..]} or
    /// {"type":"linear_fractional","b":..,"c":..}).
    #[arg(long)]
    pgf: PathBuf,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Monte-Carlo replicates.
    #[arg(long = "sim-reps", default_value_t = 100_000)]
    sim_reps: usize,
    /// Generations to simulate.
    #[arg(long = "sim-gens", default_value_t = 12)]
    sim_gens: u32,
    /// RNG seed; identical seeds give bit-identical outputs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histogram bin count.
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Lower fraction of the occupied range entering the tail fit.
    #[arg(long = "tail-lo", default_value_t = 0.7)]
    tail_lo: f64,
    /// Upper fraction of the occupied range entering the tail fit.
    #[arg(long = "tail-hi", default_value_t = 1.0)]
    tail_hi: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the functional equation for the transform coefficients.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// forward | fixed | newton
        #[arg(long, default_value = "newton")]
        method: String,
        /// Truncation order N.
        #[arg(long, default_value_t = 80)]
        order: usize,
        /// Residual tolerance (defaults: 1e-14 newton, 1e-8 otherwise).
        #[arg(long)]
        tol: Option<f64>,
        /// Iteration cap (defaults: 50 newton, 10000 fixed).
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Fit the density of W: solve, convert to moments, estimate or take
    /// beta, and perform the moment-matched fit.
    Density {
        #[command(flatten)]
        common: CommonArgs,
        /// forward | fixed | newton (default: newton, or forward for
        /// linear-fractional input).
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value_t = 80)]
        order: usize,
        /// Tail rate; skips the calibration simulation.
        #[arg(long)]
        beta: Option<f64>,
        /// Points in the exported density/CDF grid.
        #[arg(long, default_value_t = 500)]
        grid: usize,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate the process and export W-samples and their histogram.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Prediction interval (and optional exceedance probability) for Z_n.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// Fitted model JSON produced by `density`.
        #[arg(long)]
        model: PathBuf,
        /// Generation index n.
        #[arg(long)]
        n: u32,
        /// Interval coverage in (0,1).
        #[arg(long, default_value_t = 0.9)]
        level: f64,
        /// Threshold for P(Z_n >= K | survival).
        #[arg(long = "K")]
        threshold: Option<f64>,
    },
    /// Establishment-time density for a threshold K.
    Establish {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "K")]
        threshold: f64,
        /// Time grid as lo:hi:points.
        #[arg(long = "t-grid", default_value = "-20:60:801")]
        t_grid: String,
    },
    /// Moments of W, or of the k-ancestor sum W(k).
    Moments {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 80)]
        order: usize,
        #[arg(long)]
        method: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let outcome = match cli.command {
        Command::Solve { common, method, order, tol, max_iters } => {
            commands::solve(&common, &method, order, tol, max_iters)
        }
        Command::Density { common, method, order, beta, grid, sim } => {
            commands::density(&common, method.as_deref(), order, beta, grid, &sim)
        }
        Command::Simulate { common, sim } => commands::simulate(&common, &sim),
        Command::Predict { common, model, n, level, threshold } => {
            commands::predict(&common, &model, n, level, threshold)
        }
        Command::Establish { common, model, threshold, t_grid } => {
            commands::establish(&common, &model, threshold, &t_grid)
        }
        Command::Moments { common, k, order, method } => {
            commands::moments(&common, k, order, method.as_deref())
        }
    };

    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
