//! Seeded Monte-Carlo simulation of the branching process.
//!
//! Each replicate runs the population recursion for `T` generations with
//! per-individual offspring draws and records `Z_T / m^T`. Replicate `r`
//! draws from an independent ChaCha stream selected by `(seed, r)`, so
//! results are bit-identical regardless of how many worker threads rayon
//! uses. The exponential tail rate `beta` is estimated by ordinary least
//! squares on the log-density of histogram tail bins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gwmodel::Pgf;

/// Hard cap on the population within one replicate; hitting it aborts the
/// run rather than extrapolating.
pub const POPULATION_CAP: u64 = 1_000_000_000;

/// Replicate count, horizon, seed, and histogram/tail-fit settings.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    /// Number of replicates `M`.
    pub replicates: usize,
    /// Number of generations `T`.
    pub generations: u32,
    pub seed: u64,
    /// Histogram bin count over the positive samples.
    pub bins: usize,
    /// Fractions `(lo, hi)` of the occupied range whose bins enter the
    /// tail regression.
    pub tail_fit_range: (f64, f64),
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            replicates: 100_000,
            generations: 12,
            seed: 0,
            bins: 100,
            tail_fit_range: (0.7, 1.0),
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.replicates < 100 {
            return Err(Error::InvalidParameter("need at least 100 replicates".into()));
        }
        if self.generations < 1 {
            return Err(Error::InvalidParameter("need at least 1 generation".into()));
        }
        let (lo, hi) = self.tail_fit_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail fit range must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})"
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter("need at least 2 bins".into()));
        }
        Ok(())
    }
}

/// Uniform-width histogram.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    /// `bins + 1` edges spanning `[0, max sample]`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn from_positive_samples(samples: &[f64], bins: usize) -> Self {
        let max = samples.iter().copied().fold(0.0f64, f64::max);
        if samples.is_empty() || max <= 0.0 {
            return Self { edges: vec![0.0, 1.0], counts: vec![0; 1] };
        }
        let width = max / bins as f64;
        let mut counts = vec![0u64; bins];
        for &w in samples {
            let idx = ((w / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        Self { edges, counts }
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }
}

/// Tail-rate regression result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    /// Negated slope of log density against bin centers.
    pub beta_hat: f64,
    pub r2: f64,
}

/// Simulation output: one W-sample per replicate (zeros from extinct
/// lines included), the survivor histogram, and the tail fit when it
/// succeeded.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub w_samples: Vec<f64>,
    pub survived_fraction: f64,
    pub histogram: Histogram,
    pub tail_fit: Option<TailFit>,
}

enum OffspringSampler {
    /// Cumulative probabilities for a finite-support law.
    Table(Vec<f64>),
    /// Linear-fractional law: atom at zero plus a geometric tail.
    Geometric { p0: f64, b: f64, c: f64, ln_c: f64 },
}

impl OffspringSampler {
    fn new(pgf: &Pgf) -> Self {
        match pgf.polynomial_coeffs() {
            Some(p) => {
                let mut acc = 0.0;
                Self::Table(
                    p.iter()
                        .map(|&v| {
                            acc += v;
                            acc
                        })
                        .collect(),
                )
            }
            None => {
                let (b, c) = pgf.linear_fractional_params().expect("linear-fractional");
                Self::Geometric { p0: pgf.eval(0.0), b, c, ln_c: c.ln() }
            }
        }
    }

    #[inline]
    fn draw(&self, u: f64) -> u64 {
        match self {
            Self::Table(cum) => {
                for (j, &edge) in cum.iter().enumerate() {
                    if u < edge {
                        return j as u64;
                    }
                }
                (cum.len() - 1) as u64
            }
            Self::Geometric { p0, b, c, ln_c } => {
                if u < *p0 {
                    return 0;
                }
                // Invert the geometric tail p_i = b c^{i-1}: smallest k
                // with p0 + b (1 - c^k) / (1-c) > u.
                let v = (u - p0) * (1.0 - c) / b;
                let mut w = 1.0 - v;
                if w <= 0.0 {
                    w = f64::MIN_POSITIVE;
                }
                let k = (w.ln() / ln_c).floor() as u64 + 1;
                k.max(1)
            }
        }
    }
}

fn run_replicate(
    sampler: &OffspringSampler,
    generations: u32,
    seed: u64,
    replicate: u64,
) -> Result<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let mut z: u64 = 1;
    for _ in 0..generations {
        if z == 0 {
            break;
        }
        let mut next: u64 = 0;
        for _ in 0..z {
            next += sampler.draw(rng.gen::<f64>());
            if next > POPULATION_CAP {
                return Err(Error::PopulationCapExceeded);
            }
        }
        z = next;
    }
    Ok(z)
}

/// Simulates `M` replicates of the process and returns the rescaled
/// terminal populations `Z_T / m^T`, the survivor histogram, and the
/// tail-rate fit (absent when the regression is underdetermined).
pub fn simulate_w(pgf: &Pgf, cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let m = pgf.mean();
    if m <= 1.0 {
        return Err(Error::NotSupercritical);
    }
    let sampler = OffspringSampler::new(pgf);
    let norm = m.powi(cfg.generations as i32);

    let finals: Vec<u64> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(&sampler, cfg.generations, cfg.seed, r))
        .collect::<Result<Vec<u64>>>()?;

    let w_samples: Vec<f64> = finals.iter().map(|&z| z as f64 / norm).collect();
    let survived = finals.iter().filter(|&&z| z > 0).count();
    let survived_fraction = survived as f64 / cfg.replicates as f64;

    let positives: Vec<f64> = w_samples.iter().copied().filter(|&w| w > 0.0).collect();
    let histogram = Histogram::from_positive_samples(&positives, cfg.bins);
    let tail_fit = estimate_beta(&w_samples, cfg.bins, cfg.tail_fit_range)
        .ok()
        .map(|(beta_hat, r2)| TailFit { beta_hat, r2 });

    Ok(SimOutput { w_samples, survived_fraction, histogram, tail_fit })
}

/// Tail-rate estimate: histogram the strictly positive samples, keep the
/// nonzero bins whose centers lie in the `(lo, hi)` fraction of
/// `[0, max]`, and regress log density on the centers. Returns
/// `(beta_hat, r2)` with `beta_hat` the negated slope.
pub fn estimate_beta(samples: &[f64], bins: usize, fit_range: (f64, f64)) -> Result<(f64, f64)> {
    let positives: Vec<f64> = samples.iter().copied().filter(|&w| w > 0.0).collect();
    if positives.len() < 100 {
        return Err(Error::TailFitUnderdetermined(format!(
            "need >= 100 positive samples, got {}",
            positives.len()
        )));
    }
    let (lo, hi) = fit_range;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail fit range must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})"
        )));
    }
    let hist = Histogram::from_positive_samples(&positives, bins);
    let max = *hist.edges.last().unwrap();
    let width = hist.bin_width();
    let n = positives.len() as f64;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &count) in hist.counts.iter().enumerate() {
        let center = (i as f64 + 0.5) * width;
        if count == 0 || center < lo * max || center > hi * max {
            continue;
        }
        xs.push(center);
        ys.push((count as f64 / (n * width)).ln());
    }
    if xs.len() < 3 {
        return Err(Error::TailFitUnderdetermined(format!(
            "only {} nonzero bins in the fit range",
            xs.len()
        )));
    }

    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = mean_y + slope * (x - mean_x);
            (y - fit) * (y - fit)
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };

    let beta_hat = -slope;
    if !(beta_hat > 0.0) {
        return Err(Error::TailFitUnderdetermined(format!(
            "tail slope is not negative (beta_hat = {beta_hat})"
        )));
    }
    Ok((beta_hat, r2))
}
