//! Applied quantities derived from a fitted density of W: the
//! establishment-time distribution, prediction intervals and exceedance
//! probabilities for future population sizes, and moments of the limit
//! started from several ancestors.
//!
//! Everything is conditional on non-extinction: with `f` the density of
//! `W` and `q` the atom at zero, `f+(w) = f(w) / (1-q)` and `F+` is the
//! corresponding distribution function.

use crate::error::{Error, Result};
use crate::reconstruct::{DensityModel, MomentVector};

/// Establishment threshold query against a fitted model.
///
/// The time at which the population first reaches size `K` is
/// approximated by the continuous variable
/// `tau = (log K - log W) / log m`; larger `W` means earlier
/// establishment.
#[derive(Debug, Clone, Copy)]
pub struct EstablishmentQuery<'a> {
    pub model: &'a DensityModel,
    /// Mean offspring number of the underlying process.
    pub m: f64,
    /// Threshold population size `K`.
    pub threshold: f64,
}

impl EstablishmentQuery<'_> {
    /// Density of the establishment time at `t`:
    /// `f+(K m^{-t}) K m^{-t} ln m`. Returned raw; `t` may be negative.
    pub fn density(&self, t: f64) -> f64 {
        let w = self.threshold * self.m.powf(-t);
        let f_plus = self.model.density_at(w) / (1.0 - self.model.atom_q);
        f_plus * w * self.m.ln()
    }

    /// `P(tau <= t | W > 0) = 1 - F+(K m^{-t})`.
    pub fn cdf(&self, t: f64) -> f64 {
        let w = self.threshold * self.m.powf(-t);
        let q = self.model.atom_q;
        let f_plus = ((self.model.cdf_at(w) - q) / (1.0 - q)).clamp(0.0, 1.0);
        1.0 - f_plus
    }
}

/// Prediction interval for the population size `Z_n` conditional on
/// survival: `[m^n Q_{(1-level)/2}, m^n Q_{1-(1-level)/2}]` with `Q_p`
/// the conditional quantiles of `W | W > 0`.
pub fn prediction_interval(
    model: &DensityModel,
    m: f64,
    n: u32,
    level: f64,
) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "prediction level must lie in (0,1), got {level}"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    let scale = m.powi(n as i32);
    let lo = scale * model.quantile(tail)?;
    let hi = scale * model.quantile(1.0 - tail)?;
    Ok((lo, hi))
}

/// `P(Z_n >= K | W > 0) ~ 1 - F+(K / m^n)`.
pub fn exceedance_probability(model: &DensityModel, m: f64, n: u32, k: f64) -> f64 {
    let w = k / m.powi(n as i32);
    let q = model.atom_q;
    let f_plus = ((model.cdf_at(w) - q) / (1.0 - q)).clamp(0.0, 1.0);
    1.0 - f_plus
}

/// Moments of `W(k) = W_1 + ... + W_k`, the limit started from `k`
/// independent ancestors, by the binomial convolution
/// `m^{(j)}_n = sum_i binom(n, i) m^{(j-1)}_i m_{n-i}` applied `k - 1`
/// times. The atom of `W(k)` at zero is `q^k`; only the moments are
/// produced here.
pub fn moments_of_sum(moments: &MomentVector, k: u32) -> Result<MomentVector> {
    if k < 1 {
        return Err(Error::InvalidParameter("need k >= 1 ancestors".into()));
    }
    let n = moments.order();
    let base = moments.values();
    let mut acc: Vec<f64> = base.to_vec();
    for _ in 1..k {
        let mut next = vec![0.0f64; n + 1];
        for (order, slot) in next.iter_mut().enumerate() {
            let mut binom = 1.0f64;
            let mut sum = 0.0f64;
            for i in 0..=order {
                sum += binom * acc[i] * base[order - i];
                binom *= (order - i) as f64 / (i + 1) as f64;
            }
            if !sum.is_finite() {
                return Err(Error::MomentOverflow);
            }
            *slot = sum;
        }
        acc = next;
    }
    MomentVector::new(acc).map_err(|_| Error::MomentOverflow)
}
