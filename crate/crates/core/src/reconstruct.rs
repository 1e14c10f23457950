//! Moment-matched density reconstruction.
//!
//! The density of `W` is an atom of mass `q` at zero plus an absolutely
//! continuous part approximated as
//!
//! ```text
//! f(x) ~ q d0(x) + sum_{j=0..S} c_j L_j^{(alpha)}(beta x) (beta x)^alpha e^{-beta x}
//! ```
//!
//! The moments of each basis element against `x^i` have the closed form
//! `(-1)^j beta^{-i-1} Gamma(alpha+i+1) binom(i, j)`, so moment matching
//! reduces to a linear system whose matrix is the rectangular lower
//! triangular Pascal matrix of binomials. Rows are rescaled by their
//! maxima to tame the Pascal conditioning, `S + 1 = floor((N+1)/2)` basis
//! functions are fitted against `N + 1` moments by least squares, and the
//! alternating signs are folded back into the coefficients afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    gamma_ratio_products, log_gamma, qr_least_squares, reg_lower_incomplete_gamma, DenseMatrix,
};
use crate::series::TruncatedSeries;

/// Largest moment index before `i!` overflows a double.
pub const MAX_MOMENT_ORDER: usize = 170;

/// Moments `m_i = E[W^i]`, `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    moments: Vec<f64>,
}

impl MomentVector {
    /// Wraps a raw moment sequence; every entry must be finite and
    /// strictly positive.
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() || moments.iter().any(|m| !m.is_finite() || *m <= 0.0) {
            return Err(Error::InvalidMomentSequence);
        }
        Ok(Self { moments })
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    /// Highest moment order `N`.
    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.moments
    }

    pub fn get(&self, i: usize) -> f64 {
        self.moments[i]
    }
}

/// Moments from transform coefficients: `m_i = (-1)^i i! phi_i`.
///
/// Requires `phi_0 = 1`, `phi_1 = -1`; the order is capped at 170 where
/// the running factorial would overflow. A non-positive or non-finite
/// moment signals an unconverged solve upstream and is rejected.
pub fn moments_from_coeffs(phi: &TruncatedSeries) -> Result<MomentVector> {
    if phi.coeff(0) != 1.0 || phi.coeff(1) != -1.0 {
        return Err(Error::InvalidParameter(
            "transform coefficients must start 1, -1".into(),
        ));
    }
    let n = phi.order().min(MAX_MOMENT_ORDER);
    let mut moments = Vec::with_capacity(n + 1);
    let mut factorial = 1.0f64;
    let mut sign = 1.0f64;
    for i in 0..=n {
        if i > 0 {
            factorial *= i as f64;
            sign = -sign;
        }
        moments.push(sign * factorial * phi.coeff(i));
    }
    MomentVector::new(moments)
}

/// Generalized Laguerre polynomial `L_j^{(alpha)}(x)` by the three-term
/// recurrence.
pub fn laguerre_eval(j: usize, alpha: f64, x: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 2..=j {
        let kf = k as f64;
        let next = ((2.0 * kf + alpha - 1.0 - x) / kf) * cur - ((kf + alpha - 1.0) / kf) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Rectangular lower triangular Pascal matrix: entry `(i, j)` is
/// `binom(i, j)` for `i >= j`, built by the additive recurrence (no
/// factorials). Requires `n >= s`.
pub fn pascal_matrix(n: usize, s: usize) -> DenseMatrix {
    assert!(n >= s, "pascal matrix needs n >= s");
    let mut m = DenseMatrix::zeros(n + 1, s + 1);
    m.set(0, 0, 1.0);
    for i in 1..=n {
        m.set(i, 0, 1.0);
        for j in 1..=s.min(i) {
            let v = m.at(i - 1, j - 1) + m.at(i - 1, j);
            m.set(i, j, v);
        }
    }
    m
}

/// Right-hand side of the moment-matching system:
/// `b_0 = beta (1-q) / Gamma(alpha+1)` and
/// `b_i = beta^{i+1} (Gamma(i+1)/Gamma(alpha+i+1)) m_i / i!` for `i >= 1`
/// (note `m_i / i!` is `|phi_i|`). The Gamma ratios come from the running
/// product, so only one Gamma evaluation is needed.
pub fn rhs_vector(moments: &MomentVector, q: f64, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("rhs needs beta > 0, got {beta}")));
    }
    if !(alpha > -1.0) {
        return Err(Error::InvalidParameter(format!("rhs needs alpha > -1, got {alpha}")));
    }
    let n = moments.order();
    let ratios = gamma_ratio_products(alpha, n)?;
    let mut b = Vec::with_capacity(n + 1);
    let mut beta_pow = beta;
    let mut factorial = 1.0f64;
    for i in 0..=n {
        if i > 0 {
            beta_pow *= beta;
            factorial *= i as f64;
        }
        let mass = if i == 0 { 1.0 - q } else { moments.get(i) / factorial };
        let bi = beta_pow * ratios[i] * mass;
        if !bi.is_finite() {
            return Err(Error::RhsOverflow);
        }
        b.push(bi);
    }
    Ok(b)
}

/// Fitted density model: atom at zero plus the Laguerre expansion of the
/// continuous part. Serializes as `{"q":..,"alpha":..,"beta":..,"coeffs":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    #[serde(rename = "q")]
    pub atom_q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub coeffs: Vec<f64>,
}

/// Moment-matched fit: `S + 1 = floor((N+1)/2)` coefficients from `N + 1`
/// moments via the row-scaled Pascal least-squares system, with
/// `c_j = (-1)^j y_j`.
pub fn fit_density(moments: &MomentVector, q: f64, alpha: f64, beta: f64) -> Result<DensityModel> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("fit needs 0 <= q < 1, got {q}")));
    }
    let n = moments.order();
    let s_plus_1 = (n + 2) / 2; // floor((N+1)/2)
    if s_plus_1 < 1 || n + 1 < s_plus_1 {
        return Err(Error::InvalidParameter("too few moments to fit".into()));
    }
    let s = s_plus_1 - 1;
    let m = pascal_matrix(n, s);
    let b = rhs_vector(moments, q, alpha, beta)?;

    // Row scaling by the maximum over the retained columns.
    let mut scaled = DenseMatrix::zeros(n + 1, s + 1);
    let mut b_scaled = vec![0.0; n + 1];
    for i in 0..=n {
        let mut row_max = 0.0f64;
        for j in 0..=s.min(i) {
            row_max = row_max.max(m.at(i, j));
        }
        debug_assert!(row_max >= 1.0);
        for j in 0..=s {
            scaled.set(i, j, m.at(i, j) / row_max);
        }
        b_scaled[i] = b[i] / row_max;
    }

    let mut y = qr_least_squares(&scaled, &b_scaled)?;

    // One step of least-squares refinement: re-solve against the residual
    // to shave the rounding floor left by the ill-conditioned triangle.
    let r: Vec<f64> = scaled
        .matvec(&y)
        .iter()
        .zip(&b_scaled)
        .map(|(ay, bi)| bi - ay)
        .collect();
    if let Ok(correction) = qr_least_squares(&scaled, &r) {
        for (yi, ci) in y.iter_mut().zip(&correction) {
            *yi += ci;
        }
    }

    let coeffs: Vec<f64> =
        y.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -*v }).collect();
    Ok(DensityModel { atom_q: q, alpha, beta, coeffs })
}

impl DensityModel {
    /// Continuous part of the density at `x > 0`. Truncated expansions can
    /// dip below zero; the raw value is returned unclamped.
    pub fn density_at(&self, x: f64) -> f64 {
        let u = self.beta * x;
        let weight = u.powf(self.alpha) * (-u).exp();
        let series: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * laguerre_eval(j, self.alpha, u))
            .sum();
        series * weight
    }

    /// Total mass of the continuous part, `c_0 Gamma(alpha+1) / beta`
    /// (every higher basis element integrates to zero by orthogonality).
    pub fn continuous_mass(&self) -> f64 {
        let lg = log_gamma(self.alpha + 1.0).expect("alpha > -1");
        self.coeffs.first().copied().unwrap_or(0.0) * lg.exp() / self.beta
    }

    /// Deviation of the total mass `q + continuous` from one.
    pub fn mass_defect(&self) -> f64 {
        self.atom_q + self.continuous_mass() - 1.0
    }

    /// Distribution function `q + integral of the continuous part`,
    /// clamped to `[0, 1]`. Evaluated term by term through regularized
    /// incomplete gamma functions, which handles the integrable
    /// singularity at zero for `alpha < 0` exactly.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.atom_q;
        }
        CdfEvaluator::new(self).value(x)
    }

    /// Conditional quantile of `W | W > 0`: the smallest `x` where the
    /// monotonized conditional CDF reaches `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie in (0,1), got {p}"
            )));
        }
        let eval = CdfEvaluator::new(self);
        let q = self.atom_q;
        let cond = |x: f64| ((eval.value(x) - q) / (1.0 - q)).clamp(0.0, 1.0);

        // Grow the bracket until the conditional CDF clears p.
        let mut hi = 1.0 / self.beta;
        let mut tries = 0;
        while cond(hi) <= p {
            hi *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::InvalidParameter(
                    "quantile bracket did not close; model mass may be deficient".into(),
                ));
            }
        }

        // Locate the first crossing on a grid under the running maximum,
        // so small non-monotone dips cannot pull the bisection backwards.
        const SCAN: usize = 1024;
        let mut lo = 0.0f64;
        let mut running = 0.0f64;
        let mut bracket_hi = hi;
        for i in 1..=SCAN {
            let x = hi * i as f64 / SCAN as f64;
            let v = cond(x);
            running = running.max(v);
            if running >= p {
                bracket_hi = x;
                break;
            }
            lo = x;
        }
        let mut a = lo;
        let mut b = bracket_hi;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let v = cond(mid);
            if (v - p).abs() <= 1e-12 {
                return Ok(mid);
            }
            if v < p {
                a = mid;
            } else {
                b = mid;
            }
            if (b - a) <= f64::EPSILON * b.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Precomputed per-power weights for the analytic CDF.
///
/// Expanding each `L_j^{(alpha)}` into monomials and integrating term by
/// term collapses the double sum over `(j, k)` into one weight per power
/// `k`:
///
/// ```text
/// F(x) = q + (1/beta) sum_k (-1)^k A_k P(alpha+k+1, beta x),
/// A_k  = sum_{j>=k} c_j exp(lnG(j+alpha+1) - lnG(j-k+1) - lnG(k+1))
/// ```
///
/// The weights are exact in log space; only `(-1)^k` carries sign.
struct CdfEvaluator {
    atom_q: f64,
    alpha: f64,
    beta: f64,
    weights: Vec<f64>,
}

impl CdfEvaluator {
    fn new(model: &DensityModel) -> Self {
        let s = model.coeffs.len().saturating_sub(1);
        let lg = |x: f64| log_gamma(x).expect("positive argument");
        let mut weights = vec![0.0f64; s + 1];
        for (k, w) in weights.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, c) in model.coeffs.iter().enumerate().skip(k) {
                let ln_term = lg(j as f64 + model.alpha + 1.0)
                    - lg((j - k) as f64 + 1.0)
                    - lg(k as f64 + 1.0);
                acc += c * ln_term.exp();
            }
            *w = if k % 2 == 0 { acc } else { -acc };
        }
        Self { atom_q: model.atom_q, alpha: model.alpha, beta: model.beta, weights }
    }

    fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.atom_q;
        }
        let u = self.beta * x;
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let p = reg_lower_incomplete_gamma(self.alpha + k as f64 + 1.0, u)
                .expect("valid incomplete gamma arguments");
            acc += w * p;
        }
        (self.atom_q + acc / self.beta).clamp(0.0, 1.0)
    }
}

/// Closed-form moment of one basis element:
/// `integral x^i (beta x)^alpha L_j^{(alpha)}(beta x) e^{-beta x} dx
///  = (-1)^j beta^{-i-1} Gamma(alpha+i+1) binom(i, j)` for `i >= j`,
/// zero above the diagonal.
pub fn basis_moment(i: usize, j: usize, alpha: f64, beta: f64) -> Result<f64> {
    if i < j {
        return Ok(0.0);
    }
    let ln_binom = log_gamma(i as f64 + 1.0)?
        - log_gamma(j as f64 + 1.0)?
        - log_gamma((i - j) as f64 + 1.0)?;
    let ln_mag = log_gamma(alpha + i as f64 + 1.0)? - (i as f64 + 1.0) * beta.ln() + ln_binom;
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * ln_mag.exp())
}
