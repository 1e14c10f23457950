//! Special functions and small dense linear algebra for the density
//! reconstruction: log-gamma, regularized lower incomplete gamma,
//! stable Gamma-ratio products, Householder QR least squares, and
//! forward substitution on lower triangular systems.
//!
//! Everything here is implemented in-repo so results are reproducible
//! bit-for-bit across platforms without linking a math library.

use crate::error::{Error, Result};

/// Auxiliary constant for `log_gamma` (Lanczos g parameter).
const LANCZOS_R: f64 = 10.900511;

/// Lanczos partial-fraction coefficients; see Pugh, "An Analysis of the
/// Lanczos Gamma Approximation" (2004), p. 116.
const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

const LN_2_SQRT_E_OVER_PI: f64 = 0.6207822376352452223455184457816472122518527279025978;
const LN_PI: f64 = 1.1447298858494001741434273513530587116472948129153;

/// Natural log of the Gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("log_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        // Reflection keeps the partial fraction well conditioned near 0.
        let s: f64 = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |s, (i, d)| s + d / (i as f64 - x));
        Ok(LN_PI
            - (std::f64::consts::PI * x).sin().ln()
            - s.ln()
            - LN_2_SQRT_E_OVER_PI
            - (0.5 - x) * ((0.5 - x + LANCZOS_R) / std::f64::consts::E).ln())
    } else {
        let s: f64 = LANCZOS_DK
            .iter()
            .enumerate()
            .skip(1)
            .fold(LANCZOS_DK[0], |s, (i, d)| s + d / (x + i as f64 - 1.0));
        Ok(s.ln()
            + LN_2_SQRT_E_OVER_PI
            + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln())
    }
}

/// The `N + 1` ratios `Gamma(j+1) / Gamma(alpha+j+1)` for `j = 0..=N`,
/// computed as a running product so only `Gamma(alpha+1)` is ever
/// evaluated: the ratio at `j` is the ratio at `j-1` times `j/(alpha+j)`.
/// For `alpha = 0` this is exactly a vector of ones.
pub fn gamma_ratio_products(alpha: f64, n: usize) -> Result<Vec<f64>> {
    if !(alpha > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_ratio_products requires alpha > -1, got {alpha}"
        )));
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut r = (-log_gamma(alpha + 1.0)?).exp();
    out.push(r);
    for j in 1..=n {
        r *= j as f64 / (alpha + j as f64);
        out.push(r);
    }
    Ok(out)
}

const IGAMMA_MAX_ITERS: usize = 600;
const IGAMMA_EPS: f64 = 1e-16;

/// Regularized lower incomplete gamma `P(a, x) = gamma(a, x) / Gamma(a)`.
///
/// Series expansion for `x < a + 1`, Lentz continued fraction otherwise;
/// absolute error below 1e-12 over the parameter ranges used here.
pub fn reg_lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("incomplete gamma requires a > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("incomplete gamma requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ln_prefactor = a * x.ln() - x - log_gamma(a)?;
    if x < a + 1.0 {
        // gamma(a,x) = x^a e^{-x} sum_{n>=0} x^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..IGAMMA_MAX_ITERS {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * IGAMMA_EPS {
                break;
            }
        }
        Ok((ln_prefactor.exp() * sum).clamp(0.0, 1.0))
    } else {
        // Upper tail Q(a,x) by modified Lentz; P = 1 - Q.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=IGAMMA_MAX_ITERS {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < IGAMMA_EPS {
                break;
            }
        }
        Ok((1.0 - ln_prefactor.exp() * h).clamp(0.0, 1.0))
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `A x` for a slice of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

/// Minimizer of `||A y - b||_2` by Householder QR, for `rows >= cols`.
///
/// Deterministic (no pivoting). A column whose reflected diagonal falls
/// below `1e-14 * ||A||_F` makes the problem rank deficient and is
/// reported as an error with its index.
pub fn qr_least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m || m < n || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "least squares needs rows >= cols >= 1 and matching rhs, got {m}x{n} with rhs {}",
            b.len()
        )));
    }
    let rank_tol = 1e-14 * a.frobenius_norm();
    let mut r = a.clone();
    let mut y = b.to_vec();

    for k in 0..n {
        // Householder vector for column k, rows k..m.
        let mut norm = 0.0f64;
        for i in k..m {
            norm = norm.hypot(r.at(i, k));
        }
        if norm <= rank_tol {
            return Err(Error::RankDeficient { column: k });
        }
        let alpha = if r.at(k, k) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - k];
        v[0] = r.at(k, k) - alpha;
        for i in k + 1..m {
            v[i - k] = r.at(i, k);
        }
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        r.set(k, k, alpha);
        for i in k + 1..m {
            r.set(i, k, 0.0);
        }
        if vtv > 0.0 {
            for j in k + 1..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * r.at(i, j)).sum();
                let scale = 2.0 * dot / vtv;
                for i in k..m {
                    let val = r.at(i, j) - scale * v[i - k];
                    r.set(i, j, val);
                }
            }
            let dot: f64 = (k..m).map(|i| v[i - k] * y[i]).sum();
            let scale = 2.0 * dot / vtv;
            for i in k..m {
                y[i] -= scale * v[i - k];
            }
        }
    }

    // Back substitution on the upper triangle.
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = y[k];
        for j in k + 1..n {
            s -= r.at(k, j) * x[j];
        }
        let diag = r.at(k, k);
        if diag.abs() <= rank_tol {
            return Err(Error::RankDeficient { column: k });
        }
        x[k] = s / diag;
    }
    Ok(x)
}

/// Forward substitution for a square lower triangular system `L x = b`.
pub fn solve_lower_triangular(l: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    if l.cols() != n || b.len() != n {
        return Err(Error::InvalidParameter(format!(
            "triangular solve needs square L and matching rhs, got {}x{} with rhs {}",
            l.rows(),
            l.cols(),
            b.len()
        )));
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for j in 0..i {
            s -= l.at(i, j) * x[j];
        }
        let diag = l.at(i, i);
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal { row: i });
        }
        x[i] = s / diag;
    }
    Ok(x)
}
