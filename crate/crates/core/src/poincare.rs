//! Solvers for the functional equation `phi(mz) = P(phi(z))` with
//! boundary conditions `phi(0) = 1`, `phi'(0) = -1`, in terms of the first
//! `N + 1` Taylor coefficients of `phi`.
//!
//! Three routes are provided:
//!
//! * [`solve_forward`]: the equation for the coefficient of `z^j` is
//!   linear in `phi_j` once lower coefficients are known, so the whole
//!   vector can be recovered sequentially. Works for any p.g.f. that is
//!   analytic at 0, including linear-fractional ones, without truncation.
//! * [`solve_fixed_point`]: iterates `phi <- D^{-1} P(phi)` where `D`
//!   rescales coefficient `j` by `m^j`, re-pinning the two boundary
//!   coefficients each sweep. Converges linearly at rate `1/m`.
//! * [`solve_newton`]: Newton's method on the coefficient map. The
//!   Jacobian restricted to coefficients `2..=N` is lower triangular with
//!   diagonal `m^j - m`, so each step costs one composition plus an
//!   `O(N^2)` triangular solve. Converges superlinearly.
//!
//! The iterative solvers require a polynomial p.g.f.; a linear-fractional
//! input is truncated to `N` terms internally and the discarded mass is
//! reported so callers can warn when it is not negligible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gwmodel::Pgf;
use crate::numerics::{solve_lower_triangular, DenseMatrix};
use crate::series::TruncatedSeries;

/// Which solver produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Forward,
    FixedPoint,
    Newton,
}

/// Truncation order, stopping tolerance, iteration cap, and initial
/// iterate for the solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Truncation order `N`; the solvers produce `N + 1` coefficients.
    pub order: usize,
    /// Residual tolerance for the stopping criterion.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial iterate; `None` means `1 - z` padded with zeros. Must have
    /// leading coefficients `1, -1`.
    pub initial: Option<TruncatedSeries>,
}

pub const DEFAULT_ORDER: usize = 80;
pub const DEFAULT_TOL_FIXED_POINT: f64 = 1e-8;
pub const DEFAULT_TOL_NEWTON: f64 = 1e-14;

impl SolverConfig {
    /// Defaults for the fixed-point iteration: tolerance 1e-8, up to
    /// 10000 sweeps.
    pub fn fixed_point() -> Self {
        Self { order: DEFAULT_ORDER, tol: DEFAULT_TOL_FIXED_POINT, max_iters: 10_000, initial: None }
    }

    /// Defaults for Newton's method: tolerance 1e-14, up to 50 steps.
    pub fn newton() -> Self {
        Self { order: DEFAULT_ORDER, tol: DEFAULT_TOL_NEWTON, max_iters: 50, initial: None }
    }

    /// Defaults for forward substitution (direct; the tolerance only
    /// classifies the final residual).
    pub fn forward() -> Self {
        Self { order: DEFAULT_ORDER, tol: DEFAULT_TOL_FIXED_POINT, max_iters: 1, initial: None }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidParameter("solver order must be >= 2".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("solver tolerance must be > 0".into()));
        }
        if let Some(init) = &self.initial {
            if init.coeff(0) != 1.0 || init.coeff(1) != -1.0 {
                return Err(Error::InvalidParameter(
                    "initial iterate must have coefficients 1, -1 at orders 0, 1".into(),
                ));
            }
        }
        Ok(())
    }

    fn initial_series(&self) -> TruncatedSeries {
        match &self.initial {
            Some(s) => TruncatedSeries::from_coeffs_padded(s.coeffs(), self.order),
            None => TruncatedSeries::from_coeffs_padded(&[1.0, -1.0], self.order),
        }
    }
}

/// Outcome of a solve: the coefficient vector, the residual trace, and a
/// convergence flag. A non-converged run is not an error; the best
/// iterate is returned so callers can inspect it.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub phi: TruncatedSeries,
    pub iterations: usize,
    pub final_residual: f64,
    pub method: Method,
    /// Residual after each iteration (empty for the direct method, which
    /// records only `final_residual`).
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Mass discarded when a linear-fractional p.g.f. had to be truncated
    /// for the iterative solvers.
    pub truncation_deficit: Option<f64>,
}

/// Infinity norm of the relative residual
/// `max_j |1 - m^j phi_j / (P(phi))_j|`, with an absolute fallback
/// `|m^j phi_j - (P(phi))_j|` wherever the denominator underflows.
pub fn residual(phi: &TruncatedSeries, pgf: &Pgf) -> Result<f64> {
    let composed = pgf.apply_series(phi)?;
    Ok(residual_from_composed(phi, &composed, pgf.mean()))
}

fn residual_from_composed(phi: &TruncatedSeries, composed: &TruncatedSeries, m: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for j in 0..=phi.order() {
        let lhs = scale * phi.coeff(j);
        let rhs = composed.coeff(j);
        let err = if rhs.abs() < 1e-300 {
            (lhs - rhs).abs()
        } else {
            (1.0 - lhs / rhs).abs()
        };
        worst = worst.max(err);
        scale *= m;
    }
    worst
}

/// Truncates a linear-fractional p.g.f. to `order` terms for the
/// iterative solvers; polynomials pass through untouched.
fn polynomialize(pgf: &Pgf, order: usize) -> Result<(Pgf, Option<f64>)> {
    if pgf.is_polynomial() {
        Ok((pgf.clone(), None))
    } else {
        let (p, deficit) = pgf.truncate_to_polynomial(order)?;
        Ok((p, Some(deficit)))
    }
}

/// Sequential recovery of the coefficients: with `phi_0 = 1` and
/// `phi_1 = -1` fixed, the coefficient of `z^j` in the equation is
/// `m^j phi_j = (P(phi))_j`, whose right side depends on `phi_j` only
/// through the linear term `m phi_j`, leaving
/// `phi_j = (P(phi_trunc))_j / (m^j - m)` where `phi_trunc` zeroes
/// `phi_j` and above.
pub fn solve_forward(pgf: &Pgf, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let m = pgf.mean();
    if m <= 1.0 {
        return Err(Error::NotSupercritical);
    }
    let n = cfg.order;
    let mut phi = TruncatedSeries::from_coeffs_padded(&[1.0, -1.0], n);
    for j in 2..=n {
        // Coefficients above j-1 are still zero, so composing the full
        // vector matches composing the (j-1)-prefix.
        let prefix = TruncatedSeries::from_coeffs_padded(&phi.coeffs()[..j], j);
        let composed = pgf.apply_series(&prefix)?;
        let denom = m.powi(j as i32) - m;
        if denom.abs() < 1e-300 {
            return Err(Error::DegenerateRecursion);
        }
        phi.coeffs_mut()[j] = composed.coeff(j) / denom;
    }
    if phi.coeffs().iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteSeries);
    }
    let final_residual = residual(&phi, pgf)?;
    Ok(SolveReport {
        phi,
        iterations: 0,
        final_residual,
        method: Method::Forward,
        residual_history: Vec::new(),
        converged: final_residual <= cfg.tol,
        truncation_deficit: None,
    })
}

/// Fixed-point sweeps `phi <- D^{-1} P(phi)` with the boundary
/// coefficients re-pinned to `1, -1` after every sweep. Stops when the
/// relative residual drops below `cfg.tol`; hitting `max_iters` first
/// returns a report flagged as non-converged.
pub fn solve_fixed_point(pgf: &Pgf, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let (poly, deficit) = polynomialize(pgf, cfg.order)?;
    let m = poly.mean();
    if m <= 1.0 {
        return Err(Error::NotSupercritical);
    }
    let n = cfg.order;
    let mut phi = cfg.initial_series();
    let mut composed = poly.apply_series(&phi)?;
    let mut history = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iters {
        let mut scale = 1.0f64;
        for j in 0..=n {
            phi.coeffs_mut()[j] = composed.coeff(j) / scale;
            scale *= m;
        }
        phi.coeffs_mut()[0] = 1.0;
        phi.coeffs_mut()[1] = -1.0;
        if phi.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteSeries);
        }
        composed = poly.apply_series(&phi)?;
        let res = residual_from_composed(&phi, &composed, m);
        history.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        final_residual: history.last().copied().unwrap_or(f64::INFINITY),
        iterations: history.len(),
        phi,
        method: Method::FixedPoint,
        residual_history: history,
        converged,
        truncation_deficit: deficit,
    })
}

/// Newton's method on the coefficients `2..=N`. Each step composes
/// `w = P(phi)` and `gamma = P'(phi)`, assembles the lower triangular
/// Jacobian with diagonal `m^j - gamma_0` and Toeplitz subdiagonals
/// `-gamma_{j-k}`, and solves for the update by forward substitution.
pub fn solve_newton(pgf: &Pgf, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let (poly, deficit) = polynomialize(pgf, cfg.order)?;
    let m = poly.mean();
    if m <= 1.0 {
        return Err(Error::NotSupercritical);
    }
    let n = cfg.order;
    let dim = n - 1; // unknowns phi_2 .. phi_N
    let mut phi = cfg.initial_series();
    let mut composed = poly.apply_series(&phi)?;
    let mut history = Vec::new();
    let mut converged = false;

    // m^j for j = 0..=N.
    let mut powers = Vec::with_capacity(n + 1);
    let mut scale = 1.0f64;
    for _ in 0..=n {
        powers.push(scale);
        scale *= m;
    }

    for _ in 0..cfg.max_iters {
        let gamma = poly.derivative_apply_series(&phi)?;
        for i in 0..dim {
            if (powers[i + 2] - gamma.coeff(0)).abs() < 1e-300 {
                return Err(Error::DegenerateRecursion);
            }
        }
        let jac = DenseMatrix::from_fn(dim, dim, |i, k| {
            if k > i {
                0.0
            } else if k == i {
                powers[i + 2] - gamma.coeff(0)
            } else {
                -gamma.coeff(i - k)
            }
        });
        let rhs: Vec<f64> = (2..=n).map(|j| powers[j] * phi.coeff(j) - composed.coeff(j)).collect();
        let step = solve_lower_triangular(&jac, &rhs)?;
        for (j, dj) in step.iter().enumerate() {
            phi.coeffs_mut()[j + 2] -= dj;
        }
        phi.coeffs_mut()[0] = 1.0;
        phi.coeffs_mut()[1] = -1.0;
        if phi.coeffs().iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteSeries);
        }
        composed = poly.apply_series(&phi)?;
        let res = residual_from_composed(&phi, &composed, m);
        history.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        final_residual: history.last().copied().unwrap_or(f64::INFINITY),
        iterations: history.len(),
        phi,
        method: Method::Newton,
        residual_history: history,
        converged,
        truncation_deficit: deficit,
    })
}
