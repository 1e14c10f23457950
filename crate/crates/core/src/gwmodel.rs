//! Offspring distributions and the scalar invariants they induce.
//!
//! A `Pgf` is the probability generating function of the offspring law,
//! either a polynomial with nonnegative coefficients summing to one or a
//! linear-fractional (modified geometric) family. From it the mean `m`,
//! the extinction probability `q`, the near-zero density exponent
//! `alpha`, and compositions `P(s(z))`, `P'(s(z))` with truncated series
//! are derived.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{compose_poly, TruncatedSeries};

const PROB_SUM_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_MAX_ITERS: usize = 1_000_000;

/// Wire representation; see the JSON schema in the crate docs:
/// `{"type":"polynomial","p":[...]}` or
/// `{"type":"linear_fractional","b":...,"c":...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum PgfRepr {
    Polynomial { p: Vec<f64> },
    LinearFractional { b: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum PgfKind {
    Polynomial(Vec<f64>),
    LinearFractional { b: f64, c: f64 },
}

/// A validated offspring probability generating function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PgfRepr", into = "PgfRepr")]
pub struct Pgf {
    kind: PgfKind,
}

/// Scalar invariants of a supercritical process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GwInvariants {
    /// Mean offspring number `P'(1)`.
    pub m: f64,
    /// Extinction probability, the smallest nonnegative root of `P(z) = z`.
    pub q: f64,
    /// Near-zero density exponent `-log P'(q) / log m - 1`.
    pub alpha: f64,
    /// `P'(q)`.
    pub pprime_q: f64,
}

impl TryFrom<PgfRepr> for Pgf {
    type Error = Error;
    fn try_from(repr: PgfRepr) -> Result<Self> {
        match repr {
            PgfRepr::Polynomial { p } => Pgf::polynomial(p),
            PgfRepr::LinearFractional { b, c } => Pgf::linear_fractional(b, c),
        }
    }
}

impl From<Pgf> for PgfRepr {
    fn from(pgf: Pgf) -> Self {
        match pgf.kind {
            PgfKind::Polynomial(p) => PgfRepr::Polynomial { p },
            PgfKind::LinearFractional { b, c } => PgfRepr::LinearFractional { b, c },
        }
    }
}

impl Pgf {
    /// Polynomial p.g.f. with coefficients `p[j] = P(theta = j)`.
    ///
    /// Requires degree >= 1, nonnegative entries, and a total mass of one
    /// within 1e-12. The sum is validated, never silently renormalized.
    pub fn polynomial(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidPgf("polynomial degree must be >= 1".into()));
        }
        if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidPgf("probabilities must be finite and >= 0".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidPgf(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self { kind: PgfKind::Polynomial(p) })
    }

    /// Escape hatch for `truncate_to_polynomial`, whose output is
    /// deliberately mass deficient.
    pub(crate) fn polynomial_unchecked(p: Vec<f64>) -> Self {
        Self { kind: PgfKind::Polynomial(p) }
    }

    /// Linear-fractional p.g.f. `P(z) = 1 - b/(1-c) + b z / (1 - c z)`
    /// with `0 < c < 1` and `0 < b <= 1 - c`.
    pub fn linear_fractional(b: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidPgf(format!("linear-fractional needs 0 < c < 1, got c = {c}")));
        }
        if !(b > 0.0 && b <= 1.0 - c) {
            return Err(Error::InvalidPgf(format!(
                "linear-fractional needs 0 < b <= 1 - c, got b = {b}, c = {c}"
            )));
        }
        Ok(Self { kind: PgfKind::LinearFractional { b, c } })
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self.kind, PgfKind::Polynomial(_))
    }

    /// Coefficients when polynomial, `None` for linear-fractional.
    pub fn polynomial_coeffs(&self) -> Option<&[f64]> {
        match &self.kind {
            PgfKind::Polynomial(p) => Some(p),
            PgfKind::LinearFractional { .. } => None,
        }
    }

    /// `(b, c)` when linear-fractional, `None` for polynomials.
    pub fn linear_fractional_params(&self) -> Option<(f64, f64)> {
        match &self.kind {
            PgfKind::Polynomial(_) => None,
            PgfKind::LinearFractional { b, c } => Some((*b, *c)),
        }
    }

    /// `P(z)` at a real point.
    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            PgfKind::Polynomial(p) => p.iter().rev().fold(0.0, |acc, &c| acc * z + c),
            PgfKind::LinearFractional { b, c } => 1.0 - b / (1.0 - c) + b * z / (1.0 - c * z),
        }
    }

    /// `P'(z)` at a real point.
    pub fn derivative_eval(&self, z: f64) -> f64 {
        match &self.kind {
            PgfKind::Polynomial(p) => p
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (j, &c)| acc * z + j as f64 * c),
            PgfKind::LinearFractional { b, c } => {
                let d = 1.0 - c * z;
                b / (d * d)
            }
        }
    }

    /// Mean offspring number `m = P'(1)`.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            PgfKind::Polynomial(p) => p.iter().enumerate().map(|(j, &c)| j as f64 * c).sum(),
            PgfKind::LinearFractional { b, c } => b / ((1.0 - c) * (1.0 - c)),
        }
    }

    fn p0(&self) -> f64 {
        match &self.kind {
            PgfKind::Polynomial(p) => p[0],
            PgfKind::LinearFractional { b, c } => 1.0 - b / (1.0 - c),
        }
    }

    fn require_supercritical(&self) -> Result<f64> {
        let m = self.mean();
        if m > 1.0 {
            Ok(m)
        } else {
            Err(Error::NotSupercritical)
        }
    }

    /// Extinction probability: the smallest nonnegative root of `P(z) = z`,
    /// found by the monotone fixed-point iteration `q <- P(q)` from 0.
    pub fn extinction_probability(&self) -> Result<f64> {
        self.require_supercritical()?;
        if self.p0() == 0.0 {
            return Ok(0.0);
        }
        let mut q = 0.0f64;
        for _ in 0..FIXED_POINT_MAX_ITERS {
            let next = self.eval(q);
            if (next - q).abs() <= FIXED_POINT_TOL {
                return Ok(next);
            }
            q = next;
        }
        Ok(q)
    }

    /// Near-zero exponent `alpha = -log P'(q) / log m - 1` of the density
    /// of W. Rejects `P'(q) = 0`, where the density vanishes faster than
    /// any power and the Laguerre ansatz does not apply.
    pub fn alpha(&self) -> Result<f64> {
        Ok(self.invariants()?.alpha)
    }

    /// Mean, extinction probability, `P'(q)`, and alpha in one pass.
    pub fn invariants(&self) -> Result<GwInvariants> {
        let m = self.require_supercritical()?;
        let q = self.extinction_probability()?;
        let pprime_q = self.derivative_eval(q);
        if pprime_q <= 0.0 {
            return Err(Error::AlphaInfinite);
        }
        let alpha = -pprime_q.ln() / m.ln() - 1.0;
        Ok(GwInvariants { m, q, alpha, pprime_q })
    }

    /// Taylor coefficients of `P(s(z))` up to the order of `s`.
    ///
    /// Polynomials go through Horner composition; the linear-fractional
    /// case solves the triangular coefficient system
    /// `(1 - c s(z)) u(z) = s(z)` by forward substitution, so no
    /// truncation of the offspring series is involved.
    pub fn apply_series(&self, s: &TruncatedSeries) -> Result<TruncatedSeries> {
        match &self.kind {
            PgfKind::Polynomial(p) => compose_poly(p, s),
            PgfKind::LinearFractional { b, c } => {
                let u = rational_solve(*c, s, s.coeffs())?;
                let mut out = vec![0.0; s.order() + 1];
                out[0] = 1.0 - b / (1.0 - c);
                for (o, uj) in out.iter_mut().zip(&u) {
                    *o += b * uj;
                }
                Ok(TruncatedSeries::new(out)?)
            }
        }
    }

    /// Taylor coefficients of `P'(s(z))` up to the order of `s`.
    pub fn derivative_apply_series(&self, s: &TruncatedSeries) -> Result<TruncatedSeries> {
        match &self.kind {
            PgfKind::Polynomial(p) => {
                let dp: Vec<f64> = if p.len() == 1 {
                    vec![0.0]
                } else {
                    p.iter().enumerate().skip(1).map(|(j, &c)| j as f64 * c).collect()
                };
                compose_poly(&dp, s)
            }
            PgfKind::LinearFractional { b, c } => {
                // P'(y) = b / (1 - c y)^2: two triangular solves.
                let mut e0 = vec![0.0; s.order() + 1];
                e0[0] = 1.0;
                let w = rational_solve(*c, s, &e0)?;
                let v = rational_solve(*c, s, &w)?;
                Ok(TruncatedSeries::new(v.iter().map(|x| b * x).collect())?)
            }
        }
    }

    /// Degree-`k-1` polynomial truncation of a linear-fractional p.g.f.:
    /// `p_0 = 1 - b/(1-c)`, `p_i = b c^{i-1}` for `i = 1..k-1`. The result
    /// is NOT renormalized; the discarded mass `b c^{k-1} / (1-c)` is
    /// returned alongside.
    pub fn truncate_to_polynomial(&self, k: usize) -> Result<(Pgf, f64)> {
        let (b, c) = match &self.kind {
            PgfKind::LinearFractional { b, c } => (*b, *c),
            PgfKind::Polynomial(_) => {
                return Err(Error::InvalidParameter(
                    "truncate_to_polynomial applies to linear-fractional p.g.f.s".into(),
                ))
            }
        };
        if k < 2 {
            return Err(Error::InvalidParameter("truncation needs k >= 2".into()));
        }
        let mut p = Vec::with_capacity(k);
        p.push(1.0 - b / (1.0 - c));
        let mut geom = b;
        for _ in 1..k {
            p.push(geom);
            geom *= c;
        }
        // geom is now b c^{k-1}.
        let deficit = geom / (1.0 - c);
        Ok((Pgf::polynomial_unchecked(p), deficit))
    }
}

/// Forward substitution for `(1 - c s(z)) u(z) = r(z)` in the truncated
/// series ring. The diagonal of the system is `1 - c s_0`.
fn rational_solve(c: f64, s: &TruncatedSeries, rhs: &[f64]) -> Result<Vec<f64>> {
    let t0 = 1.0 - c * s.coeff(0);
    if t0.abs() < 1e-14 {
        return Err(Error::SingularRationalComposition);
    }
    let n = s.order() + 1;
    let mut u = vec![0.0; n];
    for j in 0..n {
        let mut acc = rhs.get(j).copied().unwrap_or(0.0);
        for k in 1..=j {
            // t_k = -c s_k for k >= 1
            acc += c * s.coeff(k) * u[j - k];
        }
        u[j] = acc / t0;
    }
    Ok(u)
}
