//! Arithmetic on truncated formal power series.
//!
//! A series is stored as its first `order + 1` Taylor coefficients; every
//! operation discards terms above the requested truncation order. This is
//! the coefficient-level realization of the ring of lower triangular
//! Toeplitz matrices: multiplying two series is the Cauchy convolution of
//! their coefficient vectors, and composing a polynomial with a series is
//! Horner's rule evaluated in that ring.

use crate::error::{Error, Result};

/// A formal power series truncated at a fixed order.
///
/// The coefficient of `z^j` sits at index `j`; the order is
/// `coeffs.len() - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Wraps a coefficient vector, rejecting empty or non-finite input.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("series needs >= 1 coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteSeries);
        }
        Ok(Self { coeffs })
    }

    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    /// The zero series of the given order.
    pub fn zeros(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    /// Copies `coeffs` into a series of exactly the given order, zero-padding
    /// or truncating as needed.
    pub fn from_coeffs_padded(coeffs: &[f64], order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        let n = coeffs.len().min(order + 1);
        c[..n].copy_from_slice(&coeffs[..n]);
        Self { coeffs: c }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `z^j`, zero beyond the truncation order.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Horner evaluation of the truncated polynomial at a point.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

/// Product of two series truncated at `order`.
///
/// Coefficient `j` of the result is `sum_{k=0..j} a_k b_{j-k}`; inputs
/// shorter than `order` are treated as zero-padded. Truncation is silent:
/// this is multiplication in the truncated-series ring, never an error.
pub fn mul(a: &TruncatedSeries, b: &TruncatedSeries, order: usize) -> TruncatedSeries {
    let mut out = vec![0.0; order + 1];
    let na = a.coeffs.len().min(order + 1);
    for (i, &ai) in a.coeffs[..na].iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let nb = b.coeffs.len().min(order + 1 - i);
        for (j, &bj) in b.coeffs[..nb].iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    TruncatedSeries::from_raw(out)
}

/// First `s.order() + 1` Taylor coefficients of `P(s(z))` for a polynomial
/// `P` with coefficients `p[0..=d]`, via Horner in the series ring:
/// start from `p_d` and repeatedly multiply by `s` and add the next
/// coefficient down.
pub fn compose_poly(p: &[f64], s: &TruncatedSeries) -> Result<TruncatedSeries> {
    if p.is_empty() {
        return Err(Error::EmptyPolynomial);
    }
    let order = s.order();
    let mut acc = TruncatedSeries::from_coeffs_padded(&[p[p.len() - 1]], order);
    for &pk in p[..p.len() - 1].iter().rev() {
        acc = mul(&acc, s, order);
        acc.coeffs[0] += pk;
    }
    Ok(acc)
}
