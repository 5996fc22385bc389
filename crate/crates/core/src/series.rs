//! Truncated power series in one variable.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Extra exponential-series terms carried before truncating a product.
pub(crate) const EXP_GUARD_TERMS: usize = 10;

/// Coefficients `c_0, …, c_K` of `Σ c_k w^k`, truncated at order `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffSeries {
    coeffs: Vec<f64>,
}

impl CoeffSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::domain("a series needs at least one coefficient"));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::domain(format!("coefficient {k} is not finite")));
        }
        Ok(Self { coeffs })
    }

    /// Monomial `w^degree`.
    pub fn monomial(degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `k`, zero past the truncation order.
    pub fn get(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }
}

/// First `order + 1` coefficients of `a·b`.
pub(crate) fn cauchy_product(a: &[f64], b: &[f64], order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    for (i, &ai) in a.iter().enumerate().take(order + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Coefficients `s^k/k!` of `e^{s·w}` for `k = 0..=order`.
pub(crate) fn exp_series(scale: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut c = 1.0;
    out.push(c);
    for k in 1..=order {
        c *= scale / k as f64;
        out.push(c);
    }
    out
}

/// Coefficients of `F(z + 1)` given those of the polynomial `F(z)`.
pub(crate) fn taylor_shift_one(a: &[f64]) -> Vec<f64> {
    // repeated synthetic division by (z - 1)
    let mut b = a.to_vec();
    let d = b.len();
    for i in 0..d {
        for j in (i..d.saturating_sub(1)).rev() {
            b[j] += b[j + 1];
        }
    }
    b
}

/// First `order + 1` coefficients of `(1 + w)^x` for integer `x`.
pub(crate) fn binomial_series(x: u64, order: usize) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    let mut c = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        if k as u64 > x {
            break;
        }
        *slot = c;
        c *= (x - k as u64) as f64 / (k + 1) as f64;
    }
    out
}
