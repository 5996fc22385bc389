//! Charlier polynomials `C_k(λ, x)`, their generating function
//! `Σ_k C_k(λ,x) λ^k/k! w^k = (1+w)^x e^{-λw}` and the orthogonality
//! relations.
//!
//! Polynomials are stored in the falling-factorial basis
//! `(x)_j = x(x-1)…(x-j+1)`. In that basis the three-term recurrence
//!
//! ```text
//! C_{k+1}(λ, x) = (x/λ)·C_k(λ, x-1) - C_k(λ, x)
//! ```
//!
//! is an exact coefficient shift, because `x·(x-1)_j = (x)_{j+1}`. The
//! power basis would carry Stirling-number sized coefficients and lose
//! every digit at small `x`.

use crate::distributions::ln_factorial;
use crate::series::{binomial_series, cauchy_product, exp_series, taylor_shift_one, CoeffSeries, EXP_GUARD_TERMS};
use crate::{Error, Result};

/// Term budget for [`dual_orthogonality_sum`].
pub const DUAL_MAX_TERMS: usize = 10_000;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("λ must be positive, got {lambda}")))
    }
}

/// Successive Charlier polynomials `C_0, C_1, …` for a fixed `λ`.
///
/// Row `k` holds `c_{k,j}` with `C_k(λ,x) = Σ_j c_{k,j} (x)_j`.
#[derive(Debug, Clone)]
pub struct CharlierRows {
    inv_lambda: f64,
    row: Vec<f64>,
}

impl CharlierRows {
    /// Starts at `C_0 ≡ 1`.
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            inv_lambda: lambda.recip(),
            row: vec![1.0],
        })
    }

    pub fn degree(&self) -> usize {
        self.row.len() - 1
    }

    /// Falling-factorial coefficients of the current polynomial.
    pub fn coeffs(&self) -> &[f64] {
        &self.row
    }

    /// Moves from `C_k` to `C_{k+1}`.
    pub fn advance(&mut self) {
        let k = self.row.len();
        self.row.push(0.0);
        for j in (0..k).rev() {
            let c = self.row[j];
            self.row[j + 1] += c * self.inv_lambda;
            self.row[j] = -c;
        }
    }

    /// `C_k(λ, x)` by nested evaluation of the Newton form.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &c) in self.row.iter().enumerate().rev() {
            acc = c + (x - j as f64) * acc;
        }
        acc
    }
}

/// `C_k(λ, x)` for real `x`.
pub fn charlier_eval(lambda: f64, k: usize, x: f64) -> Result<f64> {
    let mut rows = CharlierRows::new(lambda)?;
    for _ in 0..k {
        rows.advance();
    }
    Ok(rows.eval(x))
}

/// `C_0(λ,x), …, C_kmax(λ,x)`.
pub fn charlier_values(lambda: f64, kmax: usize, x: f64) -> Result<Vec<f64>> {
    let mut rows = CharlierRows::new(lambda)?;
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(rows.eval(x));
    for _ in 0..kmax {
        rows.advance();
        out.push(rows.eval(x));
    }
    Ok(out)
}

/// First `order + 1` Taylor coefficients of `(1+w)^x e^{-λw}`; coefficient
/// `k` equals `C_k(λ,x)·λ^k/k!`.
pub fn charlier_genfun_coeffs(lambda: f64, x: u64, order: usize) -> Result<CoeffSeries> {
    check_lambda(lambda)?;
    let binom = binomial_series(x, order);
    let exp = exp_series(-lambda, order + EXP_GUARD_TERMS);
    CoeffSeries::new(cauchy_product(&binom, &exp, order))
}

/// Both sides of `C_k(λ,m+1) − C_k(λ,m) = (k/λ)·C_{k−1}(λ,m)`, each from
/// [`charlier_eval`].
pub fn charlier_difference_check(lambda: f64, k: usize, m: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::domain("difference identity needs k ≥ 1"));
    }
    let lhs = charlier_eval(lambda, k, m + 1.0)? - charlier_eval(lambda, k, m)?;
    let rhs = k as f64 / lambda * charlier_eval(lambda, k - 1, m)?;
    Ok((lhs, rhs))
}

/// First `order + 1` coefficients `α_n` of `F(z+1)·e^{-λz}`, where `F` is the
/// polynomial with coefficients `a`.
pub fn shift_exp_transform(a: &CoeffSeries, lambda: f64, order: usize) -> Result<CoeffSeries> {
    check_lambda(lambda)?;
    let shifted = taylor_shift_one(a.coeffs());
    let exp = exp_series(-lambda, order + EXP_GUARD_TERMS);
    CoeffSeries::new(cauchy_product(&shifted, &exp, order))
}

/// `Σ_n (λ^n/n!)·C_n(λ,x)·C_n(λ,y)`.
///
/// The closed form is `0` for `x ≠ y` and `x!·e^λ/λ^x` for `x = y`. Summation
/// stops once the current term is below `tol` and, after three consecutive
/// halvings, the tail estimate `2·|term|` is too.
pub fn dual_orthogonality_sum(lambda: f64, x: u64, y: u64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut rows = CharlierRows::new(lambda)?;
    let ln_lambda = lambda.ln();
    let (xf, yf) = (x as f64, y as f64);

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut halvings = 0usize;
    for n in 0..DUAL_MAX_TERMS {
        if n > 0 {
            rows.advance();
        }
        let weight = (n as f64 * ln_lambda - ln_factorial(n as u64)).exp();
        let term = weight * rows.eval(xf) * rows.eval(yf);
        if !term.is_finite() {
            break;
        }
        sum += term;

        let mag = term.abs();
        if mag * 2.0 <= prev {
            halvings += 1;
        } else {
            halvings = 0;
        }
        prev = mag;
        if halvings >= 3 && 2.0 * mag < tol {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: "dual orthogonality sum",
        detail: format!("λ = {lambda}, x = {x}, y = {y}, tol = {tol}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(charlier_eval(2.0, 0, 5.0).unwrap(), 1.0);
        assert_eq!(charlier_eval(2.0, 1, 5.0).unwrap(), 1.5);
        assert_eq!(charlier_eval(1.0, 2, 3.0).unwrap(), 1.0);
        assert!(charlier_eval(0.0, 1, 1.0).is_err());
        assert!(charlier_eval(-1.0, 1, 1.0).is_err());
    }

    #[test]
    fn rows_match_closed_form_coefficients() {
        // c_{k,j} = binom(k,j) (-1)^{k-j} / λ^j
        let lambda = 1.5f64;
        let mut rows = CharlierRows::new(lambda).unwrap();
        for _ in 0..6 {
            rows.advance();
        }
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        for (j, &c) in rows.coeffs().iter().enumerate() {
            let sign = if (6 - j) % 2 == 0 { 1.0 } else { -1.0 };
            let want = sign * binom[j] / lambda.powi(j as i32);
            assert!((c - want).abs() < 1e-14 * want.abs().max(1.0), "j={j}: {c} vs {want}");
        }
        assert_eq!(rows.degree(), 6);
    }

    #[test]
    fn non_integer_argument() {
        // C_2(λ,x) = x(x-1)/λ² - 2x/λ + 1
        let (lambda, x) = (0.7f64, 2.35f64);
        let want = x * (x - 1.0) / (lambda * lambda) - 2.0 * x / lambda + 1.0;
        assert!((charlier_eval(lambda, 2, x).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn genfun_examples() {
        assert_eq!(charlier_genfun_coeffs(1.0, 0, 2).unwrap().coeffs(), &[1.0, -1.0, 0.5]);
        assert_eq!(charlier_genfun_coeffs(1.0, 1, 1).unwrap().coeffs(), &[1.0, 0.0]);
        assert_eq!(charlier_genfun_coeffs(2.0, 1, 1).unwrap().coeffs(), &[1.0, -1.0]);
    }

    #[test]
    fn difference_examples() {
        assert_eq!(charlier_difference_check(1.0, 1, 4.0).unwrap(), (1.0, 1.0));
        let (lhs, rhs) = charlier_difference_check(2.0, 2, 0.0).unwrap();
        assert!((lhs + 1.0).abs() < 1e-15 && (rhs + 1.0).abs() < 1e-15);
        let (lhs, rhs) = charlier_difference_check(3.0, 5, 7.0).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs());
        assert!(charlier_difference_check(1.0, 0, 1.0).is_err());
    }

    #[test]
    fn shift_exp_examples() {
        let lambda = 1.7;
        for x in 0..6u64 {
            let a = CoeffSeries::monomial(x as usize);
            let got = shift_exp_transform(&a, lambda, 8).unwrap();
            let want = charlier_genfun_coeffs(lambda, x, 8).unwrap();
            for (g, w) in got.coeffs().iter().zip(want.coeffs()) {
                assert!((g - w).abs() < 1e-14, "x={x}: {g} vs {w}");
            }
        }
        let one = CoeffSeries::new(vec![1.0]).unwrap();
        let got = shift_exp_transform(&one, 3.0, 2).unwrap();
        assert_eq!(got.coeffs(), &[1.0, -3.0, 4.5]);
        let z = CoeffSeries::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(shift_exp_transform(&z, 1.0, 1).unwrap().coeffs(), &[1.0, 0.0]);
    }

    #[test]
    fn dual_orthogonality_examples() {
        let e = std::f64::consts::E;
        let v = dual_orthogonality_sum(1.0, 0, 0, 1e-14).unwrap();
        assert!((v - e).abs() < 1e-12);
        let v = dual_orthogonality_sum(1.0, 0, 1, 1e-14).unwrap();
        assert!(v.abs() < 1e-12);
        let v = dual_orthogonality_sum(2.0, 3, 3, 1e-13).unwrap();
        let want = 6.0 * 2f64.exp() / 8.0;
        assert!((v - want).abs() < 1e-10 * want);
        assert!(dual_orthogonality_sum(1.0, 0, 0, 0.0).is_err());
    }
}
