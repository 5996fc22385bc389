//! Total-variation and χ² distances between `L(S_n)` and `Po(λ)`.
//!
//! χ² has three independent routes:
//!
//! * **direct** – `Σ_m P(m)²/π(m) − 1` over the finite support of `S_n`,
//!   each quotient formed in log space;
//! * **parseval** – `Σ_{k≥2} (k!/λ^k)·α_k²` where
//!   `α_k = [w^k] Π_j (1 + p_j w) e^{-p_j w} = (λ^k/k!)·E C_k(λ, S_n)`;
//! * **integral** – `(1/2π)∫_0^∞∫_{-π}^{π} |G(√(r/λ)e^{it}) − 1|² dt e^{-r} dr`
//!   with `G` the same product, by Gauss–Laguerre in `r` and the periodic
//!   trapezoid rule in `t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::{ln_factorial, poisson_log_pmf_unchecked, DiscretePmf, IndicatorParams};
use crate::quadrature::{trapezoid_angles, GaussLaguerre};
use crate::series::CoeffSeries;
use crate::{Error, Result};

/// Default absolute tolerance of [`chi2_parseval`].
pub const PARSEVAL_DEFAULT_TOL: f64 = 1e-10;
/// Largest truncation order [`chi2_parseval`] will try.
pub const PARSEVAL_MAX_ORDER: usize = 5000;
/// Largest instance accepted by [`chi2_integral`].
pub const INTEGRAL_MAX_N: usize = 50;

/// Masses below this are skipped by [`chi2_direct`].
const MASS_FLOOR: f64 = 1e-280;
/// Largest admissible `ln(P(m)²/π(m))`.
const MAX_LOG_QUOTIENT: f64 = 700.0;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("Poisson mean must be positive, got {lambda}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Parseval,
    Integral,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Parseval => "parseval",
            Route::Integral => "integral",
        }
    }
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub value: f64,
    pub route: Route,
    /// Support points summed (direct), series terms (parseval) or
    /// quadrature points (integral).
    pub terms_used: usize,
    /// Estimated truncation error; series route only.
    pub tail_bound: Option<f64>,
    /// Support points skipped for negligible mass; direct route only.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Initial Gauss–Laguerre node count for the radial integral.
    pub laguerre_nodes: usize,
    /// Initial trapezoid node count for the angular integral (even).
    pub angular_nodes: usize,
    /// Maximum number of refinement rounds.
    pub refinement_limit: usize,
    /// Stop once both refinements move the value by less than this.
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            laguerre_nodes: 64,
            angular_nodes: 256,
            refinement_limit: 4,
            rel_tol: 1e-8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.laguerre_nodes == 0 || self.angular_nodes == 0 || self.refinement_limit == 0 {
            return Err(Error::InvalidConfig(
                "quadrature node counts and refinement limit must be positive".into(),
            ));
        }
        if !self.angular_nodes.is_multiple_of(2) {
            return Err(Error::InvalidConfig("angular node count must be even".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// `½ Σ_j |P(j) − π(j)|`, with the Poisson mass beyond the support added as
/// one lump.
pub fn tv_distance(pmf: &DiscretePmf, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let ln_lambda = lambda.ln();
    let mut abs_diff = 0.0;
    let mut poisson_mass = 0.0;
    for (m, &p) in pmf.mass().iter().enumerate() {
        let q = poisson_log_pmf_unchecked(lambda, ln_lambda, m as u64).exp();
        poisson_mass += q;
        abs_diff += (p - q).abs();
    }
    let tail = (1.0 - poisson_mass).max(0.0);
    Ok((0.5 * (abs_diff + tail)).clamp(0.0, 1.0))
}

/// `Σ_m P(m)²/π(m) − 1`; exact up to rounding since `P` has finite support.
pub fn chi2_direct(pmf: &DiscretePmf, lambda: f64) -> Result<Chi2Result> {
    check_lambda(lambda)?;
    let ln_lambda = lambda.ln();
    let mut sum = 0.0;
    let mut skipped = 0;
    for (m, &p) in pmf.mass().iter().enumerate() {
        if p < MASS_FLOOR {
            skipped += 1;
            continue;
        }
        let log_quotient = 2.0 * p.ln() - poisson_log_pmf_unchecked(lambda, ln_lambda, m as u64);
        if log_quotient > MAX_LOG_QUOTIENT {
            return Err(Error::Overflow { m, log_quotient });
        }
        sum += log_quotient.exp();
    }
    Ok(Chi2Result {
        value: (sum - 1.0).max(0.0),
        route: Route::Direct,
        terms_used: pmf.mass().len() - skipped,
        tail_bound: None,
        skipped,
    })
}

/// `α_0, …, α_order` with `α_k = [w^k] Π_j (1 + p_j w) e^{-p_j w}`.
///
/// Each indicator's factor is folded into the running series separately:
/// its coefficients `(1−k)(−p)^k/k!` stay below one, whereas expanding
/// `Π(1 + p_j w)` first and multiplying by `e^{-λw}` once cancels
/// catastrophically for λ beyond about ten.
pub fn expected_charlier_coeffs(params: &IndicatorParams, order: usize) -> Result<CoeffSeries> {
    let lambda = params.summaries().lambda;
    check_lambda(lambda)?;
    if order < 2 {
        return Err(Error::domain(format!(
            "truncation order must be at least 2, got {order}"
        )));
    }
    CoeffSeries::new(fold_factor_series(params.probs(), order))
}

fn fold_factor_series(probs: &[f64], order: usize) -> Vec<f64> {
    let mut acc = vec![0.0; order + 1];
    acc[0] = 1.0;
    let mut factor = Vec::with_capacity(order + 1);
    let mut next = vec![0.0; order + 1];
    for &p in probs {
        if p == 0.0 {
            continue;
        }
        // (1 + p w) e^{-p w} = 1 + Σ_{k≥2} (1 − k)(−p)^k/k! w^k
        factor.clear();
        let mut e = 1.0;
        factor.push(1.0);
        for k in 1..=order {
            e *= -p / k as f64;
            if e == 0.0 {
                break;
            }
            factor.push((1.0 - k as f64) * e);
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &f) in factor.iter().enumerate().take(order + 1 - i) {
                next[i + j] += a * f;
            }
        }
        std::mem::swap(&mut acc, &mut next);
    }
    acc
}

/// Charlier–Parseval series `Σ_{k≥2} (k!/λ^k)·α_k²`, doubling the truncation
/// order until the estimated tail is below `tol`.
pub fn chi2_parseval(params: &IndicatorParams, tol: f64) -> Result<Chi2Result> {
    let lambda = params.summaries().lambda;
    check_lambda(lambda)?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let ln_lambda = lambda.ln();
    let mut order = (2.0 * lambda + 32.0).ceil().min(PARSEVAL_MAX_ORDER as f64) as usize;
    loop {
        let alpha = fold_factor_series(params.probs(), order);
        let terms = parseval_terms(&alpha, ln_lambda);
        if let Some(tail) = geometric_tail(&terms) {
            if tail < tol {
                return Ok(Chi2Result {
                    value: terms.iter().sum(),
                    route: Route::Parseval,
                    terms_used: order + 1,
                    tail_bound: Some(tail),
                    skipped: 0,
                });
            }
        }
        if order >= PARSEVAL_MAX_ORDER {
            return Err(Error::NonConvergence {
                what: "Charlier-Parseval series",
                detail: format!("tail still above {tol} at order {order}"),
            });
        }
        order = (2 * order).min(PARSEVAL_MAX_ORDER);
    }
}

/// `(k!/λ^k)·α_k²` for every `k` (the first two are zero).
pub(crate) fn parseval_terms(alpha: &[f64], ln_lambda: f64) -> Vec<f64> {
    alpha
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if k < 2 || a == 0.0 {
                0.0
            } else {
                (2.0 * a.abs().ln() + ln_factorial(k as u64) - k as f64 * ln_lambda).exp()
            }
        })
        .collect()
}

/// Tail estimate from the last four terms: if every consecutive ratio is at
/// most `q < ½`, the remainder is bounded by `t_K·q/(1−q)`.
fn geometric_tail(terms: &[f64]) -> Option<f64> {
    let window = &terms[terms.len().saturating_sub(4)..];
    if window.iter().all(|&t| t == 0.0) {
        return Some(0.0);
    }
    let mut q = 0.0f64;
    for pair in window.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let ratio = if b == 0.0 {
            0.0
        } else if a == 0.0 {
            return None;
        } else {
            b / a
        };
        q = q.max(ratio);
    }
    (q < 0.5).then(|| window[window.len() - 1] * q / (1.0 - q))
}

/// Double-integral form of χ², refined until both node families agree to
/// `cfg.rel_tol`.
pub fn chi2_integral(params: &IndicatorParams, cfg: &QuadratureConfig) -> Result<Chi2Result> {
    cfg.validate()?;
    let lambda = params.summaries().lambda;
    check_lambda(lambda)?;
    if params.len() > INTEGRAL_MAX_N {
        return Err(Error::InstanceTooLarge {
            n: params.len(),
            max: INTEGRAL_MAX_N,
        });
    }
    let probs: Vec<f64> = params.probs().iter().copied().filter(|&p| p > 0.0).collect();

    let (mut radial, mut angular) = (cfg.laguerre_nodes, cfg.angular_nodes);
    let mut current = integral_on_grid(&probs, lambda, radial, angular);
    for _ in 0..cfg.refinement_limit {
        let finer_radial = integral_on_grid(&probs, lambda, 2 * radial, angular);
        let finer_angular = integral_on_grid(&probs, lambda, radial, 2 * angular);
        let scale = current.abs();
        let radial_ok = (finer_radial - current).abs() <= cfg.rel_tol * scale;
        let angular_ok = (finer_angular - current).abs() <= cfg.rel_tol * scale;
        match (radial_ok, angular_ok) {
            (true, true) => {
                return Ok(Chi2Result {
                    value: current,
                    route: Route::Integral,
                    terms_used: radial * angular,
                    tail_bound: None,
                    skipped: 0,
                })
            }
            (false, true) => {
                radial *= 2;
                current = finer_radial;
            }
            (true, false) => {
                angular *= 2;
                current = finer_angular;
            }
            (false, false) => {
                radial *= 2;
                angular *= 2;
                current = integral_on_grid(&probs, lambda, radial, angular);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "χ² double integral",
        detail: format!(
            "no agreement to {} after {} refinements",
            cfg.rel_tol, cfg.refinement_limit
        ),
    })
}

fn integral_on_grid(probs: &[f64], lambda: f64, radial: usize, angular: usize) -> f64 {
    let rule = GaussLaguerre::cached(radial);
    let rotations: Vec<Complex64> = trapezoid_angles(angular)
        .into_iter()
        .map(|t| Complex64::from_polar(1.0, t))
        .collect();
    let mut total = 0.0;
    for (&r, &ln_w) in rule.nodes().iter().zip(rule.ln_weights()) {
        let rho = (r / lambda).sqrt();
        let mut ring = 0.0;
        for &rot in &rotations {
            ring += weighted_integrand(probs, lambda, rho * rot, ln_w);
        }
        total += ring / angular as f64;
    }
    total
}

/// `weight · |G(w) − 1|²` with `G(w) = e^{-λw} Π (1 + p_j w)`, scaled to
/// survive weights that underflow and products that overflow.
fn weighted_integrand(probs: &[f64], lambda: f64, w: Complex64, ln_weight: f64) -> f64 {
    const RESCALE: f64 = 1e100;
    let mut mant = Complex64::new(1.0, 0.0);
    let mut ln_scale = 0.0;
    for &p in probs {
        mant *= 1.0 + p * w;
        let norm = mant.norm();
        if norm > RESCALE {
            mant /= RESCALE;
            ln_scale += RESCALE.ln();
        } else if norm < 1.0 / RESCALE && norm > 0.0 {
            mant *= RESCALE;
            ln_scale -= RESCALE.ln();
        }
    }
    if mant == Complex64::new(0.0, 0.0) {
        return ln_weight.exp();
    }
    let exponent = Complex64::new(ln_scale - lambda * w.re, -lambda * w.im);
    let ln_abs_g = exponent.re + mant.norm().ln();
    if ln_abs_g > 300.0 {
        // |G − 1|² = |G|²·(1 + O(1/|G|))
        return (ln_weight + 2.0 * ln_abs_g).exp();
    }
    let g = mant * exponent.exp();
    ln_weight.exp() * (g - 1.0).norm_sqr()
}
