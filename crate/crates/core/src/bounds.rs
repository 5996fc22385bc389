//! Closed-form bounds on the TV and χ² distances to `Po(λ)`.
//!
//! Functions whose hypotheses can fail (`λ₂/λ < 1`, `Θ²e^Θ < 1`, `n ≥ 2`)
//! return a [`BoundValue`] with `valid = false` instead of an error, so a
//! sweep can count how often each hypothesis holds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distances::chi2_direct;
use crate::distributions::{pb_pmf, IndicatorParams, Summaries};
use crate::{Error, Result};

/// Absolute slack allowed when checking a bound against an exact distance.
pub const GUARD_BAND: f64 = 1e-13;

/// `2(√e − 1)²`.
pub fn ratio_upper_constant() -> f64 {
    2.0 * (0.5f64.exp() - 1.0).powi(2)
}

/// Lower Bobkov–Chistyakov–Götze constant, `10⁻⁸`.
pub fn bcg_lower_constant() -> f64 {
    10f64.powi(-8)
}

/// Upper Bobkov–Chistyakov–Götze constant, `5.6·10⁷`.
pub fn bcg_upper_constant() -> f64 {
    56.0 * 10f64.powi(6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    BarbourHall,
    RatioLeading,
    RatioUpper,
    BcgLower,
    BcgUpper,
    Recursive,
    LeaveOneOut,
    ThetaBound,
    MainCorollary,
    EqualP,
}

/// What a bound claims about the exact distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    /// `tv ≤ value`
    TvUpper,
    /// `χ² ≤ value`
    Chi2Upper,
    /// `χ² < value`
    Chi2StrictUpper,
    /// `value ≤ χ²`
    Chi2Lower,
    /// An asymptotic estimate; nothing to check.
    Estimate,
}

impl BoundName {
    /// Bounds evaluated for every instance of a sweep, in report order.
    pub const REPORTED: [BoundName; 9] = [
        BoundName::BarbourHall,
        BoundName::RatioLeading,
        BoundName::RatioUpper,
        BoundName::BcgLower,
        BoundName::BcgUpper,
        BoundName::Recursive,
        BoundName::LeaveOneOut,
        BoundName::ThetaBound,
        BoundName::MainCorollary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::BarbourHall => "barbour_hall",
            BoundName::RatioLeading => "ratio_leading",
            BoundName::RatioUpper => "ratio_upper",
            BoundName::BcgLower => "bcg_lower",
            BoundName::BcgUpper => "bcg_upper",
            BoundName::Recursive => "recursive",
            BoundName::LeaveOneOut => "leave_one_out",
            BoundName::ThetaBound => "theta_bound",
            BoundName::MainCorollary => "main_corollary",
            BoundName::EqualP => "equal_p",
        }
    }

    pub fn claim(self) -> Claim {
        match self {
            BoundName::BarbourHall => Claim::TvUpper,
            BoundName::RatioLeading => Claim::Estimate,
            BoundName::RatioUpper | BoundName::BcgUpper => Claim::Chi2Upper,
            BoundName::BcgLower => Claim::Chi2Lower,
            BoundName::Recursive
            | BoundName::LeaveOneOut
            | BoundName::ThetaBound
            | BoundName::MainCorollary
            | BoundName::EqualP => Claim::Chi2StrictUpper,
        }
    }
}

impl std::fmt::Display for BoundName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub name: BoundName,
    /// Formula value; meaningful as a guarantee only when `valid`.
    pub value: f64,
    pub valid: bool,
    pub validity_reason: Option<String>,
}

impl BoundValue {
    fn valid(name: BoundName, value: f64) -> Self {
        Self {
            name,
            value,
            valid: true,
            validity_reason: None,
        }
    }

    fn invalid(name: BoundName, value: f64, reason: impl Into<String>) -> Self {
        Self {
            name,
            value,
            valid: false,
            validity_reason: Some(reason.into()),
        }
    }

    /// `Some((lhs, rhs))` when the exact distances contradict this bound
    /// beyond [`GUARD_BAND`].
    pub fn violation(&self, chi2: f64, tv: f64) -> Option<(f64, f64)> {
        if !self.valid {
            return None;
        }
        let (lhs, rhs) = match self.name.claim() {
            Claim::TvUpper => (tv, self.value),
            Claim::Chi2Upper | Claim::Chi2StrictUpper => (chi2, self.value),
            Claim::Chi2Lower => (self.value, chi2),
            Claim::Estimate => return None,
        };
        let holds = match self.name.claim() {
            Claim::Chi2StrictUpper => lhs < rhs + GUARD_BAND,
            _ => lhs <= rhs + GUARD_BAND,
        };
        (!holds).then_some((lhs, rhs))
    }
}

fn positive_lambda(s: &Summaries) -> Result<f64> {
    match s.ratio {
        Some(r) if s.lambda > 0.0 => Ok(r),
        _ => Err(Error::domain(format!("λ must be positive, got {}", s.lambda))),
    }
}

/// `(1 − e^{-λ})·λ₂/λ`, a bound on TV.
pub fn barbour_hall(s: &Summaries) -> Result<BoundValue> {
    let ratio = positive_lambda(s)?;
    Ok(BoundValue::valid(BoundName::BarbourHall, -(-s.lambda).exp_m1() * ratio))
}

/// Leading asymptotic term `1/√(1 − (λ₂/λ)²) − 1`.
pub fn ratio_leading(s: &Summaries) -> BoundValue {
    let name = BoundName::RatioLeading;
    match s.ratio {
        None => BoundValue::invalid(name, f64::NAN, "λ = 0"),
        Some(r) if r >= 1.0 => BoundValue::invalid(name, f64::INFINITY, "λ₂/λ = 1"),
        Some(r) => BoundValue::valid(name, 1.0 / (1.0 - r * r).sqrt() - 1.0),
    }
}

/// `2(√e − 1)²·(λ₂/λ)²/(1 − λ₂/λ)³`.
pub fn ratio_upper(s: &Summaries) -> BoundValue {
    let name = BoundName::RatioUpper;
    match s.ratio {
        None => BoundValue::invalid(name, f64::NAN, "λ = 0"),
        Some(r) if r >= 1.0 => BoundValue::invalid(name, f64::INFINITY, "λ₂/λ = 1"),
        Some(r) => BoundValue::valid(name, ratio_upper_constant() * r * r / (1.0 - r).powi(3)),
    }
}

/// `(λ₂/λ)²·√(max{1,λ}/max{1,λ−λ₂})`.
pub fn bcg_envelope_value(s: &Summaries) -> Result<f64> {
    let ratio = positive_lambda(s)?;
    Ok(ratio * ratio * (s.lambda.max(1.0) / (s.lambda - s.lambda2).max(1.0)).sqrt())
}

/// `(C₁·E, C₂·E)` with `E` the envelope expression.
pub fn bcg_envelope(s: &Summaries) -> Result<(BoundValue, BoundValue)> {
    let e = bcg_envelope_value(s)?;
    Ok((
        BoundValue::valid(BoundName::BcgLower, bcg_lower_constant() * e),
        BoundValue::valid(BoundName::BcgUpper, bcg_upper_constant() * e),
    ))
}

/// χ² distance of one indicator to `Po(p)`: `e^p((1−p)² + p) − 1`.
pub fn lemma_single(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(p.exp() * ((1.0 - p).powi(2) + p) - 1.0)
}

fn require_pair(params: &IndicatorParams) -> Result<Summaries> {
    if params.len() < 2 {
        return Err(Error::domain("leave-one-out bounds need n ≥ 2"));
    }
    let s = params.summaries();
    positive_lambda(&s)?;
    Ok(s)
}

/// `(λ₂/λ²)·Σ_j p_j²·χ²(S_n − I_j, Po(λ)) + ½(λ₂/λ)²`.
///
/// Each leave-one-out law is convolved afresh from the other `n − 1`
/// probabilities and compared against the full mean `λ`.
pub fn recursive_bound_rhs(params: &IndicatorParams) -> Result<f64> {
    let s = require_pair(params)?;
    let ratio = s.lambda2 / s.lambda;
    let mut weighted = 0.0;
    for (j, &p) in params.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let rest = params.without(j).expect("n ≥ 2");
        let chi2 = chi2_direct(&pb_pmf(&rest), s.lambda)?.value;
        weighted += p * p * chi2;
    }
    Ok(s.lambda2 / (s.lambda * s.lambda) * weighted + 0.5 * ratio * ratio)
}

/// `(λ₂/λ²)·Σ_j p_j² e^{p_j} χ²(S_n − I_j, Po(λ − p_j)) + (λ₂/λ²)·Σ_j p_j²(e^{p_j} − 1) + ½(λ₂/λ)²`.
pub fn cor_leave_one_out_rhs(params: &IndicatorParams) -> Result<f64> {
    let s = require_pair(params)?;
    let ratio = s.lambda2 / s.lambda;
    let mut weighted = 0.0;
    let mut excess = 0.0;
    for (j, &p) in params.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let rest = params.without(j).expect("n ≥ 2");
        let mean = rest.summaries().lambda;
        if !(mean > 0.0) {
            return Err(Error::domain(format!(
                "λ − p_{j} = {mean} is not positive; leaving out indicator {j} leaves a point mass"
            )));
        }
        let chi2 = chi2_direct(&pb_pmf(&rest), mean)?.value;
        weighted += p * p * p.exp() * chi2;
        excess += p * p * p.exp_m1();
    }
    let scale = s.lambda2 / (s.lambda * s.lambda);
    Ok(scale * weighted + scale * excess + 0.5 * ratio * ratio)
}

/// `Θ²e^Θ`, which must be below one for the iterated bounds.
pub fn iteration_factor(theta: f64) -> f64 {
    theta * theta * theta.exp()
}

fn theta_formula(theta: f64) -> f64 {
    0.5 * theta * theta * (2.0 * theta.exp() - 1.0) / (1.0 - iteration_factor(theta))
}

/// `(Θ²/2)·(2e^Θ − 1)/(1 − Θ²e^Θ)`, valid when `Θ²e^Θ < 1`.
pub fn theta_bound(s: &Summaries) -> BoundValue {
    let name = BoundName::ThetaBound;
    if !(s.lambda > 0.0) {
        return BoundValue::invalid(name, f64::NAN, "λ = 0");
    }
    let factor = iteration_factor(s.theta);
    let value = theta_formula(s.theta);
    if factor < 1.0 {
        BoundValue::valid(name, value)
    } else {
        BoundValue::invalid(name, value, format!("Θ²e^Θ = {factor} ≥ 1"))
    }
}

/// `½(λ₂/λ)²·Θ²(2e^Θ − 1)/(1 − Θ²e^Θ)·e^Θ + (λ₂λ₃/λ²)e^Θ + ½(λ₂/λ)²`.
pub fn main_corollary_bound(s: &Summaries) -> BoundValue {
    let name = BoundName::MainCorollary;
    let Some(ratio) = s.ratio.filter(|_| s.lambda > 0.0) else {
        return BoundValue::invalid(name, f64::NAN, "λ = 0");
    };
    let e_theta = s.theta.exp();
    let factor = iteration_factor(s.theta);
    let half_sq = 0.5 * ratio * ratio;
    let value = half_sq * s.theta * s.theta * (2.0 * e_theta - 1.0) / (1.0 - factor) * e_theta
        + s.lambda2 * s.lambda3 / (s.lambda * s.lambda) * e_theta
        + half_sq;
    if factor < 1.0 {
        BoundValue::valid(name, value)
    } else {
        BoundValue::invalid(name, value, format!("Θ²e^Θ = {factor} ≥ 1"))
    }
}

/// Θ-bound specialised to `n` indicators sharing probability `p`; `n` does
/// not enter the formula.
pub fn equal_p_bound(p: f64, _n: usize) -> BoundValue {
    let name = BoundName::EqualP;
    if !(0.0..=1.0).contains(&p) {
        return BoundValue::invalid(name, f64::NAN, format!("p = {p} outside [0, 1]"));
    }
    let factor = iteration_factor(p);
    let value = theta_formula(p);
    if factor < 1.0 {
        BoundValue::valid(name, value)
    } else {
        BoundValue::invalid(name, value, format!("p²e^p = {factor} ≥ 1"))
    }
}

/// Every bound in [`BoundName::REPORTED`] for one instance.
pub fn evaluate_bounds(params: &IndicatorParams) -> Result<Vec<BoundValue>> {
    let s = params.summaries();
    let (bcg_lower, bcg_upper) = bcg_envelope(&s)?;
    let recursive = |name, rhs: Result<f64>| match rhs {
        Ok(v) => Ok(BoundValue::valid(name, v)),
        Err(Error::Domain(reason)) => Ok(BoundValue::invalid(name, f64::NAN, reason)),
        Err(e) => Err(e),
    };
    Ok(vec![
        barbour_hall(&s)?,
        ratio_leading(&s),
        ratio_upper(&s),
        bcg_lower,
        bcg_upper,
        recursive(BoundName::Recursive, recursive_bound_rhs(params))?,
        recursive(BoundName::LeaveOneOut, cor_leave_one_out_rhs(params))?,
        theta_bound(&s),
        main_corollary_bound(&s),
    ])
}

/// Exact distances of one instance next to every bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub instance: IndicatorParams,
    pub summaries: Summaries,
    pub chi2_exact: f64,
    pub tv_exact: f64,
    pub bounds: Vec<BoundValue>,
    /// `value / exact` for every valid bound (TV for Barbour–Hall).
    pub tightness: BTreeMap<BoundName, f64>,
}

impl BoundReport {
    pub fn new(params: IndicatorParams, chi2_exact: f64, tv_exact: f64) -> Result<Self> {
        let bounds = evaluate_bounds(&params)?;
        let tightness = bounds
            .iter()
            .filter(|b| b.valid)
            .filter_map(|b| {
                let exact = match b.name.claim() {
                    Claim::TvUpper => tv_exact,
                    _ => chi2_exact,
                };
                (exact > 0.0).then(|| (b.name, b.value / exact))
            })
            .collect();
        Ok(Self {
            summaries: params.summaries(),
            instance: params,
            chi2_exact,
            tv_exact,
            bounds,
            tightness,
        })
    }

    pub fn bound(&self, name: BoundName) -> Option<&BoundValue> {
        self.bounds.iter().find(|b| b.name == name)
    }

    /// `(bound, lhs, rhs)` for every valid bound the exact values contradict.
    pub fn violations(&self) -> Vec<(BoundName, f64, f64)> {
        self.bounds
            .iter()
            .filter_map(|b| b.violation(self.chi2_exact, self.tv_exact).map(|(l, r)| (b.name, l, r)))
            .collect()
    }
}
