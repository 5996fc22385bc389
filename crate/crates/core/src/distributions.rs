//! Indicator parameters, the Poisson-binomial PMF and Poisson log-weights.

use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest instance accepted by [`pb_pmf_exact`].
pub const MAX_EXACT_N: usize = 20;

/// Size of the precomputed `ln(m!)` table.
const LN_FACTORIAL_TABLE: usize = 10_000;

/// Success probabilities `p_1, …, p_n` of independent indicators.
///
/// Zero probabilities are kept so that indices line up with the caller's
/// input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct IndicatorParams {
    probs: Vec<f64>,
}

impl IndicatorParams {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyParams);
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability { index, value });
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn summaries(&self) -> Summaries {
        summaries(self)
    }

    /// Parameters of `S_n − I_j`, or `None` when `j` is the only indicator.
    pub fn without(&self, j: usize) -> Option<IndicatorParams> {
        if self.probs.len() < 2 || j >= self.probs.len() {
            return None;
        }
        let probs = self
            .probs
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &p)| p)
            .collect();
        Some(Self { probs })
    }
}

impl TryFrom<Vec<f64>> for IndicatorParams {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<IndicatorParams> for Vec<f64> {
    fn from(params: IndicatorParams) -> Self {
        params.probs
    }
}

/// Scalar summaries `λ = Σp`, `λ₂ = Σp²`, `λ₃ = Σp³`, `Θ = max p` and the
/// ratio `λ₂/λ` (undefined when `λ = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summaries {
    pub lambda: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub theta: f64,
    pub ratio: Option<f64>,
}

impl Summaries {
    /// Summaries built from raw moments; `ratio` is derived.
    pub fn from_moments(lambda: f64, lambda2: f64, lambda3: f64, theta: f64) -> Self {
        let ratio = (lambda > 0.0).then(|| lambda2 / lambda);
        Self {
            lambda,
            lambda2,
            lambda3,
            theta,
            ratio,
        }
    }
}

pub fn summaries(params: &IndicatorParams) -> Summaries {
    let (mut lambda, mut lambda2, mut lambda3, mut theta) = (0.0, 0.0, 0.0, 0.0f64);
    for &p in params.probs() {
        let p2 = p * p;
        lambda += p;
        lambda2 += p2;
        lambda3 += p2 * p;
        theta = theta.max(p);
    }
    Summaries::from_moments(lambda, lambda2, lambda3, theta)
}

/// Probability mass function on `{0, …, support_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    mass: Vec<f64>,
}

impl DiscretePmf {
    /// Wraps a mass vector after checking nonnegativity and normalization
    /// (to 1e-12).
    pub fn from_mass(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::domain("empty mass vector"));
        }
        if let Some(m) = mass.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::domain(format!("mass at {m} is negative or not finite")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { mass })
    }

    /// Unit mass at `m`.
    pub fn point_mass(m: usize) -> Self {
        let mut mass = vec![0.0; m + 1];
        mass[m] = 1.0;
        Self { mass }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn support_max(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(m, &p)| m as f64 * p).sum()
    }
}

/// PMF of `S_n` by folding the indicators in left to right, O(n²).
pub fn pb_pmf(params: &IndicatorParams) -> DiscretePmf {
    DiscretePmf {
        mass: convolve_indicators(params.probs()),
    }
}

pub(crate) fn convolve_indicators(probs: &[f64]) -> Vec<f64> {
    let mut mass = Vec::with_capacity(probs.len() + 1);
    mass.push(1.0);
    for &p in probs {
        let q = 1.0 - p;
        mass.push(0.0);
        for m in (1..mass.len()).rev() {
            mass[m] = mass[m] * q + mass[m - 1] * p;
        }
        mass[0] *= q;
    }
    mass
}

/// Exact-rational PMF; the test oracle for [`pb_pmf`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPmf {
    mass: Vec<BigRational>,
}

impl ExactPmf {
    pub fn mass(&self) -> &[BigRational] {
        &self.mass
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.mass.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Same convolution as [`pb_pmf`] in exact rational arithmetic.
pub fn pb_pmf_exact(probs: &[BigRational]) -> Result<ExactPmf> {
    if probs.is_empty() {
        return Err(Error::EmptyParams);
    }
    if probs.len() > MAX_EXACT_N {
        return Err(Error::InstanceTooLarge {
            n: probs.len(),
            max: MAX_EXACT_N,
        });
    }
    let one = BigRational::one();
    for (index, p) in probs.iter().enumerate() {
        if *p < BigRational::zero() || *p > one {
            use num_traits::ToPrimitive;
            return Err(Error::InvalidProbability {
                index,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut mass = vec![BigRational::one()];
    for p in probs {
        let q = &one - p;
        mass.push(BigRational::zero());
        for m in (1..mass.len()).rev() {
            mass[m] = &mass[m] * &q + &mass[m - 1] * p;
        }
        mass[0] = &mass[0] * &q;
    }
    Ok(ExactPmf { mass })
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE + 1);
        let mut acc = NeumaierSum::default();
        table.push(0.0);
        for k in 1..=LN_FACTORIAL_TABLE {
            acc.add((k as f64).ln());
            table.push(acc.value());
        }
        table
    })
}

/// `ln(m!)` as a compensated running sum of `ln k`.
pub fn ln_factorial(m: u64) -> f64 {
    let table = ln_factorial_table();
    if let Some(&v) = table.get(m as usize) {
        return v;
    }
    let mut acc = NeumaierSum::from(table[LN_FACTORIAL_TABLE]);
    for k in (LN_FACTORIAL_TABLE as u64 + 1)..=m {
        acc.add((k as f64).ln());
    }
    acc.value()
}

/// `ln(e^{-λ} λ^m / m!)`.
pub fn poisson_log_pmf(lambda: f64, m: u64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("Poisson mean must be positive, got {lambda}")));
    }
    Ok(poisson_log_pmf_unchecked(lambda, lambda.ln(), m))
}

#[inline]
pub(crate) fn poisson_log_pmf_unchecked(lambda: f64, ln_lambda: f64, m: u64) -> f64 {
    if m == 0 {
        -lambda
    } else {
        -lambda + m as f64 * ln_lambda - ln_factorial(m)
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl From<f64> for NeumaierSum {
    fn from(sum: f64) -> Self {
        Self { sum, comp: 0.0 }
    }
}
