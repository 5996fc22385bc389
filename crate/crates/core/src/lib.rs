//! Exact distances between the law of a sum of independent indicators
//! (the Poisson-binomial law) and the Poisson law with the same mean.
//!
//! The χ² distance is available through three independent routes:
//!
//! - [`distances::chi2_direct`]: the defining sum over the finite support,
//! - [`distances::chi2_parseval`]: the Charlier expansion
//!   `Σ_k (λ^k/k!)·(E C_k(λ, S_n))²`,
//! - [`distances::chi2_integral`]: a Gauss–Laguerre × trapezoid quadrature of
//!   the double-integral form.
//!
//! [`bounds`] evaluates the known closed-form estimates (Barbour–Hall, the
//! Stein–Chen type recursive bounds, the Θ-bound and friends) and
//! [`harness`] drives randomized sweeps that check every one of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod charlier;
pub mod distances;
pub mod distributions;
mod error;
pub mod harness;
pub mod quadrature;
pub mod series;

pub use error::{Error, Result};

pub use bounds::{BoundName, BoundReport, BoundValue};
pub use charlier::{charlier_eval, CharlierRows};
pub use distances::{Chi2Result, QuadratureConfig, Route};
pub use distributions::{DiscretePmf, ExactPmf, IndicatorParams, Summaries};
pub use series::CoeffSeries;
