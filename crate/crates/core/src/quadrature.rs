//! Gauss–Laguerre rules for `∫_0^∞ f(r) e^{-r} dr` and the periodic
//! trapezoid rule.
//!
//! Laguerre nodes are the eigenvalues of the symmetric Jacobi matrix
//! (diagonal `2i+1`, off-diagonal `i`), located by Sturm-count bisection and
//! polished by Newton steps on `L_n`. Weights come from the Christoffel
//! function `1/Σ_{k<n} L_k(x)²` and are kept in log form: for a few hundred
//! nodes the outer weights underflow `f64`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Laguerre nodes with log-weights.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    nodes: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Builds an `n`-point rule (uncached).
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "a quadrature rule needs at least one node");
        let mut nodes = jacobi_eigenvalues(n);
        for x in nodes.iter_mut() {
            *x = newton_polish(n, *x);
        }
        let ln_weights = nodes.iter().map(|&x| ln_christoffel(n, x)).collect();
        Self { nodes, ln_weights }
    }

    /// Shared rule for `n` nodes; built once per process.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLaguerre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(Self::new(n));
        cache
            .lock()
            .expect("rule cache poisoned")
            .entry(n)
            .or_insert(rule)
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn ln_weights(&self) -> &[f64] {
        &self.ln_weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, &lw)| lw.exp() * f(x))
            .sum()
    }
}

/// Angles `2πj/m`, `j = 0..m`; each carries weight `1/m` for the normalized
/// integral `(1/2π)∫_{-π}^{π}`.
pub fn trapezoid_angles(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

/// Number of eigenvalues of the `n×n` Laguerre Jacobi matrix below `x`.
fn sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0 - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let b = i as f64;
        let prev = if d == 0.0 { f64::EPSILON } else { d };
        d = (2 * i + 1) as f64 - x - b * b / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn jacobi_eigenvalues(n: usize) -> Vec<f64> {
    // Gershgorin: all eigenvalues lie in [0, 4n]
    let upper = 4.0 * n as f64 + 2.0;
    let mut out = Vec::with_capacity(n);
    let mut lo_bound = 0.0;
    for k in 0..n {
        let (mut lo, mut hi) = (lo_bound, upper);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(n, mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        out.push(x);
        lo_bound = lo;
    }
    out
}

/// `(L_{n-1}(x), L_n(x))` scaled by a common positive factor.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return (0.0, 1.0);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64;
        prev = cur;
        cur = next;
        let big = cur.abs().max(prev.abs());
        if big > 1e150 {
            prev /= big;
            cur /= big;
        }
    }
    (prev, cur)
}

fn newton_polish(n: usize, mut x: f64) -> f64 {
    for _ in 0..3 {
        let (prev, cur) = laguerre_pair(n, x);
        // L_n' = n (L_n - L_{n-1}) / x
        let denom = n as f64 * (cur - prev);
        if denom == 0.0 || x == 0.0 {
            break;
        }
        let step = x * cur / denom;
        if !step.is_finite() || step.abs() > 1e-6 * x.max(1e-3) {
            break;
        }
        x -= step;
        if step.abs() <= f64::EPSILON * x {
            break;
        }
    }
    x
}

/// `-ln Σ_{k<n} L_k(x)²`, the log of the Gauss weight at node `x`.
fn ln_christoffel(n: usize, x: f64) -> f64 {
    let mut ln_scale = 0.0;
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    let mut sumsq = 1.0;
    for k in 0..n.saturating_sub(1) {
        let next = if k == 0 {
            1.0 - x
        } else {
            ((2 * k + 1) as f64 - x) * cur / (k + 1) as f64 - k as f64 * prev / (k + 1) as f64
        };
        prev = cur;
        cur = next;
        sumsq += cur * cur;
        let big = cur.abs().max(prev.abs());
        if big > 1e100 {
            prev /= big;
            cur /= big;
            sumsq /= big * big;
            ln_scale += big.ln();
        }
    }
    -(sumsq.ln() + 2.0 * ln_scale)
}
