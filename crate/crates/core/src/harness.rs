//! Randomized verification sweeps.
//!
//! Instance `i` of a sweep draws from its own ChaCha stream keyed by
//! `(seed, i)`, so results do not depend on scheduling and a single instance
//! can be regenerated in isolation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{lemma_single, BoundName, BoundReport};
use crate::distances::{
    chi2_direct, chi2_integral, chi2_parseval, tv_distance, QuadratureConfig, INTEGRAL_MAX_N, PARSEVAL_DEFAULT_TOL,
};
use crate::distributions::{pb_pmf, IndicatorParams};
use crate::{Error, Result};

/// Relative agreement demanded of the quadrature route; it is refined only
/// to `QuadratureConfig::rel_tol` between successive grids.
pub const INTEGRAL_ROUTE_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PDistribution {
    /// `p_j ~ U[0, cap]`.
    Uniform,
    /// Every `p_j` equal to the given value.
    Equal(f64),
    /// Normalized exponential draws scaled so the largest equals `cap`.
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub trials: usize,
    pub n_range: (usize, usize),
    pub p_distribution: PDistribution,
    pub cap: f64,
    /// Relative tolerance for the series route against the direct route.
    pub tolerance: f64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100,
            n_range: (1, 30),
            p_distribution: PDistribution::Uniform,
            cap: 0.7,
            tolerance: 1e-8,
            output_format: OutputFormat::Csv,
            output_path: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        let (lo, hi) = self.n_range;
        if lo == 0 || lo > hi {
            return bad(format!("n range [{lo}, {hi}] must satisfy 1 ≤ min ≤ max"));
        }
        if !(self.cap > 0.0 && self.cap <= 1.0) {
            return bad(format!("cap = {} must lie in (0, 1]", self.cap));
        }
        if let PDistribution::Equal(p) = self.p_distribution {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("equal p = {p} must lie in (0, 1]"));
            }
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance = {} must be positive", self.tolerance));
        }
        Ok(())
    }
}

/// Draws instance `trial` of the sweep keyed by `seed`.
pub fn generate_instance(seed: u64, trial: u64, cfg: &SweepConfig) -> IndicatorParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let (lo, hi) = cfg.n_range;
    let n = rng.gen_range(lo..=hi);
    let probs = match cfg.p_distribution {
        PDistribution::Uniform => (0..n).map(|_| rng.gen_range(0.0..=cfg.cap)).collect(),
        PDistribution::Equal(p) => vec![p; n],
        PDistribution::Mixture => {
            let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let max = draws.iter().cloned().fold(0.0, f64::max);
            if max > 0.0 {
                draws.iter().map(|g| cfg.cap * (g / max)).collect()
            } else {
                vec![cfg.cap; n]
            }
        }
    };
    IndicatorParams::new(probs).expect("generated probabilities lie in [0, cap]")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Bound,
    RouteMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub instance_id: u64,
    pub instance: Vec<f64>,
    pub kind: ViolationKind,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Everything computed for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance_id: u64,
    pub report: BoundReport,
    pub chi2_parseval: Option<f64>,
    pub chi2_integral: Option<f64>,
    /// Single-indicator closed form, when `n = 1`.
    pub lemma_single: Option<f64>,
    pub violations: Vec<Violation>,
    /// Routes that errored (non-convergence and the like).
    pub failures: Vec<String>,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Runs all three χ² routes, TV and every bound on one instance.
///
/// Route failures are recorded rather than propagated. Errors are returned
/// only when the direct route itself fails, since nothing else can be
/// checked without it.
pub fn verify_instance(instance_id: u64, params: &IndicatorParams, tolerance: f64) -> Result<InstanceReport> {
    let lambda = params.summaries().lambda;
    let pmf = pb_pmf(params);
    let chi2 = chi2_direct(&pmf, lambda)?.value;
    let tv = tv_distance(&pmf, lambda)?;
    let report = BoundReport::new(params.clone(), chi2, tv)?;

    let mut failures = Vec::new();
    let mut violations: Vec<Violation> = report
        .violations()
        .into_iter()
        .map(|(name, lhs, rhs)| Violation {
            instance_id,
            instance: params.probs().to_vec(),
            kind: ViolationKind::Bound,
            name: name.to_string(),
            lhs,
            rhs,
        })
        .collect();
    let mut mismatch = |name: &str, value: f64, reference: f64, tol: f64| {
        if !(relative_gap(value, reference) <= tol) {
            violations.push(Violation {
                instance_id,
                instance: params.probs().to_vec(),
                kind: ViolationKind::RouteMismatch,
                name: name.to_string(),
                lhs: value,
                rhs: reference,
            });
        }
    };

    let chi2_parseval = match chi2_parseval(params, PARSEVAL_DEFAULT_TOL) {
        Ok(r) => Some(r.value),
        Err(e) => {
            failures.push(format!("parseval: {e}"));
            None
        }
    };
    if let Some(v) = chi2_parseval {
        mismatch("parseval", v, chi2, tolerance);
    }

    let chi2_integral = if params.len() <= INTEGRAL_MAX_N {
        match chi2_integral(params, &QuadratureConfig::default()) {
            Ok(r) => Some(r.value),
            Err(e) => {
                failures.push(format!("integral: {e}"));
                None
            }
        }
    } else {
        None
    };
    if let Some(v) = chi2_integral {
        mismatch("integral", v, chi2, tolerance.max(INTEGRAL_ROUTE_TOL));
    }

    let lemma = match params.probs() {
        [p] => Some(lemma_single(*p)?),
        _ => None,
    };
    if let Some(v) = lemma {
        mismatch("lemma_single", chi2, v, tolerance);
    }

    Ok(InstanceReport {
        instance_id,
        report,
        chi2_parseval,
        chi2_integral,
        lemma_single: lemma,
        violations,
        failures,
    })
}

/// Min / median / max of a bound's tightness ratio over a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessStats {
    pub count: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl TightnessStats {
    fn from_values(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        Some(Self {
            count: n,
            min: values[0],
            median,
            max: values[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub reports: Vec<InstanceReport>,
    pub violations: Vec<Violation>,
    pub summary: BTreeMap<BoundName, TightnessStats>,
    /// `(instance_id, message)` for instances whose direct route failed.
    pub failures: Vec<(u64, String)>,
}

impl SweepResult {
    pub fn has_violations(&self) -> bool {
        !self.violations.is_empty()
    }

    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty() || self.reports.iter().any(|r| !r.failures.is_empty())
    }
}

/// Generates and verifies `cfg.trials` instances and writes the report file
/// when `cfg.output_path` is set.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let outcomes: Vec<(u64, Result<InstanceReport>)> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let params = generate_instance(cfg.seed, i, cfg);
            (i, verify_instance(i, &params, cfg.tolerance))
        })
        .collect();

    let mut reports = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    reports.sort_by_key(|r| r.instance_id);
    let violations = reports.iter().flat_map(|r| r.violations.iter().cloned()).collect();

    let mut per_bound: BTreeMap<BoundName, Vec<f64>> = BTreeMap::new();
    for r in &reports {
        for (&name, &t) in &r.report.tightness {
            per_bound.entry(name).or_default().push(t);
        }
    }
    let summary = per_bound
        .into_iter()
        .filter_map(|(name, v)| TightnessStats::from_values(v).map(|s| (name, s)))
        .collect();

    let result = SweepResult {
        reports,
        violations,
        summary,
        failures,
    };
    if let Some(path) = &cfg.output_path {
        write_report(&result, cfg.output_format, path)?;
    }
    Ok(result)
}

/// One flat report row; the CSV header and JSON keys are these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance_id: u64,
    pub n: usize,
    pub lambda: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub theta: f64,
    pub chi2_direct: f64,
    pub chi2_parseval: Option<f64>,
    pub chi2_integral: Option<f64>,
    pub tv: f64,
    pub barbour_hall: f64,
    pub ratio_leading: f64,
    pub ratio_upper: f64,
    pub bcg_lower: f64,
    pub bcg_upper: f64,
    pub recursive: f64,
    pub leave_one_out: f64,
    pub theta_bound: f64,
    pub main_corollary: f64,
    pub barbour_hall_valid: bool,
    pub ratio_leading_valid: bool,
    pub ratio_upper_valid: bool,
    pub bcg_lower_valid: bool,
    pub bcg_upper_valid: bool,
    pub recursive_valid: bool,
    pub leave_one_out_valid: bool,
    pub theta_bound_valid: bool,
    pub main_corollary_valid: bool,
}

impl From<&InstanceReport> for ReportRow {
    fn from(r: &InstanceReport) -> Self {
        let b = &r.report;
        let get = |name| b.bound(name).map(|v| (v.value, v.valid)).unwrap_or((f64::NAN, false));
        let s = b.summaries;
        let [bh, zl, zu, bl, bu, t1, loo, tb, mc] = BoundName::REPORTED.map(get);
        Self {
            instance_id: r.instance_id,
            n: b.instance.len(),
            lambda: s.lambda,
            lambda2: s.lambda2,
            lambda3: s.lambda3,
            theta: s.theta,
            chi2_direct: b.chi2_exact,
            chi2_parseval: r.chi2_parseval,
            chi2_integral: r.chi2_integral,
            tv: b.tv_exact,
            barbour_hall: bh.0,
            ratio_leading: zl.0,
            ratio_upper: zu.0,
            bcg_lower: bl.0,
            bcg_upper: bu.0,
            recursive: t1.0,
            leave_one_out: loo.0,
            theta_bound: tb.0,
            main_corollary: mc.0,
            barbour_hall_valid: bh.1,
            ratio_leading_valid: zl.1,
            ratio_upper_valid: zu.1,
            bcg_lower_valid: bl.1,
            bcg_upper_valid: bu.1,
            recursive_valid: t1.1,
            leave_one_out_valid: loo.1,
            theta_bound_valid: tb.1,
            main_corollary_valid: mc.1,
        }
    }
}

pub fn render_report(result: &SweepResult, format: OutputFormat) -> Result<Vec<u8>> {
    let rows: Vec<ReportRow> = result.reports.iter().map(ReportRow::from).collect();
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                writer.serialize(row).map_err(|e| Error::Serialize(e.to_string()))?;
            }
            writer.into_inner().map_err(|e| Error::Serialize(e.to_string()))
        }
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&rows).map_err(|e| Error::Serialize(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn write_report(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    let bytes = render_report(result, format)?;
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a probability file: one value per line, `#` starts a comment.
pub fn parse_probs_text(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let p: f64 = body
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: {body:?} is not a number", lineno + 1)))?;
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::EmptyParams);
    }
    Ok(out)
}

/// Parses `0.1,0.2,0.3`.
pub fn parse_probs_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{s:?} is not a number")))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| if v.is_empty() { Err(Error::EmptyParams) } else { Ok(v) })
}

/// Accepts either a comma list or `@path` naming a probability file.
pub fn load_probs(arg: &str) -> Result<IndicatorParams> {
    let probs = match arg.strip_prefix('@') {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: PathBuf::from(path),
                source,
            })?;
            parse_probs_text(&text)?
        }
        None => parse_probs_list(arg)?,
    };
    IndicatorParams::new(probs)
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ViolationKind::Bound => "bound",
            ViolationKind::RouteMismatch => "route-mismatch",
        };
        write!(
            f,
            "instance {} ({kind} {}): lhs = {:e}, rhs = {:e}",
            self.instance_id, self.name, self.lhs, self.rhs
        )
    }
}
