//! Acceptance checks; prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

use std::process::{Command, ExitCode};
use std::time::Instant;

use num_rational::BigRational;
use poisson_approx::bounds::{
    barbour_hall, bcg_envelope_value, iteration_factor, lemma_single, main_corollary_bound, ratio_leading, ratio_upper,
    recursive_bound_rhs, theta_bound, GUARD_BAND,
};
use poisson_approx::charlier::{
    charlier_difference_check, charlier_genfun_coeffs, charlier_values, dual_orthogonality_sum, shift_exp_transform,
};
use poisson_approx::distances::{
    chi2_direct, chi2_integral, chi2_parseval, tv_distance, QuadratureConfig, PARSEVAL_DEFAULT_TOL,
};
use poisson_approx::distributions::{ln_factorial, pb_pmf, pb_pmf_exact, poisson_log_pmf};
use poisson_approx::harness::{generate_instance, PDistribution, SweepConfig};
use poisson_approx::{CoeffSeries, IndicatorParams};

type Outcome = Result<String, String>;

fn instances(seed: u64, n_range: (usize, usize), cap: f64) -> impl Iterator<Item = IndicatorParams> {
    let cfg = SweepConfig {
        seed,
        n_range,
        cap,
        p_distribution: PDistribution::Uniform,
        ..Default::default()
    };
    (0u64..).map(move |i| generate_instance(seed, i, &cfg))
}

fn chi2_and_tv(params: &IndicatorParams) -> (f64, f64) {
    let lambda = params.summaries().lambda;
    let pmf = pb_pmf(params);
    (
        chi2_direct(&pmf, lambda).unwrap().value,
        tv_distance(&pmf, lambda).unwrap(),
    )
}

fn route_agreement() -> Outcome {
    let start = Instant::now();
    let (mut worst_parseval, mut worst_integral) = (0f64, 0f64);
    let mut integral_count = 0;
    let accepted = instances(101, (1, 30), 0.9)
        .filter(|p| p.summaries().lambda >= 0.1)
        .take(1000);
    for params in accepted {
        let (direct, _) = chi2_and_tv(&params);
        let parseval = chi2_parseval(&params, PARSEVAL_DEFAULT_TOL)
            .map_err(|e| e.to_string())?
            .value;
        worst_parseval = worst_parseval.max((parseval - direct).abs() / direct);
        if params.len() <= 10 {
            let integral = chi2_integral(&params, &QuadratureConfig::default())
                .map_err(|e| e.to_string())?
                .value;
            worst_integral = worst_integral.max((integral - direct).abs() / direct);
            integral_count += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "max rel. error parseval {worst_parseval:.2e}, integral {worst_integral:.2e} ({integral_count} instances), {elapsed:.1} s"
    );
    if worst_parseval <= 1e-8 && worst_integral <= 1e-5 && elapsed < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lemma_reproduction() -> Outcome {
    let mut worst = 0f64;
    let mut max_chi2 = 0f64;
    for i in 1..=99 {
        let p = i as f64 / 100.0;
        let params = IndicatorParams::new(vec![p]).unwrap();
        let (chi2, _) = chi2_and_tv(&params);
        worst = worst.max((chi2 - lemma_single(p).unwrap()).abs());
        max_chi2 = max_chi2.max(chi2);
    }
    let bound = std::f64::consts::E - 1.0;
    let detail = format!("max abs. error {worst:.2e}, grid max {max_chi2:.6} ≤ e−1 = {bound:.6}");
    if worst <= 1e-12 && max_chi2 <= bound {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct SweepRecord {
    chi2: f64,
    tv: f64,
    recursive: f64,
    params: IndicatorParams,
}

fn main_sweep() -> Vec<SweepRecord> {
    instances(2024, (2, 50), 0.95)
        .take(10_000)
        .map(|params| {
            let (chi2, tv) = chi2_and_tv(&params);
            let recursive = recursive_bound_rhs(&params).unwrap();
            SweepRecord {
                chi2,
                tv,
                recursive,
                params,
            }
        })
        .collect()
}

fn verdict(violations: usize, checked: usize, extra: String) -> Outcome {
    let detail = format!("{violations} violations in {checked} checked instances{extra}");
    if violations == 0 && checked > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn recursive_soundness(sweep: &[SweepRecord]) -> Outcome {
    let violations = sweep.iter().filter(|r| !(r.chi2 < r.recursive + GUARD_BAND)).count();
    let min_ratio = sweep.iter().map(|r| r.recursive / r.chi2).fold(f64::INFINITY, f64::min);
    verdict(violations, sweep.len(), format!(", min rhs/χ² {min_ratio:.4}"))
}

fn corollary_soundness(sweep: &[SweepRecord]) -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    for r in sweep {
        let s = r.params.summaries();
        if iteration_factor(s.theta) >= 1.0 {
            continue;
        }
        checked += 1;
        let main = main_corollary_bound(&s);
        let theta = theta_bound(&s);
        if !(main.valid && theta.valid && r.chi2 < main.value + GUARD_BAND && r.chi2 < theta.value + GUARD_BAND) {
            violations += 1;
        }
    }
    let note = iteration_factor(0.7);
    if note >= 1.0 {
        return Err(format!("0.49·e^0.7 = {note} is not below 1"));
    }
    verdict(violations, checked, format!(", 0.49·e^0.7 = {note:.6} < 1"))
}

fn ratio_upper_soundness(sweep: &[SweepRecord]) -> Outcome {
    let mut checked = 0;
    let mut violations = 0;
    for r in sweep {
        let s = r.params.summaries();
        if !matches!(s.ratio, Some(q) if q < 1.0) {
            continue;
        }
        checked += 1;
        let b = ratio_upper(&s);
        if !(b.valid && r.chi2 <= b.value + GUARD_BAND) {
            violations += 1;
        }
    }
    verdict(violations, checked, String::new())
}

fn barbour_hall_soundness(sweep: &[SweepRecord]) -> Outcome {
    let violations = sweep
        .iter()
        .filter(|r| {
            let b = barbour_hall(&r.params.summaries()).unwrap();
            !(r.tv <= b.value + GUARD_BAND)
        })
        .count();
    verdict(violations, sweep.len(), String::new())
}

fn bcg_envelope(sweep: &[SweepRecord]) -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, 0f64);
    let mut violations = 0;
    for r in sweep {
        let e = bcg_envelope_value(&r.params.summaries()).unwrap();
        let ratio = r.chi2 / e;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        if !(1e-8 * e <= r.chi2 + GUARD_BAND && r.chi2 <= 5.6e7 * e + GUARD_BAND) {
            violations += 1;
        }
    }
    verdict(violations, sweep.len(), format!(", χ²/E ∈ [{lo:.4e}, {hi:.4e}]"))
}

fn asymptotic_equal_p() -> Outcome {
    let p = 0.1;
    let mut ratios = Vec::new();
    for n in [100usize, 500, 1000] {
        let params = IndicatorParams::new(vec![p; n]).unwrap();
        let (chi2, _) = chi2_and_tv(&params);
        ratios.push(chi2 / ratio_leading(&params.summaries()).value);
    }
    let in_band = ratios.iter().all(|r| (0.9..=1.1).contains(r));
    let closer = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let detail = format!("χ²/leading = {:.6}, {:.6}, {:.6}", ratios[0], ratios[1], ratios[2]);
    if in_band && closer {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gap(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

fn charlier_identities() -> Outcome {
    let lambdas = [0.5, 1.0, 3.0, 5.0];
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok && failures.len() < 5 {
            failures.push(what);
        }
    };

    for lambda in lambdas {
        for m in 0..=40u64 {
            let here = charlier_values(lambda, 26, m as f64).unwrap();
            if m > 0 {
                let below = charlier_values(lambda, 26, (m - 1) as f64).unwrap();
                for k in 0..=25 {
                    let shifted = m as f64 / lambda * below[k];
                    let scale = here[k + 1].abs().max(shifted.abs()).max(here[k].abs());
                    let g = gap(here[k + 1], shifted - here[k], scale);
                    check(g <= 1e-8, format!("recurrence λ={lambda} k={k} m={m}: {g:e}"));
                }
            }
            for k in 1..=25 {
                let (lhs, rhs) = charlier_difference_check(lambda, k, m as f64).unwrap();
                let g = gap(lhs, rhs, lhs.abs().max(rhs.abs()).max(here[k].abs()));
                check(g <= 1e-8, format!("difference λ={lambda} k={k} m={m}: {g:e}"));
            }
        }

        for x in 0..=20u64 {
            let coeffs = charlier_genfun_coeffs(lambda, x, 20).unwrap();
            let values = charlier_values(lambda, 20, x as f64).unwrap();
            for k in 0..=20usize {
                let rescale = (ln_factorial(k as u64) - k as f64 * lambda.ln()).exp();
                let terms: f64 = (0..=k.min(x as usize))
                    .map(|j| {
                        let ln_binom = ln_factorial(x) - ln_factorial(j as u64) - ln_factorial(x - j as u64);
                        (ln_binom + ln_factorial(k as u64) - ln_factorial((k - j) as u64) - j as f64 * lambda.ln())
                            .exp()
                    })
                    .sum();
                let g = gap(coeffs.get(k) * rescale, values[k], values[k].abs().max(terms));
                check(g <= 1e-9, format!("genfun λ={lambda} x={x} k={k}: {g:e}"));
            }
        }

        for x in 0..=8u64 {
            for y in 0..=8u64 {
                let v = dual_orthogonality_sum(lambda, x, y, 1e-12).unwrap();
                if x == y {
                    let want = (ln_factorial(x) + lambda - x as f64 * lambda.ln()).exp();
                    check((v - want).abs() <= 1e-8 * want, format!("dual λ={lambda} x=y={x}: {v}"));
                } else {
                    check(v.abs() <= 1e-8, format!("dual λ={lambda} x={x} y={y}: {v}"));
                }
            }
        }
    }

    for lambda in [1.0, 4.0] {
        let mut gram = [[0f64; 11]; 11];
        for x in 0u64.. {
            let ln_w = poisson_log_pmf(lambda, x).unwrap();
            if x as f64 > 2.0 * lambda + 10.0 && ln_w < -80.0 {
                break;
            }
            let c = charlier_values(lambda, 10, x as f64).unwrap();
            for n in 0..=10 {
                for m in 0..=10 {
                    gram[n][m] += ln_w.exp() * c[n] * c[m];
                }
            }
        }
        for (n, row) in gram.iter().enumerate() {
            let norm = (ln_factorial(n as u64) - n as f64 * f64::ln(lambda)).exp();
            for (m, &v) in row.iter().enumerate() {
                let ok = if n == m {
                    (v - norm).abs() <= 1e-8 * norm
                } else {
                    v.abs() <= 1e-8
                };
                check(ok, format!("primal λ={lambda} n={n} m={m}: {v}"));
            }
        }
    }

    // 100 seeded polynomials with coefficients in [−1, 1] and degree ≤ 8
    let poly_cfg = SweepConfig {
        n_range: (1, 9),
        cap: 1.0,
        ..Default::default()
    };
    let mut worst_parseval = 0f64;
    for i in 0..100u64 {
        let a: Vec<f64> = generate_instance(9, i, &poly_cfg)
            .probs()
            .iter()
            .map(|u| 2.0 * u - 1.0)
            .collect();
        let lambda = lambdas[i as usize % lambdas.len()];
        let lhs: f64 = a
            .iter()
            .enumerate()
            .map(|(n, &an)| an * an * (lambda + ln_factorial(n as u64) - n as f64 * lambda.ln()).exp())
            .sum();
        let series = CoeffSeries::new(a.clone()).unwrap();
        let mut order = 64;
        let rhs = loop {
            let alpha = shift_exp_transform(&series, lambda, order).unwrap();
            let terms: Vec<f64> = alpha
                .coeffs()
                .iter()
                .enumerate()
                .map(|(n, &c)| c * c * (ln_factorial(n as u64) - n as f64 * lambda.ln()).exp())
                .collect();
            let tail: f64 = terms[terms.len() - 8..].iter().sum();
            if tail < 1e-10 || order >= 1024 {
                break terms.iter().sum::<f64>();
            }
            order *= 2;
        };
        let rel = (lhs - rhs).abs() / lhs;
        worst_parseval = worst_parseval.max(rel);
        check(rel <= 1e-8, format!("shift-exp parseval poly {i}: {rel:e}"));
    }

    if failures.is_empty() {
        Ok(format!(
            "recurrence, difference, genfun, primal, dual suites clean; shift-exp parseval max rel. error {worst_parseval:.2e}"
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0f64;
    for params in instances(77, (1, 12), 1.0).take(200) {
        let dyadic: Vec<f64> = params.probs().iter().map(|p| (p * 1024.0).round() / 1024.0).collect();
        let float = pb_pmf(&IndicatorParams::new(dyadic.clone()).unwrap());
        let rationals: Vec<BigRational> = dyadic.iter().map(|&p| BigRational::from_float(p).unwrap()).collect();
        let exact = pb_pmf_exact(&rationals).map_err(|e| e.to_string())?.to_f64();
        for (a, b) in float.mass().iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    let detail = format!("max per-entry error {worst:.2e} over 200 instances");
    if worst <= 1e-13 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for format in ["csv", "json"] {
        for run in 0..2 {
            let path = dir.path().join(format!("run{run}.{format}"));
            let output = Command::new(env!("CARGO_BIN_EXE_poisson-approx"))
                .args([
                    "verify", "--seed", "11", "--trials", "200", "--n-min", "1", "--n-max", "40",
                ])
                .args(["--cap", "0.7", "--format", format, "--out"])
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?;
            if !output.status.success() {
                return Err(format!("verify exited with {}", output.status));
            }
            outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    if outputs[0] == outputs[1] && outputs[2] == outputs[3] {
        Ok(format!(
            "csv ({} bytes) and json ({} bytes) identical across runs",
            outputs[0].len(),
            outputs[2].len()
        ))
    } else {
        Err("reports differ between runs".into())
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| match &outcome {
        Ok(detail) => println!("[PASS] {id:>2} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("[FAIL] {id:>2} {name}: {detail}");
        }
    };

    report(1, "route agreement", route_agreement());
    report(2, "single-indicator closed form", lemma_reproduction());
    let sweep = main_sweep();
    report(3, "recursive leave-one-out bound", recursive_soundness(&sweep));
    report(4, "Θ-bound and main corollary", corollary_soundness(&sweep));
    report(5, "ratio upper bound", ratio_upper_soundness(&sweep));
    report(6, "Barbour–Hall TV bound", barbour_hall_soundness(&sweep));
    report(7, "BCG envelope", bcg_envelope(&sweep));
    report(8, "equal-p asymptotics", asymptotic_equal_p());
    report(9, "Charlier identities", charlier_identities());
    report(10, "rational oracle", oracle_equivalence());
    report(11, "verify determinism", determinism());

    if failed == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
