use std::collections::BTreeMap;

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Largest n for which binomial tails are summed exactly.
pub const EXACT_LIMIT: u64 = 10_000;

/// ln P(X = j) for X ~ Bin(n, p), 0 < p < 1.
fn ln_pmf(n: u64, j: u64, p: f64) -> f64 {
    ln_binomial(n, j) + j as f64 * p.ln() + (n - j) as f64 * (-p).ln_1p()
}

/// Exact upper tail P(X ≥ k).
pub fn binomial_upper_exact(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let terms: Vec<f64> = (k..=n).map(|j| ln_pmf(n, j, p)).collect();
    log_sum_exp(&terms).exp().min(1.0)
}

/// Normal approximation of P(X ≥ k) with continuity correction.
pub fn binomial_upper_normal(k: u64, n: u64, p: f64) -> f64 {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    if sd == 0.0 {
        return if k as f64 <= mean { 1.0 } else { 0.0 };
    }
    let z = (k as f64 - 0.5 - mean) / sd;
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// One-tailed p-value P(X ≥ k) for k successes in n trials at rate `p0`:
/// exact up to [`EXACT_LIMIT`] trials, normal approximation beyond.
pub fn binomial_test(k: u64, n: u64, p0: f64) -> Result<f64> {
    if k > n {
        return Err(Error::invalid(format!("{k} successes out of {n} trials")));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::invalid(format!("chance rate {p0} outside [0, 1]")));
    }
    Ok(if n <= EXACT_LIMIT {
        binomial_upper_exact(k, n, p0)
    } else {
        binomial_upper_normal(k, n, p0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignTestResult {
    pub n_differ: u64,
    pub n_first_better: u64,
    /// P(X ≥ n_first_better) under X ~ Bin(n_differ, 1/2).
    pub p_one_tailed: f64,
    pub p_two_tailed: f64,
}

pub fn sign_test_counts(n_differ: u64, n_first_better: u64) -> Result<SignTestResult> {
    if n_first_better > n_differ {
        return Err(Error::invalid("more wins than discordant pairs"));
    }
    let upper = binomial_test(n_first_better, n_differ, 0.5)?;
    let lower = binomial_test(n_differ - n_first_better, n_differ, 0.5)?;
    Ok(SignTestResult {
        n_differ,
        n_first_better,
        p_one_tailed: upper,
        p_two_tailed: (2.0 * upper.min(lower)).min(1.0),
    })
}

/// Sign test on paired correctness of two classifiers over one test set.
pub fn sign_test(first_correct: &[bool], second_correct: &[bool]) -> Result<SignTestResult> {
    if first_correct.len() != second_correct.len() {
        return Err(Error::invalid("sign test needs paired outcomes"));
    }
    let mut differ = 0;
    let mut first = 0;
    for (&a, &b) in first_correct.iter().zip(second_correct) {
        if a != b {
            differ += 1;
            if a {
                first += 1;
            }
        }
    }
    sign_test_counts(differ, first)
}

/// Cohen's kappa between two labelings of the same items.
pub fn kappa<S: AsRef<str>>(first: &[S], second: &[S]) -> Result<f64> {
    if first.len() != second.len() || first.is_empty() {
        return Err(Error::invalid("kappa needs two equally long, non-empty ratings"));
    }
    let n = first.len() as f64;
    let mut m1: BTreeMap<&str, f64> = BTreeMap::new();
    let mut m2: BTreeMap<&str, f64> = BTreeMap::new();
    let mut agree = 0.0;
    for (a, b) in first.iter().zip(second) {
        let (a, b) = (a.as_ref(), b.as_ref());
        *m1.entry(a).or_default() += 1.0;
        *m2.entry(b).or_default() += 1.0;
        if a == b {
            agree += 1.0;
        }
    }
    let po = agree / n;
    let pe: f64 = m1.iter().map(|(k, c)| c / n * m2.get(k).copied().unwrap_or(0.0) / n).sum();
    if pe >= 1.0 {
        return Err(Error::invalid("kappa is undefined when chance agreement is 1"));
    }
    Ok((po - pe) / (1.0 - pe))
}
