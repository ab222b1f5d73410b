//! Small numeric helpers shared across the crate: compensated summation,
//! quantiles, and rank correlation.
//!
//! Everything here is sequential and deterministic on purpose — Monte Carlo
//! results are reduced with these helpers so that the outcome is identical
//! regardless of how many worker threads produced the samples.

use crate::error::{Error, Result};

/// Neumaier-compensated sum. Sequential, so the result is a pure function
/// of the input order, and far less drift-prone than a naive fold when
/// summing tens of thousands of similar-magnitude samples.
pub fn sum(values: &[f64]) -> f64 {
    let mut total = 0.0f64;
    let mut compensation = 0.0f64;
    for &x in values {
        let t = total + x;
        if total.abs() >= x.abs() {
            compensation += (total - t) + x;
        } else {
            compensation += (x - t) + total;
        }
        total = t;
    }
    total + compensation
}

/// Arithmetic mean using compensated summation. Empty input → 0.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    sum(values) / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator). Fewer than two values → 0.
pub fn sample_stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let squared: Vec<f64> = values.iter().map(|x| (x - m) * (x - m)).collect();
    (sum(&squared) / (values.len() - 1) as f64).sqrt()
}

/// Population standard deviation (n denominator). Empty input → 0.
pub fn population_stddev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    let squared: Vec<f64> = values.iter().map(|x| (x - m) * (x - m)).collect();
    (sum(&squared) / values.len() as f64).sqrt()
}

/// Quantile with linear interpolation between order statistics (the common
/// spreadsheet/NumPy default). `sorted` must be ascending and non-empty;
/// `p` in [0, 1].
pub fn quantile_linear(sorted: &[f64], p: f64) -> Result<f64> {
    check_quantile_args(sorted, p)?;
    let n = sorted.len();
    if n == 1 {
        return Ok(sorted[0]);
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return Ok(sorted[n - 1]);
    }
    Ok(sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo]))
}

/// Inverse-CDF (step-function) quantile: the smallest order statistic with
/// at least `p·n` observations at or below it. `sorted` must be ascending
/// and non-empty; `p` in [0, 1].
pub fn quantile_inverse_cdf(sorted: &[f64], p: f64) -> Result<f64> {
    check_quantile_args(sorted, p)?;
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

fn check_quantile_args(sorted: &[f64], p: f64) -> Result<()> {
    if sorted.is_empty() {
        return Err(Error::EmptyInput("quantile input"));
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::domain(format!(
            "quantile p must be in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Pearson correlation coefficient. Errors on length mismatch, fewer than
/// two points, or zero variance in either series.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::domain(
            "correlation needs at least two points".to_string(),
        ));
    }
    let mx = mean(x);
    let my = mean(y);
    let cov: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let vx: Vec<f64> = x.iter().map(|a| (a - mx) * (a - mx)).collect();
    let vy: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let denom = (sum(&vx) * sum(&vy)).sqrt();
    if denom == 0.0 {
        return Err(Error::domain(
            "correlation undefined: a series has zero variance".to_string(),
        ));
    }
    Ok(sum(&cov) / denom)
}

/// Ranks with ties sharing their average rank (1-based, so `[10, 20, 20]`
/// ranks as `[1.0, 2.5, 2.5]`).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) tie; their 1-based ranks average to
        // (i + 1 + j + 1) / 2.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks, so ties are
/// handled the standard way.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}
