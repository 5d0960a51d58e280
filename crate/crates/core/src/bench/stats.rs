//! Paired statistics for the benchmark summaries.

use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};

/// Largest sample size (after dropping zero differences) for which the exact
/// null distribution of the signed-rank statistic is enumerated.
pub const WILCOXON_EXACT_LIMIT: usize = 25;

/// Two-sided Wilcoxon signed rank test on paired samples.
///
/// Zero differences are dropped and tied magnitudes share average ranks. For
/// up to [`WILCOXON_EXACT_LIMIT`] nonzero differences the p-value is exact
/// over all `2^n` sign assignments; beyond that a normal approximation with
/// tie-corrected variance is used. Returns `(statistic, p)` where the
/// statistic is the smaller of the positive and negative rank sums.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::dims(format!(
            "wilcoxon: {} vs {} observations",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("wilcoxon: empty samples"));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("wilcoxon: differences".into()));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok((0.0, 1.0));
    }

    let ranks = average_ranks(&diffs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total: f64 = ranks.iter().sum();
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let p = if n <= WILCOXON_EXACT_LIMIT {
        exact_two_sided_p(&ranks, w_plus)
    } else {
        normal_two_sided_p(&ranks, w_plus)
    };
    Ok((statistic, p))
}

/// Ranks of |d| in ascending order, ties sharing the average rank.
fn average_ranks(diffs: &[f64]) -> Vec<f64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        diffs[i]
            .abs()
            .partial_cmp(&diffs[j].abs())
            .expect("finite differences")
    });
    let mut ranks = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let mut j = k;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[k]].abs() {
            j += 1;
        }
        // Positions k..=j (0-based) share the average of ranks k+1..=j+1.
        let avg = (k + j + 2) as f64 / 2.0;
        for &idx in &order[k..=j] {
            ranks[idx] = avg;
        }
        k = j + 1;
    }
    ranks
}

/// Counts of sign assignments by doubled positive-rank sum. Doubling makes
/// every (possibly half-integer) rank an exact integer weight.
fn rank_sum_counts(ranks: &[f64]) -> Vec<u64> {
    let weights: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = weights.iter().sum();
    let mut counts = vec![0u64; max_sum + 1];
    counts[0] = 1;
    for &w in &weights {
        for s in (w..=max_sum).rev() {
            counts[s] += counts[s - w];
        }
    }
    counts
}

fn exact_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let counts = rank_sum_counts(ranks);
    let observed = (2.0 * w_plus).round() as usize;
    let total: u64 = 1u64 << ranks.len();
    let c_le: u64 = counts[..=observed].iter().sum();
    let c_ge: u64 = counts[observed..].iter().sum();
    (2.0 * c_le.min(c_ge) as f64 / total as f64).min(1.0)
}

fn normal_two_sided_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // Tie correction: subtract sum(t^3 - t)/48 over tie groups.
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite ranks"));
    let mut tie_term = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let mut j = k;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[k] {
            j += 1;
        }
        let t = (j - k + 1) as f64;
        tie_term += t * t * t - t;
        k = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / var.sqrt();
    let std_normal = statrs::distribution::Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - std_normal.cdf(z.abs()))).min(1.0)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean.
pub fn std_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}
