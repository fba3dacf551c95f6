//! Accuracy metrics, mean/standard deviation over partitions and the
//! Wilcoxon signed-rank test for paired comparisons.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::ClassId;
use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the p-value is computed
/// exactly; above it the tie-corrected normal approximation is used.
pub const EXACT_MAX_N: usize = 25;

/// Smallest number of pairs the signed-rank test accepts.
pub const MIN_PAIRS: usize = 5;

/// Metrics of one model on one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Index of the class partition.
    pub partition_index: usize,
    /// Model label.
    pub model_name: String,
    /// Top-1 accuracy over all test samples.
    pub accuracy: f64,
    /// Top-1 accuracy averaged uniformly over test classes.
    pub per_class_accuracy: f64,
}

/// How the p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestMethod {
    /// Full enumeration of sign assignments.
    Exact,
    /// Normal approximation with tie correction and continuity correction.
    NormalApprox,
}

impl TestMethod {
    /// Lower-case name used in reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApprox => "normal_approx",
        }
    }
}

/// Outcome of [`wilcoxon_signed_rank`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    /// `min(W+, W-)`.
    pub statistic_w: f64,
    /// Two-sided p-value in `(0, 1]`.
    pub p_two_sided: f64,
    /// Number of pairs left after dropping zero differences.
    pub n_effective: usize,
    /// Exact or asymptotic.
    pub method: TestMethod,
}

fn check_pair(predictions: &[ClassId], truth: &[ClassId]) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("no predictions".into()));
    }
    Ok(())
}

/// Fraction of positions where the prediction equals the truth.
pub fn top1_accuracy(predictions: &[ClassId], truth: &[ClassId]) -> Result<f64> {
    check_pair(predictions, truth)?;
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Per-class recall averaged over the classes present in `truth`.
pub fn per_class_accuracy(predictions: &[ClassId], truth: &[ClassId]) -> Result<f64> {
    check_pair(predictions, truth)?;
    let mut per_class: BTreeMap<ClassId, (usize, usize)> = BTreeMap::new();
    for (p, t) in predictions.iter().zip(truth) {
        let entry = per_class.entry(*t).or_default();
        entry.1 += 1;
        if p == t {
            entry.0 += 1;
        }
    }
    let sum: f64 = per_class.values().map(|&(hit, total)| hit as f64 / total as f64).sum();
    Ok(sum / per_class.len() as f64)
}

/// Arithmetic mean and sample standard deviation (divisor `n - 1`).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(alloc::format!(
            "mean/std needs at least 2 values, got {}",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, libm::sqrt(ss / (n - 1.0))))
}

/// Average ranks of `|d|`, doubled so that half ranks stay integral.
/// Returns the doubled ranks in input order and the tie group sizes.
fn doubled_ranks(abs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; abs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && abs[order[end + 1]] == abs[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end+1, average doubled = start + end + 2
        for &i in &order[start..=end] {
            ranks[i] = (start + end + 2) as u64;
        }
        ties.push(end - start + 1);
        start = end + 1;
    }
    (ranks, ties)
}

/// Distribution of the doubled positive-rank sum over all `2^n` sign
/// assignments of the given doubled ranks.
fn rank_sum_counts(ranks: &[u64]) -> Vec<u64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided Wilcoxon signed-rank test on the paired differences `a - b`.
///
/// Zero differences are discarded. Ties in `|d|` get average ranks. With at
/// most [`EXACT_MAX_N`] remaining pairs the p-value is the exact fraction of
/// sign assignments whose smaller rank sum is at most the observed one.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(alloc::format!("paired samples of lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < MIN_PAIRS {
        return Err(Error::InvalidInput(alloc::format!(
            "signed-rank test needs at least {MIN_PAIRS} pairs, got {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::AllDifferencesZero);
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let w_plus: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let stat = w_plus.min(total - w_plus);
    let statistic_w = stat as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let counts = rank_sum_counts(&ranks);
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|&(s, _)| (s as u64).min(total - s as u64) <= stat)
            .map(|(_, c)| c)
            .sum();
        let p = extreme as f64 / libm::exp2(n as f64);
        return Ok(TestResult { statistic_w, p_two_sided: p.min(1.0), n_effective: n, method: TestMethod::Exact });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = ((mean - statistic_w - 0.5) / libm::sqrt(var)).max(0.0);
    let p = libm::erfc(z / core::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(TestResult { statistic_w, p_two_sided: p, n_effective: n, method: TestMethod::NormalApprox })
}
