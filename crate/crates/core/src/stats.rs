//! Nonparametric tests behind the strategy comparison: Friedman across
//! strategies, Wilcoxon signed-rank between strategy pairs, and medians.

use std::fmt;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::data::Strategy;
use crate::metrics::{Metric, MetricReport};
use crate::{Error, Result};

/// Largest effective sample size for which the exact null distribution is used.
pub const EXACT_WILCOXON_MAX_N: usize = 20;

/// Average ranks (1-based); tied values share the mean of their rank span.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        i = j;
    }
    ranks
}

/// Sizes of the tie groups among `values`.
fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    sizes
}

/// Complete `subjects × treatments` table of one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub subjects: Vec<String>,
    pub treatments: Vec<String>,
    /// One row per subject, one column per treatment.
    pub values: Vec<Vec<f64>>,
}

impl PairedSamples {
    pub fn new(
        subjects: Vec<String>,
        treatments: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if values.len() != subjects.len() {
            return Err(Error::shape(
                "paired samples rows",
                subjects.len(),
                values.len(),
            ));
        }
        if let Some(bad) = values.iter().find(|r| r.len() != treatments.len()) {
            return Err(Error::shape(
                "paired samples columns",
                treatments.len(),
                bad.len(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("paired samples must be finite".into()));
        }
        Ok(Self {
            subjects,
            treatments,
            values,
        })
    }

    /// Gathers `metric` per user across `strategies`. Users missing a row or
    /// holding an absent value for any strategy are dropped and returned.
    pub fn from_reports(
        metric: Metric,
        reports: &[MetricReport],
        strategies: &[Strategy],
    ) -> Result<(Self, Vec<String>)> {
        let mut users: Vec<&str> = reports.iter().map(|r| r.user_id.as_str()).collect();
        users.sort_unstable();
        users.dedup();
        let mut subjects = Vec::new();
        let mut values = Vec::new();
        let mut dropped = Vec::new();
        for user in users {
            let row: Option<Vec<f64>> = strategies
                .iter()
                .map(|&s| {
                    reports
                        .iter()
                        .find(|r| r.user_id == user && r.strategy == s)
                        .and_then(|r| r.get(metric))
                })
                .collect();
            match row {
                Some(row) => {
                    subjects.push(user.to_owned());
                    values.push(row);
                }
                None => dropped.push(user.to_owned()),
            }
        }
        let treatments = strategies.iter().map(|s| s.name().to_owned()).collect();
        Ok((Self::new(subjects, treatments, values)?, dropped))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub chi_square: f64,
    pub df: usize,
    pub p_value: f64,
    pub n_subjects: usize,
}

/// Friedman rank test with the within-subject tie correction.
pub fn friedman_test(s: &PairedSamples) -> Result<FriedmanResult> {
    let n = s.values.len();
    let k = s.treatments.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "friedman test needs at least 2 subjects, got {n}"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "friedman test needs at least 2 treatments, got {k}"
        )));
    }
    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in &s.values {
        for (sum, r) in rank_sums.iter_mut().zip(rank_with_ties(row)) {
            *sum += r;
        }
        tie_term += tie_sizes(row)
            .into_iter()
            .map(|t| (t * t * t - t) as f64)
            .sum::<f64>();
    }
    let (nf, kf) = (n as f64, k as f64);
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * rank_sums.iter().map(|r| r * r).sum::<f64>()
        - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_term / (nf * kf * (kf * kf - 1.0));
    // Every row fully tied: no within-subject discrimination at all.
    let chi_square = if correction <= 1e-12 {
        0.0
    } else {
        (raw / correction).max(0.0)
    };
    let df = k - 1;
    Ok(FriedmanResult {
        chi_square,
        df,
        p_value: chi2_sf(chi_square, df),
        n_subjects: n,
    })
}

/// Chi-square survival function, `Q(df/2, x/2)`.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    assert!(df >= 1, "chi-square needs df >= 1");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    /// Every difference was zero.
    Degenerate,
}

impl fmt::Display for WilcoxonMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WilcoxonMethod::Exact => "EXACT",
            WilcoxonMethod::NormalApprox => "NORMAL_APPROX",
            WilcoxonMethod::Degenerate => "DEGENERATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    pub w_plus: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Counts of `Σ sᵢ·rᵢ` over all `2ⁿ` sign patterns for integer ranks `rᵢ`
/// (index = sum). Exact in `f64` well past `n = 20`.
pub fn signed_rank_sum_counts(int_ranks: &[usize]) -> Vec<f64> {
    let total: usize = int_ranks.iter().sum();
    let mut counts = vec![0.0; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in int_ranks {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided Wilcoxon signed-rank test on `a − b`, zero differences dropped.
///
/// Up to [`EXACT_WILCOXON_MAX_N`] effective pairs the null distribution of
/// `W⁺` is built exactly from the realized (possibly tied) ranks; beyond that
/// a tie-corrected normal approximation with continuity correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput(format!(
            "wilcoxon needs equal non-empty samples, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "wilcoxon samples must be finite".into(),
        ));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            w_plus: 0.0,
            n_effective: 0,
            p_value: 1.0,
            method: WilcoxonMethod::Degenerate,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = rank_with_ties(&abs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();

    if n <= EXACT_WILCOXON_MAX_N {
        // Average ranks are multiples of 1/2, so doubling makes them integral.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let counts = signed_rank_sum_counts(&doubled);
        let w2 = (2.0 * w_plus).round() as usize;
        let total = 2f64.powi(n as i32);
        let lower: f64 = counts[..=w2].iter().sum::<f64>() / total;
        let upper: f64 = counts[w2..].iter().sum::<f64>() / total;
        return Ok(WilcoxonResult {
            w_plus,
            n_effective: n,
            p_value: (2.0 * lower.min(upper)).min(1.0),
            method: WilcoxonMethod::Exact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let ties: f64 = tie_sizes(&abs)
        .into_iter()
        .map(|t| (t * t * t - t) as f64)
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(WilcoxonResult {
        w_plus,
        n_effective: n,
        // 2·(1 − Φ(z)) = erfc(z/√2)
        p_value: erfc(z / std::f64::consts::SQRT_2).min(1.0),
        method: WilcoxonMethod::NormalApprox,
    })
}

/// Median of the values; `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// `***` below 0.001, `**` below 0.01, `*` below 0.05.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
