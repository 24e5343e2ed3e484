//! Goodness-of-fit helpers for sampler tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Normal};

/// Two-sided tail mass beyond 4 standard deviations of a normal law.
pub fn four_sigma_level() -> f64 {
    2.0 * Normal::standard().cdf(-4.0)
}

/// Two-sided exact binomial p-value of observing `count` successes.
pub fn binomial_p_value(count: u64, trials: u64, prob: f64) -> f64 {
    if prob <= 0.0 {
        return if count == 0 { 1.0 } else { 0.0 };
    }
    if prob >= 1.0 {
        return if count == trials { 1.0 } else { 0.0 };
    }
    let law = Binomial::new(prob, trials).unwrap();
    let lower = law.cdf(count);
    let upper = 1.0 - law.cdf(count) + law.pmf(count);
    (2.0 * lower.min(upper)).min(1.0)
}

#[derive(Debug, Clone)]
pub struct Fit {
    /// Smallest per-cell exact p-value and the cell's (expected, observed).
    pub min_p: f64,
    pub worst_cell: (f64, u64),
    /// Largest normal z-score over cells with expected count at least 5.
    pub max_z: f64,
    pub chi2: f64,
    pub chi2_q999: f64,
    pub impossible_hits: u64,
}

impl Fit {
    pub fn passes(&self) -> bool {
        self.min_p >= four_sigma_level() && self.chi2 < self.chi2_q999 && self.impossible_hits == 0
    }
}

/// Compares observed counts with exact cell probabilities.
///
/// Each cell is checked at the 4σ level with the exact binomial test, which
/// agrees with the normal 4σ rule wherever that rule is accurate. The
/// chi-square statistic pools cells with expected count below 5.
pub fn fit<K: Ord + Copy>(
    expected: &BTreeMap<K, f64>,
    observed: &BTreeMap<K, u64>,
    replicas: u64,
) -> Fit {
    let r = replicas as f64;
    let mut min_p = 1.0f64;
    let mut worst_cell = (0.0, 0);
    let mut max_z = 0.0f64;
    let mut chi2 = 0.0;
    let mut cells = 0usize;
    let (mut pooled_e, mut pooled_o) = (0.0, 0.0);
    for (key, &prob) in expected {
        let count = observed.get(key).copied().unwrap_or(0);
        let e = r * prob;
        let pv = binomial_p_value(count, replicas, prob);
        if pv < min_p {
            min_p = pv;
            worst_cell = (e, count);
        }
        if e >= 5.0 {
            max_z = max_z.max((count as f64 - e).abs() / (e * (1.0 - prob)).sqrt());
            chi2 += (count as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            pooled_e += e;
            pooled_o += count as f64;
        }
    }
    if pooled_e > 0.0 {
        chi2 += (pooled_o - pooled_e).powi(2) / pooled_e;
        cells += 1;
    }
    let impossible_hits = observed
        .iter()
        .filter(|(k, _)| !expected.contains_key(k))
        .map(|(_, &c)| c)
        .sum();
    let dof = cells.saturating_sub(1).max(1) as f64;
    Fit {
        min_p,
        worst_cell,
        max_z,
        chi2,
        chi2_q999: ChiSquared::new(dof).unwrap().inverse_cdf(0.999),
        impossible_hits,
    }
}
