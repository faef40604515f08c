use alloc::vec::Vec;

use super::panel::{pooled_coefficients, CoefficientPanel};
use crate::error::{Error, Result};
use crate::math;
use crate::spectral::FunctionSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    GSingle,
    FDouble,
}

impl ThresholdKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdKind::GSingle => "g_single_threshold",
            ThresholdKind::FDouble => "f_double_threshold",
        }
    }
}

/// A data-driven threshold choice and the constants that produced it.
///
/// For the population rule `k1 == k2` and both bounds are `⌊√(nm)⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSelection {
    pub kind: ThresholdKind,
    pub k1: usize,
    pub k2: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub bound_inner: usize,
    pub bound_outer: usize,
}

/// Smallest `k ∈ 1..=bound` such that every partial sum of `increments`
/// over `(k, ℓ]` stays within `tau·ℓ/denom` for all `ℓ ∈ (k, bound]`.
///
/// `increments[i − 1]` is the squared gap at index `i`.
pub fn lepskii_index(increments: &[f64], bound: usize, tau: f64, denom: f64) -> usize {
    debug_assert!(increments.len() >= bound);
    if bound <= 1 {
        return 1;
    }
    // prefix[i] = Σ_{j ≤ i} increments; condition is
    // prefix[k] ≥ max_{ℓ > k} (prefix[ℓ] − τℓ/denom).
    let mut prefix = Vec::with_capacity(bound + 1);
    prefix.push(0.0);
    let mut s = 0.0;
    for v in &increments[..bound] {
        s += v;
        prefix.push(s);
    }
    let slack = |l: usize| tau * l as f64 / denom;
    let mut best = 1usize;
    let mut worst_after = f64::NEG_INFINITY;
    for k in (1..=bound).rev() {
        if prefix[k] >= worst_after {
            best = k;
        }
        let cand = prefix[k] - slack(k);
        if cand > worst_after {
            worst_after = cand;
        }
    }
    best
}

/// `⌊√(nm)⌋`.
pub fn population_bound(n: usize, m: usize) -> usize {
    math::isqrt(n as u64 * m as u64) as usize
}

/// `⌊√n⌋`.
pub fn subject_bound(n: usize) -> usize {
    math::isqrt(n as u64) as usize
}

fn check_width(panel: &CoefficientPanel, bound: usize) -> Result<()> {
    if panel.width() < bound {
        return Err(Error::Domain(alloc::format!(
            "panel width {} is below the search bound {bound}",
            panel.width()
        )));
    }
    Ok(())
}

/// Adaptive threshold for the pooled population estimator.
pub fn lepskii_threshold_g(panel: &CoefficientPanel, tau: f64) -> Result<ThresholdSelection> {
    let (n, m) = (panel.n(), panel.m());
    let bound = population_bound(n, m);
    check_width(panel, bound)?;
    let pooled = pooled_coefficients(panel, None)?;
    let sq: Vec<f64> = pooled[..bound].iter().map(|c| c * c).collect();
    let k = lepskii_index(&sq, bound, tau, (n * m) as f64);
    Ok(ThresholdSelection {
        kind: ThresholdKind::GSingle,
        k1: k,
        k2: k,
        tau1: tau,
        tau2: tau,
        bound_inner: bound,
        bound_outer: bound,
    })
}

/// Adaptive `(k̂₁, k̂₁ ∨ k̂₂)` for the subject-level double-threshold estimator.
pub fn lepskii_thresholds_f(
    panel: &CoefficientPanel,
    subject: usize,
    tau1: f64,
    tau2: f64,
) -> Result<ThresholdSelection> {
    panel.check_subject(subject)?;
    if panel.m() < 2 {
        return Err(Error::NoDonors(
            "adaptive double thresholds need m ≥ 2; use the single-subject estimator".into(),
        ));
    }
    let (n, m) = (panel.n(), panel.m());
    let outer = population_bound(n, m);
    let inner = subject_bound(n);
    check_width(panel, outer.max(inner))?;
    let pooled = pooled_coefficients(panel, Some(subject))?;
    let sq: Vec<f64> = pooled[..outer].iter().map(|c| c * c).collect();
    let k2 = lepskii_index(&sq, outer, tau2, (n * m) as f64);
    let own = panel.row(subject);
    let gaps: Vec<f64> = own[..inner]
        .iter()
        .zip(&pooled[..inner])
        .map(|(y, g)| (y - g) * (y - g))
        .collect();
    let k1 = lepskii_index(&gaps, inner, tau1, n as f64);
    Ok(ThresholdSelection {
        kind: ThresholdKind::FDouble,
        k1,
        k2: k1.max(k2),
        tau1,
        tau2,
        bound_inner: inner,
        bound_outer: outer,
    })
}

/// Denominator of the single-subject comparison bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingleDenominator {
    /// `nm`, as printed for the single-subject rule.
    #[default]
    Nm,
    /// `n`, the one-sample variance scale.
    N,
}

/// Constant and denominator of the single-subject threshold rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSubjectRule {
    pub constant: f64,
    pub denominator: SingleDenominator,
}

impl Default for SingleSubjectRule {
    fn default() -> Self {
        SingleSubjectRule { constant: 2.0, denominator: SingleDenominator::Nm }
    }
}

/// Threshold over `(k, ⌊√n⌋]` from one subject's squared coefficients.
pub fn single_subject_threshold(row: &[f64], n: usize, m: usize, rule: SingleSubjectRule) -> Result<usize> {
    if n == 0 || m == 0 {
        return Err(Error::domain("n and m must be positive"));
    }
    let bound = subject_bound(n);
    if row.len() < bound {
        return Err(Error::domain("row shorter than the search bound"));
    }
    let sq: Vec<f64> = row[..bound].iter().map(|c| c * c).collect();
    let denom = match rule.denominator {
        SingleDenominator::Nm => (n * m) as f64,
        SingleDenominator::N => n as f64,
    };
    Ok(lepskii_index(&sq, bound, rule.constant, denom))
}

/// Subject's own coefficients truncated at [`single_subject_threshold`].
pub fn single_subject_estimate(
    row: &[f64],
    n: usize,
    m: usize,
    rule: SingleSubjectRule,
) -> Result<FunctionSeries> {
    let k = single_subject_threshold(row, n, m, rule)?;
    FunctionSeries::new(row[..k].to_vec())
}

/// `⌈(nm)^{1/(1+2β)}⌉`.
pub fn fixed_threshold_g(n: usize, m: usize, beta: f64) -> usize {
    math::ceil(math::powf(n as f64 * m as f64, 1.0 / (1.0 + 2.0 * beta))) as usize
}

/// `k₁ = ⌈n^{1/(1+2β̃)}⌉`, `k₂ = k₁ ∨ ⌈(nm)^{1/(1+2β)}⌉`.
pub fn fixed_thresholds_f(n: usize, m: usize, beta: f64, beta_tilde: f64) -> (usize, usize) {
    let k1 = math::ceil(math::powf(n as f64, 1.0 / (1.0 + 2.0 * beta_tilde))) as usize;
    (k1, k1.max(fixed_threshold_g(n, m, beta)))
}
