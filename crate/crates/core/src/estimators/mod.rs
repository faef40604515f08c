//! Estimators of the population mean `g` and of a subject's function `f⁽ʲ⁾`.
//!
//! All estimators act on a [`CoefficientPanel`] and return coefficient
//! series; norms are taken in coefficient space. Subject indices are
//! zero-based.

mod lepskii;
mod oracle;
mod panel;
mod posterior;

pub use lepskii::{
    fixed_threshold_g, fixed_thresholds_f, lepskii_index, lepskii_threshold_g,
    lepskii_thresholds_f, population_bound, single_subject_estimate, single_subject_threshold,
    subject_bound, SingleDenominator, SingleSubjectRule, ThresholdKind, ThresholdSelection,
};
pub use oracle::oracle_thresholds;
pub use panel::{
    double_threshold_estimate_f, empirical_coefficients, pooled_coefficients,
    threshold_estimate_g, CoefficientPanel, Normalization,
};
pub use posterior::{posterior_mean_f, posterior_mean_g, PosteriorSpec};

/// Tuning constant of the population rule.
pub const DEFAULT_TAU: f64 = 6.5;
/// Inner constant of the subject rule.
pub const DEFAULT_TAU1: f64 = 4.5;
/// Outer constant of the subject rule.
pub const DEFAULT_TAU2: f64 = 6.5;
