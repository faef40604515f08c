use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::rates::Target;
use super::summary::{ConfigEcho, RiskReport};
use super::coefficient_mise;
use crate::error::{Error, Result};
use crate::estimators::{
    double_threshold_estimate_f, empirical_coefficients, fixed_threshold_g, fixed_thresholds_f,
    lepskii_threshold_g, lepskii_thresholds_f, population_bound, posterior_mean_f,
    posterior_mean_g, single_subject_estimate, subject_bound, threshold_estimate_g,
    CoefficientPanel, Normalization, PosteriorSpec, SingleSubjectRule,
};
use crate::sim::{
    default_sequence_k_max, simulate_regression, simulate_sequence, truncation_for, ModelConfig,
    SeedTree, SeriesEvaluator,
};
use crate::spectral::FunctionSeries;

/// One estimator in a Monte Carlo plan. Subject-level estimators target
/// the first subject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    /// Pooled mean with the adaptive population threshold.
    AdaptiveG { tau: f64 },
    /// Pooled mean truncated at `⌈(nm)^{1/(1+2β)}⌉`.
    FixedG { beta: f64 },
    PosteriorG { spec: PosteriorSpec },
    /// Double-threshold estimator with adaptive thresholds.
    AdaptiveF { tau1: f64, tau2: f64 },
    /// Double-threshold estimator at the rate-optimal thresholds for `(β, β̃)`.
    FixedF { beta: f64, beta_tilde: f64 },
    SingleSubjectF { rule: SingleSubjectRule },
    PosteriorF { spec: PosteriorSpec },
    /// The zero function, scored against `g`.
    ZeroG,
    /// The zero function, scored against the first subject.
    ZeroF,
}

impl EstimatorSpec {
    pub fn target(&self) -> Target {
        use EstimatorSpec::*;
        match self {
            AdaptiveG { .. } | FixedG { .. } | PosteriorG { .. } | ZeroG => Target::G,
            _ => Target::F,
        }
    }

    pub fn label(&self) -> String {
        use EstimatorSpec::*;
        match self {
            AdaptiveG { .. } => "adaptive_g".into(),
            FixedG { beta } => format!("fixed_g_beta{beta}"),
            PosteriorG { .. } => "posterior_g".into(),
            AdaptiveF { .. } => "adaptive_f".into(),
            FixedF { beta, beta_tilde } => format!("fixed_f_beta{beta}_{beta_tilde}"),
            SingleSubjectF { .. } => "single_f".into(),
            PosteriorF { .. } => "posterior_f".into(),
            ZeroG => "zero_g".into(),
            ZeroF => "zero_f".into(),
        }
    }

    /// Largest coefficient index the estimator may read.
    pub fn reach(&self, n: usize, m: usize) -> usize {
        use EstimatorSpec::*;
        match self {
            AdaptiveG { .. } => population_bound(n, m),
            FixedG { beta } => fixed_threshold_g(n, m, *beta),
            AdaptiveF { .. } => population_bound(n, m).max(subject_bound(n)),
            FixedF { beta, beta_tilde } => fixed_thresholds_f(n, m, *beta, *beta_tilde).1,
            SingleSubjectF { .. } => subject_bound(n),
            PosteriorG { .. } | PosteriorF { .. } | ZeroG | ZeroF => 0,
        }
    }

    /// Fits the estimator on a panel whose row 0 is the target subject.
    pub fn fit(&self, panel: &CoefficientPanel) -> Result<FunctionSeries> {
        use EstimatorSpec::*;
        let (n, m) = (panel.n(), panel.m());
        let capped = |k: usize| k.min(panel.width());
        match self {
            AdaptiveG { tau } => threshold_estimate_g(panel, lepskii_threshold_g(panel, *tau)?.k1),
            FixedG { beta } => threshold_estimate_g(panel, capped(fixed_threshold_g(n, m, *beta))),
            PosteriorG { spec } => posterior_mean_g(panel, spec),
            AdaptiveF { tau1, tau2 } => {
                let sel = lepskii_thresholds_f(panel, 0, *tau1, *tau2)?;
                double_threshold_estimate_f(panel, 0, sel.k1, sel.k2)
            }
            FixedF { beta, beta_tilde } => {
                let (k1, k2) = fixed_thresholds_f(n, m, *beta, *beta_tilde);
                let (k1, k2) = (capped(k1), capped(k2));
                if m < 2 {
                    return double_threshold_estimate_f(panel, 0, k1, k1);
                }
                double_threshold_estimate_f(panel, 0, k1, k2)
            }
            SingleSubjectF { rule } => single_subject_estimate(panel.row(0), n, m, *rule),
            PosteriorF { spec } => posterior_mean_f(panel, 0, spec),
            ZeroG | ZeroF => Ok(FunctionSeries::zero()),
        }
    }
}

/// Largest index any estimator of the plan may read, at least `⌊√(nm)⌋`.
pub fn plan_reach(plan: &[EstimatorSpec], n: usize, m: usize) -> usize {
    plan.iter()
        .map(|e| e.reach(n, m))
        .fold(population_bound(n, m).max(subject_bound(n)), usize::max)
}

/// Default sequence-mode truncation for a plan: four times its reach,
/// never below `⌈4√(nm)⌉`.
pub fn sequence_truncation(plan: &[EstimatorSpec], n: usize, m: usize) -> usize {
    truncation_for(plan_reach(plan, n, m) as f64).max(default_sequence_k_max(n, m))
}

/// How replicates are generated and scored.
#[derive(Clone, Copy)]
pub enum Scenario<'a> {
    /// Coefficient draws; risk is the coefficient-space distance to the
    /// truth truncated at `K_max`.
    Sequence,
    Regression(RegressionScenario<'a>),
}

/// Grid layout and scoring points of a regression study.
#[derive(Clone, Copy)]
pub struct RegressionScenario<'a> {
    pub grids: &'a [Vec<f64>],
    /// Points for scoring estimates of `g`.
    pub g_eval: &'a [f64],
    /// Points for scoring estimates of the first subject.
    pub f_eval: &'a [f64],
    /// Number of empirical coefficients per subject.
    pub width: usize,
    pub normalization: Normalization,
    pub evaluator: &'a dyn SeriesEvaluator,
}

/// Simulates replicate `replicate` and scores every estimator of the plan.
pub fn run_replicate(
    cfg: &ModelConfig,
    plan: &[EstimatorSpec],
    scenario: Scenario<'_>,
    seeds: &SeedTree,
    replicate: u64,
) -> Vec<Result<f64>> {
    match scenario {
        Scenario::Sequence => {
            let draw = simulate_sequence(cfg, seeds, replicate);
            let panel = match CoefficientPanel::from_rows(cfg.n, &draw.rows) {
                Ok(p) => p,
                Err(e) => return plan.iter().map(|_| Err(e.clone())).collect(),
            };
            plan.iter()
                .map(|est| {
                    let fit = est.fit(&panel)?;
                    let truth = match est.target() {
                        Target::G => &draw.g,
                        Target::F => &draw.subjects[0],
                    };
                    Ok(coefficient_mise(&fit, truth))
                })
                .collect()
        }
        Scenario::Regression(sc) => {
            let prepared = simulate_regression(cfg, sc.grids, seeds, replicate, sc.evaluator)
                .and_then(|draw| {
                    let panel = empirical_coefficients(&draw.data, sc.width, sc.normalization)?;
                    Ok((draw, panel))
                });
            let (draw, panel) = match prepared {
                Ok(v) => v,
                Err(e) => return plan.iter().map(|_| Err(e.clone())).collect(),
            };
            let g_truth = sc.evaluator.eval(&draw.g, sc.g_eval);
            let f_truth = sc.evaluator.eval(&draw.subjects[0], sc.f_eval);
            plan.iter()
                .map(|est| {
                    let fit = est.fit(&panel)?;
                    let (points, truth) = match est.target() {
                        Target::G => (sc.g_eval, &g_truth),
                        Target::F => (sc.f_eval, &f_truth),
                    };
                    let values = sc.evaluator.eval(&fit, points);
                    empirical_mise_values(&values, truth)
                })
                .collect()
        }
    }
}

fn empirical_mise_values(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.is_empty() || estimate.len() != truth.len() {
        return Err(Error::domain("evaluation grids disagree"));
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / estimate.len() as f64)
}

/// Collects per-replicate outcomes (any order) into one report per estimator.
pub fn assemble_reports<I>(
    cfg: &ModelConfig,
    plan: &[EstimatorSpec],
    seed: u64,
    replicates: u64,
    outcomes: I,
) -> Vec<RiskReport>
where
    I: IntoIterator<Item = (u64, Vec<Result<f64>>)>,
{
    let echo = ConfigEcho {
        n: cfg.n,
        m: cfg.m,
        alpha: cfg.prior.decay(),
        alpha_tilde: cfg.deviation.decay(),
        seed,
        replicates,
    };
    let mut reports: Vec<RiskReport> =
        plan.iter().map(|e| RiskReport::new(e.label(), echo)).collect();
    for (r, row) in outcomes {
        for (report, outcome) in reports.iter_mut().zip(row) {
            report.push(r, outcome);
        }
    }
    reports.iter_mut().for_each(RiskReport::normalize);
    reports
}

/// Sequential Monte Carlo over replicates `0..replicates`.
pub fn run_monte_carlo(
    cfg: &ModelConfig,
    plan: &[EstimatorSpec],
    scenario: Scenario<'_>,
    replicates: u64,
    seed: u64,
) -> Result<Vec<RiskReport>> {
    if replicates == 0 {
        return Err(Error::config("at least one replicate is required"));
    }
    cfg.validate()?;
    let seeds = SeedTree::new(seed);
    let outcomes = (0..replicates).map(|r| (r, run_replicate(cfg, plan, scenario, &seeds, r)));
    Ok(assemble_reports(cfg, plan, seed, replicates, outcomes))
}
