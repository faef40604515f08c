//! Simulation studies built from the core Monte Carlo pieces.

use std::collections::BTreeMap;

use rayon::prelude::*;
use twolevel_core::design::{boundary_fit, enumerate_designs, Budget, BoundaryFit, DesignGrid, Lattice, Surface};
use twolevel_core::estimators::{
    double_threshold_estimate_f, lepskii_thresholds_f, oracle_thresholds, CoefficientPanel,
    SingleDenominator, SingleSubjectRule, DEFAULT_TAU, DEFAULT_TAU1, DEFAULT_TAU2,
};
use twolevel_core::risk::{
    coefficient_mise, plan_reach, sequence_truncation, EstimatorSpec, RegressionScenario, RiskReport,
    Scenario,
};
use twolevel_core::sim::{
    g_eval_grid, simulate_regression, simulate_sequence, study1_grids, DirectEvaluator, ModelConfig,
    SeedTree, STUDY1_LATTICE,
};
use twolevel_core::estimators::Normalization;
use twolevel_core::Spectrum;

use crate::error::{AppError, Result};
use crate::lattice::LatticeEvaluator;
use crate::parallel::run_monte_carlo_par;
use crate::table::MultiSubjectTable;

/// How a study generates data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Sequence,
    Regression,
}

impl std::str::FromStr for StudyMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sequence" => Ok(StudyMode::Sequence),
            "regression" => Ok(StudyMode::Regression),
            other => Err(format!("unknown mode `{other}` (sequence|regression)")),
        }
    }
}

impl std::fmt::Display for StudyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StudyMode::Sequence => "sequence",
            StudyMode::Regression => "regression",
        })
    }
}

pub const STUDY1_PAIRS: [(usize, usize); 5] = [(20, 500), (50, 200), (100, 100), (200, 50), (500, 20)];
pub const STUDY1_BETAS: [f64; 4] = [0.05, 0.2, 0.5, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Study1Config {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub pairs: Vec<(usize, usize)>,
    pub replicates: u64,
    pub seed: u64,
    pub mode: StudyMode,
    pub lattice: usize,
    pub betas: Vec<f64>,
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub single: SingleSubjectRule,
}

impl Study1Config {
    pub fn new(alpha: f64) -> Self {
        Study1Config {
            alpha,
            alpha_tilde: 0.5,
            pairs: STUDY1_PAIRS.to_vec(),
            replicates: 200,
            seed: 0,
            mode: StudyMode::Regression,
            lattice: STUDY1_LATTICE,
            betas: STUDY1_BETAS.to_vec(),
            tau: DEFAULT_TAU,
            tau1: DEFAULT_TAU1,
            tau2: DEFAULT_TAU2,
            single: SingleSubjectRule::default(),
        }
    }

    pub fn plan(&self) -> Vec<EstimatorSpec> {
        let mut plan = vec![EstimatorSpec::AdaptiveG { tau: self.tau }];
        plan.extend(self.betas.iter().map(|&beta| EstimatorSpec::FixedG { beta }));
        plan.push(EstimatorSpec::AdaptiveF { tau1: self.tau1, tau2: self.tau2 });
        plan.push(EstimatorSpec::SingleSubjectF { rule: self.single });
        plan
    }
}

/// Reports of one `(n, m)` design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReports {
    pub n: usize,
    pub m: usize,
    pub k_max: usize,
    pub reports: Vec<RiskReport>,
}

fn spectra(alpha: f64, alpha_tilde: f64) -> Result<(Spectrum, Spectrum)> {
    Ok((Spectrum::with_decay(alpha)?, Spectrum::with_decay(alpha_tilde)?))
}

pub fn run_study1(cfg: &Study1Config) -> Result<Vec<DesignReports>> {
    let plan = cfg.plan();
    let (prior, dev) = spectra(cfg.alpha, cfg.alpha_tilde)?;
    let evaluator = LatticeEvaluator::new(cfg.lattice.max(1));
    cfg.pairs
        .iter()
        .map(|&(n, m)| {
            let (model, reports) = match cfg.mode {
                StudyMode::Sequence => {
                    let model = ModelConfig::sequence(n, m, prior, dev)?
                        .with_k_max(sequence_truncation(&plan, n, m))?;
                    let reports = run_monte_carlo_par(&model, &plan, Scenario::Sequence, cfg.replicates, cfg.seed)?;
                    (model, reports)
                }
                StudyMode::Regression => {
                    let model = ModelConfig::regression(n, m, prior, dev, cfg.lattice)?;
                    let grids = (1..=m)
                        .map(|j| study1_grids(n, m, j, cfg.lattice).map(|g| g.train))
                        .collect::<twolevel_core::Result<Vec<_>>>()?;
                    let f_eval = study1_grids(n, m, 1, cfg.lattice)?.eval;
                    let g_eval = g_eval_grid(cfg.lattice / 2);
                    let scenario = Scenario::Regression(RegressionScenario {
                        grids: &grids,
                        g_eval: &g_eval,
                        f_eval: &f_eval,
                        width: plan_reach(&plan, n, m),
                        normalization: Normalization::Mean,
                        evaluator: &evaluator,
                    });
                    let reports = run_monte_carlo_par(&model, &plan, scenario, cfg.replicates, cfg.seed)?;
                    (model, reports)
                }
            };
            Ok(DesignReports { n, m, k_max: model.k_max, reports })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study2Config {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub budget: f64,
    pub per_decade: u32,
    pub replicates: u64,
    pub seed: u64,
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl Study2Config {
    pub fn new(alpha: f64, alpha_tilde: f64) -> Self {
        Study2Config {
            alpha,
            alpha_tilde,
            budget: 5000.0,
            per_decade: 4,
            replicates: 50,
            seed: 0,
            tau: DEFAULT_TAU,
            tau1: DEFAULT_TAU1,
            tau2: DEFAULT_TAU2,
        }
    }

    /// Population and subject estimators for one cell; a single subject has
    /// no donors, so the subject estimator reduces to the inner rule alone.
    pub fn plan(&self, m: usize) -> Vec<EstimatorSpec> {
        let f = if m >= 2 {
            EstimatorSpec::AdaptiveF { tau1: self.tau1, tau2: self.tau2 }
        } else {
            EstimatorSpec::SingleSubjectF {
                rule: SingleSubjectRule { constant: self.tau1, denominator: SingleDenominator::N },
            }
        };
        vec![EstimatorSpec::AdaptiveG { tau: self.tau }, f]
    }
}

/// Monte Carlo surfaces over a budgeted design lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Study2Result {
    pub grid: DesignGrid,
    pub cells: Vec<DesignReports>,
    pub surface_g: Surface,
    pub surface_f: Surface,
    pub fit_g: Option<BoundaryFit>,
    pub fit_f: Option<BoundaryFit>,
}

impl Study2Result {
    /// Cell minimizing the mean log MISE of a target, ties to smaller `m` then `n`.
    pub fn best_cell(&self, surface: &Surface) -> Option<(u64, u64, f64)> {
        surface.present().fold(None, |best: Option<(u64, u64, f64)>, c| match best {
            Some(b) if (b.2, b.1, b.0) <= (c.2, c.1, c.0) => Some(b),
            _ => Some(c),
        })
    }
}

pub fn run_study2(cfg: &Study2Config) -> Result<Study2Result> {
    let budget = Budget::Product { budget: cfg.budget };
    let grid = enumerate_designs(budget, cfg.alpha, cfg.alpha_tilde, Lattice::LogSpaced { per_decade: cfg.per_decade })?;
    let (prior, dev) = spectra(cfg.alpha, cfg.alpha_tilde)?;
    let cells = grid
        .points
        .iter()
        .map(|p| {
            let (n, m) = (p.n as usize, p.m as usize);
            let plan = cfg.plan(m);
            let model = ModelConfig::sequence(n, m, prior, dev)?.with_k_max(sequence_truncation(&plan, n, m))?;
            let reports = run_monte_carlo_par(&model, &plan, Scenario::Sequence, cfg.replicates, cfg.seed)?;
            Ok(DesignReports { n, m, k_max: model.k_max, reports })
        })
        .collect::<Result<Vec<_>>>()?;
    let surface = |idx: usize| -> Result<Surface> {
        let mut values = BTreeMap::new();
        for c in &cells {
            if let Some(s) = c.reports[idx].summary() {
                values.insert((c.n as u64, c.m as u64), s.mean_log);
            }
        }
        Ok(Surface::from_values(grid.n_axis.clone(), grid.m_axis.clone(), &values, |n, m| budget.feasible(n, m))?)
    };
    let surface_g = surface(0)?;
    let surface_f = surface(1)?;
    Ok(Study2Result {
        fit_g: boundary_fit(&surface_g).ok(),
        fit_f: boundary_fit(&surface_f).ok(),
        grid,
        cells,
        surface_g,
        surface_f,
    })
}

/// Per-replicate comparison of oracle and adaptive subject thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub replicate: u64,
    pub oracle_k1: usize,
    pub oracle_k2: usize,
    pub adaptive_k1: usize,
    pub adaptive_k2: usize,
    pub oracle_mise: f64,
    pub adaptive_mise: f64,
}

/// Settings of an oracle-threshold check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub replicates: u64,
    pub seed: u64,
}

/// Sequence-mode runs scoring the adaptive double-threshold estimator against
/// the oracle thresholds computed from the truth.
pub fn oracle_check(cfg: &OracleCheck) -> Result<Vec<OracleRow>> {
    let (n, m) = (cfg.n, cfg.m);
    if m < 2 {
        return Err(AppError::config("oracle check needs m ≥ 2"));
    }
    let (prior, dev) = spectra(cfg.alpha, cfg.alpha_tilde)?;
    // truncate well past the rate-optimal thresholds at the true exponents
    let plan = [
        EstimatorSpec::AdaptiveF { tau1: cfg.tau1, tau2: cfg.tau2 },
        EstimatorSpec::FixedF { beta: cfg.alpha, beta_tilde: cfg.alpha_tilde },
    ];
    let model = ModelConfig::sequence(n, m, prior, dev)?.with_k_max(sequence_truncation(&plan, n, m))?;
    let seeds = SeedTree::new(cfg.seed);
    let one = |r: u64| -> Result<OracleRow> {
        let draw = simulate_sequence(&model, &seeds, r);
        let (ok1, ok2) = oracle_thresholds(&draw.g, &dev, n, m, model.k_max)?;
        let panel = CoefficientPanel::from_rows(n, &draw.rows)?;
        let sel = lepskii_thresholds_f(&panel, 0, cfg.tau1, cfg.tau2)?;
        let adaptive = double_threshold_estimate_f(&panel, 0, sel.k1, sel.k2)?;
        let w = panel.width();
        let oracle = double_threshold_estimate_f(&panel, 0, ok1.min(w), ok2.min(w))?;
        Ok(OracleRow {
            replicate: r,
            oracle_k1: ok1,
            oracle_k2: ok2,
            adaptive_k1: sel.k1,
            adaptive_k2: sel.k2,
            oracle_mise: coefficient_mise(&oracle, &draw.subjects[0]),
            adaptive_mise: coefficient_mise(&adaptive, &draw.subjects[0]),
        })
    };
    (0..cfg.replicates).into_par_iter().map(one).collect()
}

/// Settings of the bundled synthetic curve fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub noise_sd: f64,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec { n: 151, m: 20, alpha: 0.2, alpha_tilde: 0.5, noise_sd: 0.1, k_max: 2000, seed: 20240417 }
    }
}

/// Equally spaced curves `t_i = (i−1)/(n−1)` drawn from the two-level model.
pub fn synthetic_table(spec: &FixtureSpec) -> Result<MultiSubjectTable> {
    let (prior, dev) = spectra(spec.alpha, spec.alpha_tilde)?;
    let model = ModelConfig::regression(spec.n, spec.m, prior, dev, spec.k_max)?.with_noise_sd(spec.noise_sd)?;
    let grid = equispaced(spec.n);
    let grids = vec![grid; spec.m];
    let draw = simulate_regression(&model, &grids, &SeedTree::new(spec.seed), 0, &DirectEvaluator)?;
    let ids = (1..=spec.m).map(|j| format!("S{j:02}")).collect();
    let values = (0..spec.m).map(|j| draw.data.values(j).to_vec()).collect();
    MultiSubjectTable::new(ids, grids, values)
}

/// `(i−1)/(n−1)` for `i = 1..=n`; a single point sits at 0.
pub fn equispaced(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0; n];
    }
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// The fixture table as CSV, headed by its generating settings.
pub fn synthetic_table_csv(spec: &FixtureSpec) -> Result<String> {
    let settings: Vec<(String, String)> = [
        ("n", spec.n.to_string()),
        ("m", spec.m.to_string()),
        ("alpha", spec.alpha.to_string()),
        ("alpha_tilde", spec.alpha_tilde.to_string()),
        ("noise_sd", spec.noise_sd.to_string()),
        ("k_max", spec.k_max.to_string()),
        ("seed", spec.seed.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let header = crate::formats::Header::new("fixture", &settings);
    Ok(synthetic_table(spec)?.to_csv(&header))
}
