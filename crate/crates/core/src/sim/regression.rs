use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::covariance::{build_covariance, MvnSampler};
use super::sequence::{sample_population, sample_subject};
use super::{Lane, ModelConfig, SeedTree};
use crate::error::{Error, Result};
use crate::spectral::FunctionSeries;

/// Per-subject grids and noisy observations; every subject has `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    grids: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    noise_sd: f64,
}

impl RegressionDataset {
    pub fn new(grids: Vec<Vec<f64>>, values: Vec<Vec<f64>>, noise_sd: f64) -> Result<Self> {
        if grids.len() != values.len() {
            return Err(Error::domain("grid and value lists differ in subject count"));
        }
        let n = grids.first().map_or(0, Vec::len);
        for (j, (t, y)) in grids.iter().zip(&values).enumerate() {
            if t.len() != n || y.len() != n {
                return Err(Error::Domain(alloc::format!(
                    "subject {} has {} grid points and {} values, expected {n}",
                    j + 1,
                    t.len(),
                    y.len()
                )));
            }
            if t.iter().any(|x| !(0.0..=1.0).contains(x)) || t.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Domain(alloc::format!(
                    "subject {} grid must be strictly increasing in [0, 1]",
                    j + 1
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(alloc::format!("subject {} has non-finite values", j + 1)));
            }
        }
        Ok(RegressionDataset { grids, values, noise_sd })
    }

    /// Points per subject.
    pub fn n(&self) -> usize {
        self.grids.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.grids.len()
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    pub fn grid(&self, j: usize) -> &[f64] {
        &self.grids[j]
    }

    pub fn values(&self, j: usize) -> &[f64] {
        &self.values[j]
    }

    pub fn subjects(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.grids
            .iter()
            .zip(&self.values)
            .map(|(t, y)| (t.as_slice(), y.as_slice()))
    }
}

/// Evaluates a series at many points; implementations may exploit grid structure.
pub trait SeriesEvaluator: Sync {
    fn eval(&self, series: &FunctionSeries, points: &[f64]) -> Vec<f64>;
}

/// Term-by-term evaluation at each point.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectEvaluator;

impl SeriesEvaluator for DirectEvaluator {
    fn eval(&self, series: &FunctionSeries, points: &[f64]) -> Vec<f64> {
        series.eval_many(points)
    }
}

/// Series-route replicate: truths as coefficients plus the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDraw {
    pub g: FunctionSeries,
    pub subjects: Vec<FunctionSeries>,
    pub data: RegressionDataset,
}

/// Draws `g` and subjects as `K_max`-term series, evaluates them on each
/// subject's grid and adds `N(0, σ²)` noise.
pub fn simulate_regression(
    cfg: &ModelConfig,
    grids: &[Vec<f64>],
    seeds: &SeedTree,
    replicate: u64,
    evaluator: &dyn SeriesEvaluator,
) -> Result<RegressionDraw> {
    check_grids(cfg, grids)?;
    let g = sample_population(cfg, &mut seeds.stream(replicate, Lane::Population));
    let mut subjects = Vec::with_capacity(cfg.m);
    let mut values = Vec::with_capacity(cfg.m);
    for (j, grid) in grids.iter().enumerate() {
        let f = sample_subject(
            &g,
            &cfg.deviation,
            cfg.k_max,
            &mut seeds.stream(replicate, Lane::Deviation(j as u32)),
        );
        let mut y = evaluator.eval(&f, grid);
        add_noise(&mut y, cfg.noise_sd, &mut seeds.stream(replicate, Lane::Noise(j as u32)));
        values.push(y);
        subjects.push(f);
    }
    let data = RegressionDataset::new(grids.to_vec(), values, cfg.noise_sd)?;
    Ok(RegressionDraw { g, subjects, data })
}

fn add_noise<R: Rng + ?Sized>(y: &mut [f64], sd: f64, rng: &mut R) {
    for v in y.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += sd * z;
    }
}

fn check_grids(cfg: &ModelConfig, grids: &[Vec<f64>]) -> Result<()> {
    if grids.len() != cfg.m {
        return Err(Error::config("one grid per subject is required"));
    }
    if grids.iter().any(|g| g.len() != cfg.n) {
        return Err(Error::config("every grid must have n points"));
    }
    Ok(())
}

/// Covariance-route replicate: truths known only at the evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceDraw {
    pub g_eval: Vec<f64>,
    pub f_eval: Vec<Vec<f64>>,
    pub data: RegressionDataset,
}

/// Exact Gaussian sampling from Mercer covariance matrices, factored once.
///
/// `g` is drawn jointly over every training point and the evaluation
/// points; each subject's deviation is drawn jointly over its own grid and
/// the evaluation points.
#[derive(Debug, Clone)]
pub struct CovarianceSimulator {
    n: usize,
    noise_sd: f64,
    grids: Vec<Vec<f64>>,
    eval_len: usize,
    population: MvnSampler,
    deviations: Vec<MvnSampler>,
}

impl CovarianceSimulator {
    pub fn new(cfg: &ModelConfig, grids: &[Vec<f64>], eval: &[f64], terms: usize) -> Result<Self> {
        check_grids(cfg, grids)?;
        let mut all: Vec<f64> = grids.iter().flatten().copied().collect();
        all.extend_from_slice(eval);
        let population = MvnSampler::new(&build_covariance(&cfg.prior, &all, terms)?)?;
        let deviations = grids
            .iter()
            .map(|grid| {
                let mut pts = grid.clone();
                pts.extend_from_slice(eval);
                MvnSampler::new(&build_covariance(&cfg.deviation, &pts, terms)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CovarianceSimulator {
            n: cfg.n,
            noise_sd: cfg.noise_sd,
            grids: grids.to_vec(),
            eval_len: eval.len(),
            population,
            deviations,
        })
    }

    /// Largest diagonal jitter any factorization needed.
    pub fn jitter(&self) -> f64 {
        self.deviations
            .iter()
            .map(MvnSampler::jitter)
            .fold(self.population.jitter(), f64::max)
    }

    pub fn draw(&self, seeds: &SeedTree, replicate: u64) -> Result<CovarianceDraw> {
        let n = self.n;
        let m = self.grids.len();
        let g_all = self.population.sample(&mut seeds.stream(replicate, Lane::Population));
        let g_eval = g_all[n * m..].to_vec();
        let mut f_eval = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for (j, dev) in self.deviations.iter().enumerate() {
            let e = dev.sample(&mut seeds.stream(replicate, Lane::Deviation(j as u32)));
            let mut y: Vec<f64> = (0..n).map(|i| g_all[j * n + i] + e[i]).collect();
            add_noise(&mut y, self.noise_sd, &mut seeds.stream(replicate, Lane::Noise(j as u32)));
            values.push(y);
            f_eval.push((0..self.eval_len).map(|i| g_eval[i] + e[n + i]).collect());
        }
        let data = RegressionDataset::new(self.grids.clone(), values, self.noise_sd)?;
        Ok(CovarianceDraw { g_eval, f_eval, data })
    }
}
