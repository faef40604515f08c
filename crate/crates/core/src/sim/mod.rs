//! Data generation for the two-level model.
//!
//! Sequence mode draws coefficients directly: `g ~ ⊗N(0, λₖ)`,
//! `f⁽ʲ⁾ = g + e⁽ʲ⁾` with `e⁽ʲ⁾ ~ ⊗N(0, λ̃ₖ)`, and `Yₖ⁽ʲ⁾ = fₖ⁽ʲ⁾ + σ n^(−1/2) Zₖ`.
//! Regression mode evaluates the same functions on fixed grids and adds
//! pointwise noise, either by series truncation or by Cholesky sampling
//! from the Mercer covariance matrix.

mod covariance;
mod grids;
mod regression;
mod seeds;
mod sequence;

pub use covariance::{build_covariance, cholesky, MvnSampler, SymMatrix};
pub use grids::{g_eval_grid, study1_grids, Study1Grids, STUDY1_EVAL_POINTS, STUDY1_LATTICE};
pub use regression::{
    simulate_regression, CovarianceDraw, CovarianceSimulator, DirectEvaluator, RegressionDataset,
    RegressionDraw, SeriesEvaluator,
};
pub use seeds::{Lane, SeedTree};
pub use sequence::{
    observe_sequence, sample_population, sample_subject, sample_subjects, simulate_sequence,
    SequenceDraw,
};

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sequence,
    Regression,
}

/// Sizes, spectra and truncation of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    pub prior: Spectrum,
    pub deviation: Spectrum,
    pub k_max: usize,
    pub mode: Mode,
    /// Standard deviation multiplying the unit noise; zero gives noiseless data.
    pub noise_sd: f64,
}

impl ModelConfig {
    /// Sequence-mode config with the default truncation `⌈4√(nm)⌉`.
    pub fn sequence(n: usize, m: usize, prior: Spectrum, deviation: Spectrum) -> Result<Self> {
        let cfg = ModelConfig {
            n,
            m,
            prior,
            deviation,
            k_max: default_sequence_k_max(n, m),
            mode: Mode::Sequence,
            noise_sd: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Regression-mode config truncated at `lattice` terms.
    pub fn regression(
        n: usize,
        m: usize,
        prior: Spectrum,
        deviation: Spectrum,
        lattice: usize,
    ) -> Result<Self> {
        let cfg = ModelConfig {
            n,
            m,
            prior,
            deviation,
            k_max: lattice,
            mode: Mode::Regression,
            noise_sd: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_k_max(mut self, k_max: usize) -> Result<Self> {
        self.k_max = k_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Result<Self> {
        self.noise_sd = noise_sd;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.m == 0 {
            return Err(Error::config("m must be at least 1"));
        }
        if self.k_max == 0 {
            return Err(Error::config("k_max must be at least 1"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::config("noise_sd must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Per-coefficient noise standard deviation in sequence form.
    pub fn coefficient_noise_sd(&self) -> f64 {
        self.noise_sd / math::sqrt(self.n as f64)
    }
}

/// `⌈4√(nm)⌉`.
pub fn default_sequence_k_max(n: usize, m: usize) -> usize {
    truncation_for(math::sqrt(n as f64 * m as f64))
}

/// `⌈4·reach⌉`, at least 1: four times the largest index an estimator touches.
pub fn truncation_for(reach: f64) -> usize {
    (math::ceil(4.0 * reach) as usize).max(1)
}
