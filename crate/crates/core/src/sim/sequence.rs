use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Lane, ModelConfig, SeedTree};
use crate::math;
use crate::spectral::{FunctionSeries, Spectrum};

/// `gₖ ~ N(0, λₖ)` independently for `k = 1..K_max`.
pub fn sample_population<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> FunctionSeries {
    gaussian_series(&cfg.prior, cfg.k_max, rng)
}

/// One subject: `g + e`, `eₖ ~ N(0, λ̃ₖ)`, truncated to `k_max`.
pub fn sample_subject<R: Rng + ?Sized>(
    g: &FunctionSeries,
    deviation: &Spectrum,
    k_max: usize,
    rng: &mut R,
) -> FunctionSeries {
    let mut coeffs = gaussian_series(deviation, k_max, rng).into_coeffs();
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c += g.coeff(k + 1);
    }
    FunctionSeries::from_vec_unchecked(coeffs)
}

/// `m` subjects drawn sequentially from one stream.
pub fn sample_subjects<R: Rng + ?Sized>(
    g: &FunctionSeries,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Vec<FunctionSeries> {
    (0..cfg.m)
        .map(|_| sample_subject(g, &cfg.deviation, cfg.k_max, rng))
        .collect()
}

/// `Yₖ = fₖ + σ n^(−1/2) Zₖ` for `k = 1..K_max`.
pub fn observe_sequence<R: Rng + ?Sized>(
    f: &FunctionSeries,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Vec<f64> {
    let sd = cfg.coefficient_noise_sd();
    (1..=cfg.k_max)
        .map(|k| {
            let z: f64 = rng.sample(StandardNormal);
            f.coeff(k) + sd * z
        })
        .collect()
}

fn gaussian_series<R: Rng + ?Sized>(spec: &Spectrum, k_max: usize, rng: &mut R) -> FunctionSeries {
    let coeffs = (1..=k_max)
        .map(|k| {
            let z: f64 = rng.sample(StandardNormal);
            math::sqrt(spec.eig(k)) * z
        })
        .collect();
    FunctionSeries::from_vec_unchecked(coeffs)
}

/// One sequence-mode replicate: truths and observed coefficient rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDraw {
    pub g: FunctionSeries,
    pub subjects: Vec<FunctionSeries>,
    pub rows: Vec<Vec<f64>>,
}

/// Draws replicate `replicate` with one stream per (lane, subject).
///
/// Because the population lane is shared, the leading coefficients of `g`
/// coincide across configs that differ only in `(n, m, k_max)`.
pub fn simulate_sequence(cfg: &ModelConfig, seeds: &SeedTree, replicate: u64) -> SequenceDraw {
    let g = sample_population(cfg, &mut seeds.stream(replicate, Lane::Population));
    let mut subjects = Vec::with_capacity(cfg.m);
    let mut rows = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        let f = sample_subject(
            &g,
            &cfg.deviation,
            cfg.k_max,
            &mut seeds.stream(replicate, Lane::Deviation(j as u32)),
        );
        rows.push(observe_sequence(
            &f,
            cfg,
            &mut seeds.stream(replicate, Lane::Noise(j as u32)),
        ));
        subjects.push(f);
    }
    SequenceDraw { g, subjects, rows }
}
