use alloc::vec::Vec;

use super::panel::{pooled_coefficients, CoefficientPanel};
use crate::error::{Error, Result};
use crate::spectral::{FunctionSeries, Spectrum};

/// Working hyperparameters of the conjugate posterior means.
///
/// The spectra need not match the ones that generated the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSpec {
    pub prior: Spectrum,
    pub deviation: Spectrum,
    pub noise_sd: f64,
}

impl PosteriorSpec {
    pub fn new(prior: Spectrum, deviation: Spectrum) -> Self {
        PosteriorSpec { prior, deviation, noise_sd: 1.0 }
    }

    pub fn with_noise_sd(mut self, noise_sd: f64) -> Result<Self> {
        if !(noise_sd.is_finite() && noise_sd > 0.0) {
            return Err(Error::domain("posterior noise_sd must be positive"));
        }
        self.noise_sd = noise_sd;
        Ok(self)
    }

    fn coefficient_noise_var(&self, n: usize) -> f64 {
        self.noise_sd * self.noise_sd / n as f64
    }
}

/// `E[g | Y]`: the all-subject mean `Ỹₖ` shrunk by `1/(ζₖ⁻¹ m⁻¹ (ζ̃ₖ + σ²/n) + 1)`.
pub fn posterior_mean_g(panel: &CoefficientPanel, spec: &PosteriorSpec) -> Result<FunctionSeries> {
    let pooled = pooled_coefficients(panel, None)?;
    let s = spec.coefficient_noise_var(panel.n());
    let m = panel.m() as f64;
    let coeffs: Vec<f64> = pooled
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let k = i + 1;
            let (zeta, zeta_t) = (spec.prior.eig(k), spec.deviation.eig(k));
            y / ((zeta_t + s) / (zeta * m) + 1.0)
        })
        .collect();
    FunctionSeries::new(coeffs).map_err(|_| Error::Numerical("posterior mean overflowed".into()))
}

/// `E[f⁽ʲ⁾ | Y]` for one subject, with the other `m − 1` subjects as donors.
///
/// Per coefficient, with `v = λ̃ + s`, `s = σ²/n` and `d = m − 1`:
/// `c = λ⁻¹ + λ̃⁻¹ + d/v`, `a = λ̃⁻¹ (d/v) / c`, `b = (λ⁻¹ + d/v) / c`, and the
/// mean is `(Y⁽ʲ⁾/s + a·Ȳ) / (1/s + b/λ̃)` where `Ȳ` is the donor mean.
pub fn posterior_mean_f(
    panel: &CoefficientPanel,
    subject: usize,
    spec: &PosteriorSpec,
) -> Result<FunctionSeries> {
    panel.check_subject(subject)?;
    let donors = panel.m() - 1;
    let own = panel.row(subject);
    let pooled = if donors > 0 {
        Some(pooled_coefficients(panel, Some(subject))?)
    } else {
        None
    };
    let s = spec.coefficient_noise_var(panel.n());
    let d = donors as f64;
    let coeffs: Vec<f64> = own
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let k = i + 1;
            let (lam, lam_t) = (spec.prior.eig(k), spec.deviation.eig(k));
            let donor_prec = d / (lam_t + s);
            let c = 1.0 / lam + 1.0 / lam_t + donor_prec;
            let a = donor_prec / (lam_t * c);
            let b = (1.0 / lam + donor_prec) / c;
            let ybar = pooled.as_ref().map_or(0.0, |p| p[i]);
            (y / s + a * ybar) / (1.0 / s + b / lam_t)
        })
        .collect();
    FunctionSeries::new(coeffs).map_err(|_| Error::Numerical("posterior mean overflowed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(a: f64, at: f64) -> PosteriorSpec {
        PosteriorSpec::new(Spectrum::with_decay(a).unwrap(), Spectrum::with_decay(at).unwrap())
    }

    fn panel(n: usize, rows: Vec<Vec<f64>>) -> CoefficientPanel {
        CoefficientPanel::from_rows(n, &rows).unwrap()
    }

    #[test]
    fn g_shrinks_strictly() {
        let p = panel(10, vec![vec![1.0, -2.0, 0.5], vec![0.2, 0.1, 3.0]]);
        let pooled = pooled_coefficients(&p, None).unwrap();
        let est = posterior_mean_g(&p, &spec(1.0, 0.5)).unwrap();
        for (e, y) in est.coeffs().iter().zip(&pooled) {
            assert!(e.abs() < y.abs());
            assert_eq!(e.signum(), y.signum());
        }
    }

    #[test]
    fn g_flat_prior_limit() {
        let p = panel(10, vec![vec![1.0, -2.0, 0.5], vec![0.2, 0.1, 3.0]]);
        let mut sp = spec(1.0, 0.5);
        sp.prior = Spectrum::new(1.0, 1e8).unwrap();
        let est = posterior_mean_g(&p, &sp).unwrap();
        let pooled = pooled_coefficients(&p, None).unwrap();
        for (e, y) in est.coeffs().iter().zip(&pooled) {
            assert!((e - y).abs() < 1e-6);
        }
    }

    #[test]
    fn f_single_subject_reduces_to_marginal_shrinkage() {
        let n = 10usize;
        let p = panel(n, vec![vec![0.8, -0.3, 0.1, 2.0]]);
        let sp = spec(1.0, 0.5);
        let est = posterior_mean_f(&p, 0, &sp).unwrap();
        for (i, y) in p.row(0).iter().enumerate() {
            let k = i + 1;
            let prior_var = sp.prior.eig(k) + sp.deviation.eig(k);
            let want = y * n as f64 / (n as f64 + 1.0 / prior_var);
            assert!((est.coeffs()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn f_collapses_to_g_without_deviation() {
        let p = panel(10, vec![vec![1.0, -2.0, 0.5], vec![0.2, 0.1, 3.0], vec![0.0, 0.4, -1.0]]);
        let mut sp = spec(1.0, 0.5);
        sp.deviation = Spectrum::new(0.5, 1e-10).unwrap();
        let f = posterior_mean_f(&p, 1, &sp).unwrap();
        let g = posterior_mean_g(&p, &sp).unwrap();
        assert!(f.distance_sq(&g).sqrt() < 1e-6);
    }
}
