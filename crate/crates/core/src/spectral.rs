//! Fourier eigenbasis, polynomial eigenvalue laws and coefficient-space
//! arithmetic for functions on `[0, 1]`.
//!
//! Basis ordering is `ψ₁ = 1`, `ψ₂ᵣ(t) = √2·cos(2πrt)`,
//! `ψ₂ᵣ₊₁(t) = √2·sin(2πrt)`, so indices `2r` and `2r + 1` share
//! frequency `r`. Coefficient vectors are stored zero-based: `coeffs[0]`
//! multiplies `ψ₁`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::math;

/// Polynomial eigenvalue law `λₖ = scale · k^(−1−2·decay)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    decay: f64,
    scale: f64,
}

impl Spectrum {
    pub fn new(decay: f64, scale: f64) -> Result<Self> {
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::domain("spectrum decay must be positive and finite"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::domain("spectrum scale must be positive and finite"));
        }
        Ok(Spectrum { decay, scale })
    }

    /// Unit-scale spectrum with the given regularity exponent.
    pub fn with_decay(decay: f64) -> Result<Self> {
        Spectrum::new(decay, 1.0)
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same law with a different multiplier.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        Spectrum::new(self.decay, scale)
    }

    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::domain("eigenvalue index is 1-based"));
        }
        Ok(self.eig(k))
    }

    /// `λ₁, …, λ_K`.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        (1..=count).map(|k| self.eig(k)).collect()
    }

    #[inline]
    pub(crate) fn eig(&self, k: usize) -> f64 {
        self.scale * math::powf(k as f64, -1.0 - 2.0 * self.decay)
    }

    /// Upper bound on `Σ_{k>K} λₖ` from the integral `∫_K^∞ scale·x^(−1−2a) dx`.
    pub(crate) fn tail_bound(&self, after: usize) -> f64 {
        if after == 0 {
            return f64::INFINITY;
        }
        self.scale * math::powf(after as f64, -2.0 * self.decay) / (2.0 * self.decay)
    }
}

/// `ψₖ(t)` for `k ≥ 1` and `t ∈ [0, 1]`.
pub fn fourier_eval(k: usize, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("basis index is 1-based"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("basis argument must lie in [0, 1]"));
    }
    Ok(basis_value(k, t))
}

#[inline]
pub(crate) fn basis_value(k: usize, t: f64) -> f64 {
    if k == 1 {
        return 1.0;
    }
    let r = (k / 2) as f64;
    let (s, c) = math::sin_cos(2.0 * PI * r * t);
    if k.is_multiple_of(2) {
        SQRT_2 * c
    } else {
        SQRT_2 * s
    }
}

// Exact sin/cos are recomputed every this many frequencies to stop the
// rotation recurrence drifting.
const REANCHOR: usize = 32;

/// Writes `ψ₁(t), …, ψ_K(t)` into `out` (length `K`).
pub fn fill_basis(t: f64, out: &mut [f64]) {
    let count = out.len();
    if count == 0 {
        return;
    }
    out[0] = 1.0;
    let theta = 2.0 * PI * t;
    let (s1, c1) = math::sin_cos(theta);
    let (mut s, mut c) = (s1, c1);
    let mut r = 1usize;
    loop {
        let ci = 2 * r - 1;
        if ci >= count {
            break;
        }
        out[ci] = SQRT_2 * c;
        if ci + 1 < count {
            out[ci + 1] = SQRT_2 * s;
        }
        r += 1;
        if r.is_multiple_of(REANCHOR) {
            let (sr, cr) = math::sin_cos(theta * r as f64);
            s = sr;
            c = cr;
        } else {
            let cn = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = cn;
        }
    }
}

/// A function on `[0, 1]` given by its first `K` Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FunctionSeries {
    coeffs: Vec<f64>,
}

impl FunctionSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("series coefficients must be finite"));
        }
        Ok(FunctionSeries { coeffs })
    }

    pub(crate) fn from_vec_unchecked(coeffs: Vec<f64>) -> Self {
        debug_assert!(coeffs.iter().all(|c| c.is_finite()));
        FunctionSeries { coeffs }
    }

    pub fn zero() -> Self {
        FunctionSeries { coeffs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient `k` (1-based); zero past the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    /// `Σₖ coeffsₖ ψₖ(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let count = self.coeffs.len();
        if count == 0 {
            return 0.0;
        }
        let mut acc = self.coeffs[0];
        let theta = 2.0 * PI * t;
        let (s1, c1) = math::sin_cos(theta);
        let (mut s, mut c) = (s1, c1);
        let mut r = 1usize;
        let mut wave = 0.0;
        loop {
            let ci = 2 * r - 1;
            if ci >= count {
                break;
            }
            wave += self.coeffs[ci] * c;
            if ci + 1 < count {
                wave += self.coeffs[ci + 1] * s;
            }
            r += 1;
            if r.is_multiple_of(REANCHOR) {
                let (sr, cr) = math::sin_cos(theta * r as f64);
                s = sr;
                c = cr;
            } else {
                let cn = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = cn;
            }
        }
        acc += SQRT_2 * wave;
        acc
    }

    pub fn eval_many(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&t| self.eval(t)).collect()
    }

    /// `Σₖ coeffsₖ² · k^(2·smoothness)`.
    pub fn sobolev_norm_sq(&self, smoothness: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = if smoothness == 0.0 {
                    1.0
                } else {
                    math::powf((i + 1) as f64, 2.0 * smoothness)
                };
                c * c * w
            })
            .sum()
    }

    /// Squared L2 norm (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `Σ_{k>K} coeffsₖ²`.
    pub fn tail_energy(&self, after: usize) -> f64 {
        self.coeffs.iter().skip(after).map(|c| c * c).sum()
    }

    /// Keeps the first `count` coefficients, zero-padding if shorter.
    pub fn truncated(&self, count: usize) -> FunctionSeries {
        let mut coeffs = vec![0.0; count];
        let keep = count.min(self.coeffs.len());
        coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        FunctionSeries { coeffs }
    }

    /// `‖self − other‖²` in coefficient space.
    pub fn distance_sq(&self, other: &FunctionSeries) -> f64 {
        let len = self.len().max(other.len());
        (1..=len)
            .map(|k| {
                let d = self.coeff(k) - other.coeff(k);
                d * d
            })
            .sum()
    }
}

/// Sobolev-type ellipsoid `{ Σ gₖ² k^(2α) ≤ R² }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevBall {
    smoothness: f64,
    radius: f64,
}

impl SobolevBall {
    pub fn new(smoothness: f64, radius: f64) -> Result<Self> {
        if !(smoothness.is_finite() && smoothness > 0.0) {
            return Err(Error::domain("smoothness must be positive"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain("radius must be positive"));
        }
        Ok(SobolevBall { smoothness, radius })
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, series: &FunctionSeries) -> bool {
        series.sobolev_norm_sq(self.smoothness) <= self.radius * self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigenvalue_examples() {
        let s = Spectrum::with_decay(0.5).unwrap();
        assert_eq!(s.eigenvalue(1).unwrap(), 1.0);
        assert!(close(s.eigenvalue(2).unwrap(), 0.25, 1e-15));
        let s2 = Spectrum::with_decay(2.0).unwrap();
        assert!(close(s2.eigenvalue(3).unwrap(), 1.0 / 243.0, 1e-15));
        assert!(matches!(s.eigenvalue(0), Err(Error::Domain(_))));
    }

    #[test]
    fn spectrum_rejects_nonpositive() {
        assert!(Spectrum::new(0.0, 1.0).is_err());
        assert!(Spectrum::new(1.0, 0.0).is_err());
        assert!(Spectrum::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn fourier_examples() {
        assert_eq!(fourier_eval(1, 0.37).unwrap(), 1.0);
        assert!(close(fourier_eval(2, 0.25).unwrap(), 0.0, 1e-15));
        assert!(close(fourier_eval(3, 0.25).unwrap(), SQRT_2, 1e-15));
        assert!(fourier_eval(0, 0.5).is_err());
        assert!(fourier_eval(2, 1.5).is_err());
    }

    #[test]
    fn series_eval_examples() {
        assert_eq!(FunctionSeries::zero().eval(0.3), 0.0);
        let f = FunctionSeries::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert!(close(f.eval(0.0), SQRT_2, 1e-15));
    }

    #[test]
    fn sobolev_and_tail_examples() {
        assert_eq!(FunctionSeries::zero().sobolev_norm_sq(1.3), 0.0);
        let f = FunctionSeries::new(vec![3.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.sobolev_norm_sq(2.7), 9.0);
        let f = FunctionSeries::new(vec![1.0, 1.0]).unwrap();
        assert!(close(f.sobolev_norm_sq(0.5), 3.0, 1e-15));
        let f = FunctionSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.tail_energy(1), 13.0);
        assert_eq!(f.tail_energy(3), 0.0);
        assert_eq!(f.tail_energy(10), 0.0);
    }

    #[test]
    fn ball_membership() {
        let ball = SobolevBall::new(1.0, 2.0).unwrap();
        assert!(ball.contains(&FunctionSeries::new(vec![1.0, 0.5]).unwrap()));
        // 1 + 4·1 = 5 > 4
        assert!(!ball.contains(&FunctionSeries::new(vec![1.0, 1.0]).unwrap()));
    }

    #[test]
    fn series_rejects_nonfinite() {
        assert!(FunctionSeries::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn fill_basis_matches_direct_at_high_frequency() {
        let mut buf = vec![0.0; 4001];
        for &t in &[0.0, 0.123_456, 0.5, 0.999_9, 1.0] {
            fill_basis(t, &mut buf);
            for (i, v) in buf.iter().enumerate() {
                assert!(close(*v, basis_value(i + 1, t), 1e-11), "k={} t={}", i + 1, t);
            }
        }
    }

    #[test]
    fn empirical_gram_is_identity() {
        for k in [1usize, 2, 7, 20, 50] {
            let n = 10 * k;
            let mut gram = vec![0.0; k * k];
            let mut row = vec![0.0; k];
            for i in 0..n {
                let t = (i as f64 + 0.5) / n as f64;
                fill_basis(t, &mut row);
                for a in 0..k {
                    for b in 0..k {
                        gram[a * k + b] += row[a] * row[b] / n as f64;
                    }
                }
            }
            for a in 0..k {
                for b in 0..k {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!(close(gram[a * k + b], want, 1e-8), "K={k} ({a},{b})");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn eigenvalues_strictly_decrease(decay in 0.01f64..5.0, scale in 1e-3f64..1e3, k in 1usize..5000) {
            let s = Spectrum::new(decay, scale).unwrap();
            let (a, b) = (s.eigenvalue(k).unwrap(), s.eigenvalue(k + 1).unwrap());
            prop_assert!(b < a && b > 0.0);
        }

        #[test]
        fn series_eval_matches_termwise_sum(coeffs in proptest::collection::vec(-3.0f64..3.0, 0..120)) {
            let f = FunctionSeries::new(coeffs.clone()).unwrap();
            for i in 0..100 {
                let t = i as f64 / 99.0;
                let naive: f64 = coeffs.iter().enumerate().map(|(j, c)| c * basis_value(j + 1, t)).sum();
                prop_assert!((f.eval(t) - naive).abs() <= 1e-12 * (1.0 + naive.abs()));
            }
        }

        #[test]
        fn parseval_by_quadrature(coeffs in proptest::collection::vec(-2.0f64..2.0, 1..50)) {
            let f = FunctionSeries::new(coeffs).unwrap();
            let grid = 10_000;
            let quad: f64 = (0..grid).map(|i| {
                let v = f.eval((i as f64 + 0.5) / grid as f64);
                v * v
            }).sum::<f64>() / grid as f64;
            let norm = f.norm_sq();
            prop_assert!((quad - norm).abs() <= 1e-6 * norm.max(1e-12));
        }

        #[test]
        fn tail_zero_is_norm(coeffs in proptest::collection::vec(-5.0f64..5.0, 0..60)) {
            let f = FunctionSeries::new(coeffs).unwrap();
            prop_assert_eq!(f.tail_energy(0), f.sobolev_norm_sq(0.0));
        }
    }
}
