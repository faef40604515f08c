//! Series evaluation on the lattice `{i/N}` by one inverse FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use twolevel_core::sim::SeriesEvaluator;
use twolevel_core::FunctionSeries;

const LATTICE_TOL: f64 = 1e-9;

/// Evaluates series exactly at lattice points `i/N` through an `N`-point FFT;
/// off-lattice points and small workloads fall back to direct summation.
#[derive(Clone)]
pub struct LatticeEvaluator {
    size: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for LatticeEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeEvaluator").field("size", &self.size).finish()
    }
}

impl LatticeEvaluator {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "lattice size must be positive");
        let fft = FftPlanner::new().plan_fft_inverse(size);
        LatticeEvaluator { size, fft }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn lattice_index(&self, t: f64) -> Option<usize> {
        let x = t * self.size as f64;
        let r = x.round();
        ((x - r).abs() < LATTICE_TOL && r >= 0.0).then(|| r as usize % self.size)
    }

    /// Values at `i/N` for `i = 0..N`.
    pub fn eval_lattice(&self, series: &FunctionSeries) -> Vec<f64> {
        let n = self.size;
        let c = series.coeffs();
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        // ψ_{2r} + ψ_{2r+1} pair r maps to √2·Re((a − ib)·e^{2πirt}); frequencies alias mod N.
        for (idx, &v) in c.iter().enumerate().skip(1) {
            let k = idx + 1;
            let r = (k / 2) % n;
            if k % 2 == 0 {
                buf[r].re += v;
            } else {
                buf[r].im -= v;
            }
        }
        self.fft.process(&mut buf);
        let dc = c.first().copied().unwrap_or(0.0);
        let s2 = std::f64::consts::SQRT_2;
        buf.iter().map(|z| dc + s2 * z.re).collect()
    }
}

impl SeriesEvaluator for LatticeEvaluator {
    fn eval(&self, series: &FunctionSeries, points: &[f64]) -> Vec<f64> {
        let n = self.size as f64;
        let fft_cost = 4.0 * n * n.log2().max(1.0);
        if (points.len() as f64) * (series.len() as f64) < fft_cost {
            return series.eval_many(points);
        }
        let idx: Vec<Option<usize>> = points.iter().map(|&t| self.lattice_index(t)).collect();
        if idx.iter().all(Option::is_none) {
            return series.eval_many(points);
        }
        let lattice = self.eval_lattice(series);
        points
            .iter()
            .zip(idx)
            .map(|(&t, i)| match i {
                Some(i) => lattice[i],
                None => series.eval(t),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(len: usize) -> FunctionSeries {
        FunctionSeries::new((1..=len).map(|k| ((k * 7919) % 13) as f64 / k as f64 - 0.4).collect())
            .unwrap()
    }

    #[test]
    fn matches_direct_summation() {
        let ev = LatticeEvaluator::new(240);
        for len in [1, 2, 3, 57, 240, 700] {
            let s = series(len);
            let lat = ev.eval_lattice(&s);
            for (i, v) in lat.iter().enumerate() {
                let d = s.eval(i as f64 / 240.0);
                assert!((v - d).abs() < 1e-9 * (1.0 + d.abs()), "len {len} i {i}: {v} vs {d}");
            }
        }
    }

    #[test]
    fn mixed_points_fall_back() {
        let ev = LatticeEvaluator::new(64);
        let s = series(5000);
        let pts = [0.0, 0.25, 0.3, 1.0, 17.0 / 64.0];
        let got = ev.eval(&s, &pts);
        for (g, &t) in got.iter().zip(&pts) {
            assert!((g - s.eval(t)).abs() < 1e-8);
        }
    }
}
