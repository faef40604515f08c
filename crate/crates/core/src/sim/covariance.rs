use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::{fill_basis, Spectrum};

/// Dense symmetric matrix, full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    size: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(size: usize) -> Self {
        SymMatrix { size, data: vec![0.0; size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.size + b]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.size).map(|i| self.get(i, i)).sum()
    }

    fn set_sym(&mut self, a: usize, b: usize, v: f64) {
        self.data[a * self.size + b] = v;
        self.data[b * self.size + a] = v;
    }
}

const TERM_BLOCK: usize = 256;

/// `Σ_{ab} = Σ_{k ≤ terms} λₖ ψₖ(t_a) ψₖ(t_b)`.
pub fn build_covariance(spec: &Spectrum, points: &[f64], terms: usize) -> Result<SymMatrix> {
    if terms == 0 {
        return Err(Error::domain("covariance needs at least one term"));
    }
    if points.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::domain("covariance points must lie in [0, 1]"));
    }
    let p = points.len();
    let mut out = SymMatrix::zeros(p);
    if p == 0 {
        return Ok(out);
    }
    let sqrt_eig: Vec<f64> = (1..=terms).map(|k| math::sqrt(spec.eig(k))).collect();
    // Scaled basis rows, computed once per point for all terms would cost
    // p·terms memory; blocks of terms keep it bounded.
    let mut full = vec![0.0; terms];
    let mut block = vec![0.0; p * TERM_BLOCK];
    let mut start = 0;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let cache_all = p.saturating_mul(terms) <= 1 << 22;
    if cache_all {
        rows = points
            .iter()
            .map(|&t| {
                let mut r = vec![0.0; terms];
                fill_basis(t, &mut r);
                for (v, s) in r.iter_mut().zip(&sqrt_eig) {
                    *v *= s;
                }
                r
            })
            .collect();
    }
    while start < terms {
        let width = TERM_BLOCK.min(terms - start);
        for (a, &t) in points.iter().enumerate() {
            let dst = &mut block[a * TERM_BLOCK..a * TERM_BLOCK + width];
            if cache_all {
                dst.copy_from_slice(&rows[a][start..start + width]);
            } else {
                fill_basis(t, &mut full[..start + width]);
                for (i, d) in dst.iter_mut().enumerate() {
                    *d = full[start + i] * sqrt_eig[start + i];
                }
            }
        }
        for a in 0..p {
            let ra = &block[a * TERM_BLOCK..a * TERM_BLOCK + width];
            for b in a..p {
                let rb = &block[b * TERM_BLOCK..b * TERM_BLOCK + width];
                let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                let v = out.get(a, b) + dot;
                out.set_sym(a, b, v);
            }
        }
        start += width;
    }
    Ok(out)
}

/// Lower Cholesky factor and the diagonal jitter that was needed (0 if none).
///
/// A failed factorization is retried once with `1e−10·trace/size` added to
/// the diagonal.
pub fn cholesky(matrix: &SymMatrix) -> Result<(Vec<f64>, f64)> {
    if let Some(l) = try_cholesky(matrix, 0.0) {
        return Ok((l, 0.0));
    }
    let size = matrix.size().max(1);
    let jitter = 1e-10 * matrix.trace() / size as f64;
    if jitter > 0.0 {
        if let Some(l) = try_cholesky(matrix, jitter) {
            return Ok((l, jitter));
        }
    }
    Err(Error::Numerical(alloc::format!(
        "covariance is not positive definite after jitter {jitter:e}"
    )))
}

fn try_cholesky(matrix: &SymMatrix, jitter: f64) -> Option<Vec<f64>> {
    let p = matrix.size();
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = matrix.get(i, j);
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * p + i] = math::sqrt(s);
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    Some(l)
}

/// Zero-mean multivariate normal sampler from a covariance matrix.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    size: usize,
    lower: Vec<f64>,
    jitter: f64,
}

impl MvnSampler {
    pub fn new(cov: &SymMatrix) -> Result<Self> {
        let (lower, jitter) = cholesky(cov)?;
        Ok(MvnSampler { size: cov.size(), lower, jitter })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Diagonal jitter applied during factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let p = self.size;
        let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        (0..p)
            .map(|i| {
                self.lower[i * p..i * p + i + 1]
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::basis_value;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_single_term() {
        let s = Spectrum::new(0.7, 2.5).unwrap();
        let c = build_covariance(&s, &[0.3], 1).unwrap();
        assert_eq!(c.size(), 1);
        assert!((c.get(0, 0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn four_term_quarter_point() {
        let s = Spectrum::with_decay(0.5).unwrap();
        let c = build_covariance(&s, &[0.25], 4).unwrap();
        // ψ₂ vanishes at a quarter period; ψ₃² = ψ₄² = 2 there.
        let want = 1.0 + 2.0 / 9.0 + 2.0 / 16.0;
        assert!((c.get(0, 0) - want).abs() < 1e-12, "{}", c.get(0, 0));
        assert!((want - 1.347_222_222).abs() < 1e-8);
    }

    #[test]
    fn matches_double_loop() {
        let s = Spectrum::with_decay(0.3).unwrap();
        let pts = [0.0, 0.11, 0.5, 0.77, 1.0];
        let c = build_covariance(&s, &pts, 50).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let naive: f64 = (1..=50)
                    .map(|k| s.eig(k) * basis_value(k, pts[a]) * basis_value(k, pts[b]))
                    .sum();
                assert!((c.get(a, b) - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_points() {
        let s = Spectrum::with_decay(1.0).unwrap();
        assert_eq!(build_covariance(&s, &[], 10).unwrap().size(), 0);
    }

    #[test]
    fn rank_deficient_needs_jitter() {
        let s = Spectrum::with_decay(1.0).unwrap();
        let pts: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        let c = build_covariance(&s, &pts, 3).unwrap();
        let sampler = MvnSampler::new(&c).unwrap();
        assert!(sampler.jitter() > 0.0);
    }

    #[test]
    fn factor_reproduces_matrix() {
        let s = Spectrum::with_decay(0.5).unwrap();
        let pts: Vec<f64> = (0..8).map(|i| (i as f64 + 0.5) / 8.0).collect();
        let c = build_covariance(&s, &pts, 40).unwrap();
        let (l, jitter) = cholesky(&c).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let v: f64 = (0..8).map(|k| l[a * 8 + k] * l[b * 8 + k]).sum();
                let want = c.get(a, b) + if a == b { jitter } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampler_moments() {
        let s = Spectrum::with_decay(0.5).unwrap();
        let pts = [0.2, 0.6];
        let c = build_covariance(&s, &pts, 30).unwrap();
        let mvn = MvnSampler::new(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws = 40_000;
        let mut acc = [0.0; 3];
        for _ in 0..draws {
            let x = mvn.sample(&mut rng);
            acc[0] += x[0] * x[0];
            acc[1] += x[0] * x[1];
            acc[2] += x[1] * x[1];
        }
        let est = [acc[0] / draws as f64, acc[1] / draws as f64, acc[2] / draws as f64];
        let want = [c.get(0, 0), c.get(0, 1), c.get(1, 1)];
        for (e, w) in est.iter().zip(want) {
            assert!((e - w).abs() < 0.05 * c.get(0, 0), "{e} vs {w}");
        }
    }
}
