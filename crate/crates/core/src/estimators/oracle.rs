use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::spectral::{FunctionSeries, Spectrum};

/// Truth-dependent thresholds `(k₁*, k₂*)` balancing bias and variance bounds.
///
/// `B′(k) = Σ_{ℓ>k}(gℓ² + λ̃ℓ)` is summed explicitly up to
/// `max(terms, len(g))` and closed with the integral bound on the λ̃ tail.
/// `k₂*` is the smallest `k` with `B′(k) ≤ k/(nm)`; `k₁*` is the smallest
/// `k ≤ k₂*` with `B′(k₂*) + V′(k, k₂*) ≤ 2k/n`, where
/// `V′(k, k₂) = k/n + Σ_{k<i≤k₂}(λ̃ᵢ(1 + 1/m) + 1/(nm))`.
pub fn oracle_thresholds(
    g: &FunctionSeries,
    deviation: &Spectrum,
    n: usize,
    m: usize,
    terms: usize,
) -> Result<(usize, usize)> {
    if n == 0 || m == 0 {
        return Err(Error::domain("n and m must be positive"));
    }
    let (nf, mf) = (n as f64, m as f64);
    let nm = nf * mf;
    let len = terms.max(g.len()).max(1);
    // suffix[k] = Σ_{ℓ > k, ℓ ≤ len}(gℓ² + λ̃ℓ) + analytic tail beyond len.
    let tail = deviation.tail_bound(len);
    let mut suffix = Vec::with_capacity(len + 1);
    suffix.resize(len + 1, 0.0);
    suffix[len] = tail;
    for k in (0..len).rev() {
        let l = k + 1;
        suffix[k] = suffix[l] + g.coeff(l) * g.coeff(l) + deviation.eig(l);
    }
    let bias = |k: usize| -> f64 {
        if k <= len {
            suffix[k]
        } else {
            deviation.tail_bound(k)
        }
    };
    let mut k2 = 1usize;
    while bias(k2) > k2 as f64 / nm {
        k2 += 1;
    }
    let b2 = bias(k2);
    // variance of the pooled band (k, k2], accumulated downward
    let step = |i: usize| deviation.eig(i) * (1.0 + 1.0 / mf) + 1.0 / nm;
    let mut band = Vec::with_capacity(k2 + 1);
    band.resize(k2 + 1, 0.0);
    for k in (1..k2).rev() {
        band[k] = band[k + 1] + step(k + 1);
    }
    let k1 = (1..=k2)
        .find(|&k| b2 + k as f64 / nf + band[k] <= 2.0 * k as f64 / nf)
        .unwrap_or(k2);
    Ok((k1, k2))
}
