use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sim::RegressionDataset;
use crate::spectral::{fill_basis, FunctionSeries};

/// `m × K` matrix of per-subject coefficients `Yₖ⁽ʲ⁾` at precision `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPanel {
    n: usize,
    m: usize,
    width: usize,
    data: Vec<f64>,
    alias_warning: bool,
}

impl CoefficientPanel {
    /// Panel from sequence-mode rows; all rows must have the same length.
    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("panel precision n must be positive"));
        }
        let width = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * width);
        for (j, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::Domain(alloc::format!(
                    "row {} has {} coefficients, expected {width}",
                    j + 1,
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(alloc::format!("row {} is not finite", j + 1)));
            }
            data.extend_from_slice(r);
        }
        Ok(CoefficientPanel { n, m: rows.len(), width, data, alias_warning: false })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of coefficients per subject.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Set when the width exceeds the alias-free range `n/2` of the grids.
    pub fn alias_warning(&self) -> bool {
        self.alias_warning
    }

    /// Zero-based subject row.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.width..(j + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.m).map(move |j| self.row(j))
    }

    /// Same data with rows reordered so that new row `i` is old row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.m {
            return Err(Error::domain("permutation length differs from m"));
        }
        let rows: Vec<Vec<f64>> = order.iter().map(|&j| self.row(j).to_vec()).collect();
        let mut p = CoefficientPanel::from_rows(self.n, &rows)?;
        p.alias_warning = self.alias_warning;
        Ok(p)
    }

    pub(crate) fn check_subject(&self, j: usize) -> Result<()> {
        if j >= self.m {
            return Err(Error::Domain(alloc::format!(
                "subject index {j} out of range for {} subjects",
                self.m
            )));
        }
        Ok(())
    }
}

/// Scaling of the empirical inner product on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `(1/n)·Σᵢ Yᵢ ψₖ(tᵢ)`, which is unbiased for `fₖ` on alias-free grids.
    #[default]
    Mean,
    /// `Σᵢ Yᵢ ψₖ(tᵢ)` without the `1/n`.
    Sum,
}

/// Projects each subject's observations onto `ψ₁..ψ_K`.
pub fn empirical_coefficients(
    data: &RegressionDataset,
    k: usize,
    norm: Normalization,
) -> Result<CoefficientPanel> {
    let n = data.n();
    if n == 0 {
        return Err(Error::domain("dataset has no observations"));
    }
    if k == 0 {
        return Err(Error::domain("need at least one coefficient"));
    }
    let scale = match norm {
        Normalization::Mean => 1.0 / n as f64,
        Normalization::Sum => 1.0,
    };
    let mut basis = vec![0.0; k];
    let mut out = Vec::with_capacity(data.m() * k);
    for (grid, values) in data.subjects() {
        let mut row = vec![0.0; k];
        for (&t, &y) in grid.iter().zip(values) {
            fill_basis(t, &mut basis);
            for (r, b) in row.iter_mut().zip(&basis) {
                *r += y * b;
            }
        }
        out.extend(row.into_iter().map(|v| v * scale));
    }
    Ok(CoefficientPanel {
        n,
        m: data.m(),
        width: k,
        data: out,
        alias_warning: 2 * k > n,
    })
}

/// Column means, optionally leaving one subject out.
pub fn pooled_coefficients(panel: &CoefficientPanel, exclude: Option<usize>) -> Result<Vec<f64>> {
    if let Some(j) = exclude {
        panel.check_subject(j)?;
        if panel.m < 2 {
            return Err(Error::NoDonors("leave-one-out pooling needs m ≥ 2".into()));
        }
    }
    let count = panel.m - usize::from(exclude.is_some());
    if count == 0 {
        return Err(Error::NoDonors("panel has no subjects".into()));
    }
    let mut acc = vec![0.0; panel.width];
    for (j, row) in panel.rows().enumerate() {
        if Some(j) == exclude {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let inv = 1.0 / count as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

/// Pooled mean truncated after `k` coefficients.
pub fn threshold_estimate_g(panel: &CoefficientPanel, k: usize) -> Result<FunctionSeries> {
    if k > panel.width {
        return Err(Error::domain("threshold exceeds panel width"));
    }
    if k == 0 {
        return Ok(FunctionSeries::zero());
    }
    let mut pooled = pooled_coefficients(panel, None)?;
    pooled.truncate(k);
    Ok(FunctionSeries::from_vec_unchecked(pooled))
}

/// Own coefficients up to `k1`, leave-one-out pooled ones on `(k1, k2]`.
pub fn double_threshold_estimate_f(
    panel: &CoefficientPanel,
    subject: usize,
    k1: usize,
    k2: usize,
) -> Result<FunctionSeries> {
    panel.check_subject(subject)?;
    if k1 > k2 {
        return Err(Error::domain("inner threshold exceeds outer threshold"));
    }
    if k2 > panel.width {
        return Err(Error::domain("threshold exceeds panel width"));
    }
    let mut coeffs = panel.row(subject)[..k2].to_vec();
    if k2 > k1 {
        let pooled = pooled_coefficients(panel, Some(subject))?;
        coeffs[k1..k2].copy_from_slice(&pooled[k1..k2]);
    }
    Ok(FunctionSeries::from_vec_unchecked(coeffs))
}
