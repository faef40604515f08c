use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Lattice size `N` of the Study-1 design.
pub const STUDY1_LATTICE: usize = 20_000;
/// Shared evaluation points per subject.
pub const STUDY1_EVAL_POINTS: usize = 1000;

/// Training grid of one subject plus the shared evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Study1Grids {
    pub train: Vec<f64>,
    pub eval: Vec<f64>,
}

/// `{2(mi + j)/N : i < n}` and `{(20i + 1)/N : i < 1000}` for subject `j ∈ 1..=m`.
pub fn study1_grids(n: usize, m: usize, j: usize, lattice: usize) -> Result<Study1Grids> {
    if n == 0 || m == 0 || lattice == 0 {
        return Err(Error::config("grid sizes must be positive"));
    }
    if j == 0 || j > m {
        return Err(Error::config("subject index must lie in 1..=m"));
    }
    let last_train = 2 * (m * (n - 1) + j);
    if last_train > lattice {
        return Err(Error::config("training grid overflows the lattice"));
    }
    let last_eval = 20 * (STUDY1_EVAL_POINTS - 1) + 1;
    if last_eval > lattice {
        return Err(Error::config("evaluation grid overflows the lattice"));
    }
    let nf = lattice as f64;
    let train = (0..n).map(|i| (2 * (m * i + j)) as f64 / nf).collect();
    let eval = (0..STUDY1_EVAL_POINTS)
        .map(|i| (20 * i + 1) as f64 / nf)
        .collect();
    Ok(Study1Grids { train, eval })
}

/// Midpoint grid `(i − 0.5)/count`, `i = 1..=count`.
pub fn g_eval_grid(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| (i as f64 - 0.5) / count as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn first_points() {
        let g = study1_grids(20, 500, 1, STUDY1_LATTICE).unwrap();
        assert_eq!(g.train[0], 0.0001);
        assert_eq!(g.eval[0], 0.00005);
        assert_eq!(g.train.len(), 20);
        assert_eq!(g.eval.len(), 1000);
    }

    #[test]
    fn grids_are_disjoint() {
        let (n, m) = (20usize, 500usize);
        let mut seen = BTreeSet::new();
        for i in 0..STUDY1_EVAL_POINTS {
            assert!(seen.insert(20 * i + 1));
        }
        for j in 1..=m {
            // the lattice numerators, recovered exactly
            for i in 0..n {
                assert!(seen.insert(2 * (m * i + j)));
            }
            let g = study1_grids(n, m, j, STUDY1_LATTICE).unwrap();
            assert_eq!(g.train[n - 1], (2 * (m * (n - 1) + j)) as f64 / 20_000.0);
        }
        assert_eq!(seen.len(), n * m + STUDY1_EVAL_POINTS);
    }

    #[test]
    fn overflow_is_config_error() {
        assert!(matches!(study1_grids(21, 500, 1, STUDY1_LATTICE), Err(Error::Config(_))));
        assert!(matches!(study1_grids(20, 500, 0, STUDY1_LATTICE), Err(Error::Config(_))));
        assert!(matches!(study1_grids(2, 2, 1, 100), Err(Error::Config(_))));
    }

    #[test]
    fn midpoint_grid() {
        let g = g_eval_grid(10_000);
        assert_eq!(g[0], 0.00005);
        assert_eq!(g.len(), 10_000);
    }
}
