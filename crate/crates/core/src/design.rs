//! Budget-constrained `(n, m)` design grids annotated with theoretical
//! rates, gradients and heatmap binning.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::risk::{rate_f, rate_g, rate_gradient, RateGradient, RateQuery, Target};

/// Feasibility rule for a design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// `n·m ≤ budget`.
    Product { budget: f64 },
    /// `cost_n·n + cost_m·m ≤ budget`.
    Linear { budget: f64, cost_n: f64, cost_m: f64 },
}

// Relative slack so that rescaling costs and budget together cannot flip
// a knife-edge cell.
const FEASIBLE_SLACK: f64 = 1e-12;

impl Budget {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            Budget::Product { budget } => ok(budget),
            Budget::Linear { budget, cost_n, cost_m } => ok(budget) && ok(cost_n) && ok(cost_m),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::config("budget and costs must be positive and finite"))
        }
    }

    pub fn feasible(&self, n: u64, m: u64) -> bool {
        let (n, m) = (n as f64, m as f64);
        match *self {
            Budget::Product { budget } => n * m <= budget * (1.0 + FEASIBLE_SLACK),
            Budget::Linear { budget, cost_n, cost_m } => {
                cost_n * n + cost_m * m <= budget * (1.0 + FEASIBLE_SLACK)
            }
        }
    }

    /// Unit costs used to weight gradients.
    pub fn costs(&self) -> (f64, f64) {
        match *self {
            Budget::Product { .. } => (1.0, 1.0),
            Budget::Linear { cost_n, cost_m, .. } => (cost_n, cost_m),
        }
    }

    fn max_axis(&self) -> (u64, u64) {
        match *self {
            Budget::Product { budget } => {
                let b = math::floor(budget * (1.0 + FEASIBLE_SLACK)) as u64;
                (b, b)
            }
            Budget::Linear { budget, cost_n, cost_m } => {
                let b = budget * (1.0 + FEASIBLE_SLACK);
                (
                    math::floor((b - cost_m) / cost_n).max(0.0) as u64,
                    math::floor((b - cost_n) / cost_m).max(0.0) as u64,
                )
            }
        }
    }
}

/// Candidate values along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lattice {
    /// Every integer from 1.
    AllIntegers,
    /// `round(10^{j/d})` for `j ≥ 0`, deduplicated. Multiplying `d` by an
    /// integer yields a superset.
    LogSpaced { per_decade: u32 },
}

impl Lattice {
    pub fn values(&self, max: u64) -> Vec<u64> {
        match *self {
            Lattice::AllIntegers => (1..=max).collect(),
            Lattice::LogSpaced { per_decade } => {
                let d = per_decade.max(1) as f64;
                let mut out = Vec::new();
                let mut j = 0u32;
                loop {
                    let v = math::round(math::powf(10.0, j as f64 / d)) as u64;
                    if v > max {
                        break;
                    }
                    if out.last() != Some(&v) {
                        out.push(v);
                    }
                    j += 1;
                }
                out
            }
        }
    }
}

/// One design with its rates and cost-weighted gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub n: u64,
    pub m: u64,
    pub rate_g: f64,
    pub rate_f: f64,
    pub grad_g: RateGradient,
    pub grad_f: RateGradient,
}

impl DesignPoint {
    pub fn evaluate(n: u64, m: u64, alpha: f64, alpha_tilde: f64, costs: (f64, f64)) -> Result<Self> {
        let q = RateQuery::new(n as f64, m as f64, alpha, alpha_tilde)?.with_costs(costs.0, costs.1)?;
        Ok(DesignPoint {
            n,
            m,
            rate_g: rate_g(&q),
            rate_f: rate_f(&q),
            grad_g: rate_gradient(&q, Target::G),
            grad_f: rate_gradient(&q, Target::F),
        })
    }
}

/// Feasible designs on a lattice, sorted by `(n, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignGrid {
    pub budget: Budget,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub n_axis: Vec<u64>,
    pub m_axis: Vec<u64>,
    pub points: Vec<DesignPoint>,
}

pub fn enumerate_designs(
    budget: Budget,
    alpha: f64,
    alpha_tilde: f64,
    lattice: Lattice,
) -> Result<DesignGrid> {
    budget.validate()?;
    let (max_n, max_m) = budget.max_axis();
    let n_axis = lattice.values(max_n);
    let m_axis = lattice.values(max_m);
    let costs = budget.costs();
    let mut points = Vec::new();
    for &n in &n_axis {
        for &m in &m_axis {
            if budget.feasible(n, m) {
                points.push(DesignPoint::evaluate(n, m, alpha, alpha_tilde, costs)?);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyDesign);
    }
    Ok(DesignGrid { budget, alpha, alpha_tilde, n_axis, m_axis, points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    G,
    F,
    /// `w·rate_g + (1 − w)·rate_f`.
    Weighted(f64),
}

impl Objective {
    pub fn value(&self, p: &DesignPoint) -> f64 {
        match *self {
            Objective::G => p.rate_g,
            Objective::F => p.rate_f,
            Objective::Weighted(w) => w * p.rate_g + (1.0 - w) * p.rate_f,
        }
    }
}

/// Minimizer of the objective; ties go to smaller `m`, then smaller `n`.
pub fn recommend_design(grid: &DesignGrid, objective: Objective) -> Result<DesignPoint> {
    recommend_by(&grid.points, |p| objective.value(p))
}

/// Minimizer of an arbitrary per-design score with the same tie rule.
pub fn recommend_by<F: Fn(&DesignPoint) -> f64>(points: &[DesignPoint], score: F) -> Result<DesignPoint> {
    let mut best: Option<(f64, DesignPoint)> = None;
    for p in points {
        let v = score(p);
        if v.is_nan() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bv, bp)) => v < *bv || (v == *bv && (p.m, p.n) < (bp.m, bp.n)),
        };
        if better {
            best = Some((v, *p));
        }
    }
    best.map(|b| b.1).ok_or(Error::EmptyDesign)
}

/// Rectangular `(n, m)` surface; `None` marks cells outside the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub n_axis: Vec<u64>,
    pub m_axis: Vec<u64>,
    /// Row-major over `m` (rows) then `n` (columns).
    pub cells: Vec<Option<f64>>,
}

impl Surface {
    /// Builds a surface, requiring a value at every feasible cell.
    pub fn from_values<F: Fn(u64, u64) -> bool>(
        n_axis: Vec<u64>,
        m_axis: Vec<u64>,
        values: &BTreeMap<(u64, u64), f64>,
        feasible: F,
    ) -> Result<Self> {
        let mut missing = Vec::new();
        let mut cells = Vec::with_capacity(n_axis.len() * m_axis.len());
        for &m in &m_axis {
            for &n in &n_axis {
                match values.get(&(n, m)) {
                    Some(v) => cells.push(Some(*v)),
                    None if feasible(n, m) => {
                        missing.push((n, m));
                        cells.push(None);
                    }
                    None => cells.push(None),
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::RaggedCoverage(missing));
        }
        if cells.iter().all(Option::is_none) {
            return Err(Error::EmptyDesign);
        }
        Ok(Surface { n_axis, m_axis, cells })
    }

    /// Log of a grid's rate for one target.
    pub fn log_rate(grid: &DesignGrid, target: Target) -> Self {
        let mut values = BTreeMap::new();
        for p in &grid.points {
            let r = match target {
                Target::G => p.rate_g,
                Target::F => p.rate_f,
            };
            values.insert((p.n, p.m), math::ln(r));
        }
        let budget = grid.budget;
        Surface::from_values(grid.n_axis.clone(), grid.m_axis.clone(), &values, |n, m| {
            budget.feasible(n, m)
        })
        .expect("grid points cover the feasible lattice")
    }

    pub fn get(&self, n_idx: usize, m_idx: usize) -> Option<f64> {
        self.cells[m_idx * self.n_axis.len() + n_idx]
    }

    pub fn present(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.m_axis.iter().enumerate().flat_map(move |(mi, &m)| {
            self.n_axis
                .iter()
                .enumerate()
                .filter_map(move |(ni, &n)| self.get(ni, mi).map(|v| (n, m, v)))
        })
    }
}

/// Up to `bins` quantile classes over a surface's values.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins {
    /// `edges.len() == classes + 1`, strictly increasing (a single class
    /// of a constant surface has equal endpoints).
    pub edges: Vec<f64>,
}

pub const HEATMAP_BINS: usize = 9;

impl Bins {
    pub fn quantile(values: &[f64], bins: usize) -> Result<Self> {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.is_empty() || bins == 0 {
            return Err(Error::domain("binning needs finite values and at least one bin"));
        }
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        if lo == hi {
            return Ok(Bins { edges: alloc::vec![lo, hi] });
        }
        let mut edges = Vec::with_capacity(bins + 1);
        edges.push(lo);
        for i in 1..bins {
            let e = crate::risk::quantile_sorted(&sorted, i as f64 / bins as f64);
            if e > *edges.last().unwrap() && e < hi {
                edges.push(e);
            }
        }
        edges.push(hi);
        Ok(Bins { edges })
    }

    pub fn classes(&self) -> usize {
        self.edges.len() - 1
    }

    /// Class of `v`: the last class whose lower edge is ≤ `v`, clamped.
    pub fn class_of(&self, v: f64) -> usize {
        let k = self.classes();
        let idx = self.edges[1..k].partition_point(|e| *e <= v);
        idx.min(k - 1)
    }
}

/// Plane fit `value ≈ a + b·ln n + c·ln m` of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFit {
    pub b: f64,
    pub c: f64,
    /// Angle of the level lines from the `ln n` axis in degrees; 90 means
    /// the level lines are vertical (value depends on `n` only).
    pub verticality_deg: f64,
}

pub fn boundary_fit(surface: &Surface) -> Result<BoundaryFit> {
    let pts: Vec<(f64, f64, f64)> = surface
        .present()
        .map(|(n, m, v)| (math::ln(n as f64), math::ln(m as f64), v))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateSweep("plane fit needs at least 3 cells".into()));
    }
    let k = pts.len() as f64;
    let (mx, my, mv) = pts.iter().fold((0.0, 0.0, 0.0), |a, p| (a.0 + p.0 / k, a.1 + p.1 / k, a.2 + p.2 / k));
    let (mut sxx, mut syy, mut sxy, mut sxv, mut syv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, v) in &pts {
        let (dx, dy, dv) = (x - mx, y - my, v - mv);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
        sxv += dx * dv;
        syv += dy * dv;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= 1e-12 * (sxx * syy).max(1e-300) {
        return Err(Error::DegenerateSweep("cells are collinear in (ln n, ln m)".into()));
    }
    let b = (sxv * syy - syv * sxy) / det;
    let c = (syv * sxx - sxv * sxy) / det;
    let verticality_deg = math::atan2(b.abs(), c.abs()).to_degrees();
    Ok(BoundaryFit { b, c, verticality_deg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    #[test]
    fn product_budget_four() {
        let g = enumerate_designs(Budget::Product { budget: 4.0 }, 1.0, 1.0, Lattice::AllIntegers).unwrap();
        let got: BTreeSet<(u64, u64)> = g.points.iter().map(|p| (p.n, p.m)).collect();
        let want: BTreeSet<(u64, u64)> =
            [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (1, 4), (4, 1), (2, 2)].into_iter().collect();
        assert_eq!(got, want);
    }

    #[test]
    fn annotations_match_direct_calls() {
        let g = enumerate_designs(Budget::Product { budget: 500.0 }, 0.7, 0.3, Lattice::LogSpaced { per_decade: 4 })
            .unwrap();
        for p in &g.points {
            assert!(p.n * p.m <= 500);
            let q = RateQuery::new(p.n as f64, p.m as f64, 0.7, 0.3).unwrap();
            assert_eq!(p.rate_g, rate_g(&q));
            assert_eq!(p.rate_f, rate_f(&q));
            assert_eq!(p.grad_f, rate_gradient(&q, Target::F));
        }
    }

    #[test]
    fn empty_budget_errors() {
        assert_eq!(
            enumerate_designs(Budget::Product { budget: 0.5 }, 1.0, 1.0, Lattice::AllIntegers),
            Err(Error::EmptyDesign)
        );
        let lin = Budget::Linear { budget: 1.0, cost_n: 1.0, cost_m: 1.0 };
        assert_eq!(enumerate_designs(lin, 1.0, 1.0, Lattice::AllIntegers), Err(Error::EmptyDesign));
    }

    #[test]
    fn log_lattice_refines() {
        let coarse = Lattice::LogSpaced { per_decade: 5 }.values(100_000);
        let fine = Lattice::LogSpaced { per_decade: 10 }.values(100_000);
        assert!(coarse.iter().all(|v| fine.contains(v)));
        assert_eq!(coarse[0], 1);
    }

    #[test]
    fn g_design_uses_more_subjects_than_f_design() {
        let g = enumerate_designs(Budget::Product { budget: 5000.0 }, 0.5, 0.5, Lattice::LogSpaced { per_decade: 10 })
            .unwrap();
        let dg = recommend_design(&g, Objective::G).unwrap();
        let df = recommend_design(&g, Objective::F).unwrap();
        assert!(dg.n <= df.n);
        assert_eq!(recommend_design(&g, Objective::Weighted(1.0)).unwrap(), dg);
    }

    #[test]
    fn single_cell_and_ties() {
        let p = DesignPoint::evaluate(3, 4, 1.0, 1.0, (1.0, 1.0)).unwrap();
        assert_eq!(recommend_by(&[p], |_| 1.0).unwrap(), p);
        let q = DesignPoint::evaluate(5, 2, 1.0, 1.0, (1.0, 1.0)).unwrap();
        let r = DesignPoint::evaluate(1, 2, 1.0, 1.0, (1.0, 1.0)).unwrap();
        assert_eq!(recommend_by(&[p, q, r], |_| 0.0).unwrap(), r);
    }

    #[test]
    fn bins_constant_and_monotone() {
        let b = Bins::quantile(&[2.0; 10], HEATMAP_BINS).unwrap();
        assert_eq!(b.classes(), 1);
        assert_eq!(b.class_of(2.0), 0);
        let vals: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        let b = Bins::quantile(&vals, HEATMAP_BINS).unwrap();
        assert_eq!(b.classes(), 9);
        let classes: Vec<usize> = vals.iter().map(|v| b.class_of(*v)).collect();
        assert!(classes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*classes.last().unwrap(), 8);
    }

    #[test]
    fn ragged_surface_lists_cells() {
        let mut vals = BTreeMap::new();
        vals.insert((1, 1), 0.0);
        vals.insert((2, 1), 0.0);
        let e = Surface::from_values(vec![1, 2], vec![1, 2], &vals, |_, _| true).unwrap_err();
        assert_eq!(e, Error::RaggedCoverage(vec![(1, 2), (2, 2)]));
        assert!(Surface::from_values(vec![1, 2], vec![1, 2], &vals, |_, m| m == 1).is_ok());
    }

    #[test]
    fn plane_fit_recovers_coefficients() {
        let mut vals = BTreeMap::new();
        for n in [1u64, 3, 10, 30] {
            for m in [1u64, 4, 16] {
                vals.insert((n, m), 0.5 - 0.3 * (n as f64).ln() - 0.1 * (m as f64).ln());
            }
        }
        let s = Surface::from_values(vec![1, 3, 10, 30], vec![1, 4, 16], &vals, |_, _| true).unwrap();
        let fit = boundary_fit(&s).unwrap();
        assert!((fit.b + 0.3).abs() < 1e-12 && (fit.c + 0.1).abs() < 1e-12);
        assert!(fit.verticality_deg > 45.0);
    }

    #[test]
    fn linear_budget_scale_invariance() {
        let a = Budget::Linear { budget: 300.0, cost_n: 1.5, cost_m: 4.0 };
        let b = Budget::Linear { budget: 300.0 * 0.37, cost_n: 1.5 * 0.37, cost_m: 4.0 * 0.37 };
        let ga = enumerate_designs(a, 0.5, 1.0, Lattice::AllIntegers).unwrap();
        let gb = enumerate_designs(b, 0.5, 1.0, Lattice::AllIntegers).unwrap();
        let ka: Vec<(u64, u64)> = ga.points.iter().map(|p| (p.n, p.m)).collect();
        let kb: Vec<(u64, u64)> = gb.points.iter().map(|p| (p.n, p.m)).collect();
        assert_eq!(ka, kb);
        for o in [Objective::G, Objective::F, Objective::Weighted(0.3)] {
            let (ra, rb) = (recommend_design(&ga, o).unwrap(), recommend_design(&gb, o).unwrap());
            assert_eq!((ra.n, ra.m), (rb.n, rb.m));
        }
    }
}
