//! Risk scoring, theoretical rates and the Monte Carlo harness.
//!
//! Rate constants are fixed to 1, so only slopes and orderings of the
//! rate functions carry meaning.

mod monte_carlo;
mod rates;
mod summary;

pub use monte_carlo::{
    assemble_reports, plan_reach, run_monte_carlo, run_replicate, sequence_truncation,
    EstimatorSpec, RegressionScenario, Scenario,
};
pub use rates::{
    rate_f, rate_g, rate_gradient, rate_single_subject, Axis, RateGradient, RateQuery, Target,
};
pub use summary::{median, quantile_sorted, ConfigEcho, RiskReport, Summary};

use crate::error::{Error, Result};
use crate::math;
use crate::spectral::FunctionSeries;

/// Mean squared difference between `estimate` and `truth` over `grid`.
pub fn empirical_mise(estimate: &FunctionSeries, truth: &[f64], grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::domain("evaluation grid is empty"));
    }
    if grid.len() != truth.len() {
        return Err(Error::domain("truth and grid lengths differ"));
    }
    Ok(grid
        .iter()
        .zip(truth)
        .map(|(&t, &y)| {
            let d = estimate.eval(t) - y;
            d * d
        })
        .sum::<f64>()
        / grid.len() as f64)
}

/// Root mean squared prediction error on held-out `(t, y)` pairs.
pub fn rmspe(estimate: &FunctionSeries, times: &[f64], values: &[f64]) -> Result<f64> {
    empirical_mise(estimate, values, times).map(math::sqrt)
}

/// Integrated squared error in coefficient space (Parseval).
pub fn coefficient_mise(estimate: &FunctionSeries, truth: &FunctionSeries) -> f64 {
    estimate.distance_sq(truth)
}

/// Sweep coordinate used by [`slope_recovery`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    M,
    NM,
}

/// One design point of a sweep with its summary risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n: f64,
    pub m: f64,
    pub risk: f64,
}

/// Least-squares slope of `ln(risk)` against `ln(axis value)`.
pub fn slope_recovery(points: &[SweepPoint], axis: SweepAxis) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DegenerateSweep("need at least 3 sweep points".into()));
    }
    let mut xs = alloc::vec::Vec::with_capacity(points.len());
    let mut ys = alloc::vec::Vec::with_capacity(points.len());
    for p in points {
        let x = match axis {
            SweepAxis::N => p.n,
            SweepAxis::M => p.m,
            SweepAxis::NM => p.n * p.m,
        };
        if !(x > 0.0 && p.risk > 0.0) {
            return Err(Error::DegenerateSweep("axis values and risks must be positive".into()));
        }
        xs.push(math::ln(x));
        ys.push(math::ln(p.risk));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-24 {
        return Err(Error::DegenerateSweep("axis is constant across the sweep".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn mise_examples() {
        let f = FunctionSeries::new(vec![0.5, 1.0, -0.2]).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let truth: Vec<f64> = grid.iter().map(|&t| f.eval(t)).collect();
        assert!(empirical_mise(&f, &truth, &grid).unwrap() < 1e-28);
        let shifted: Vec<f64> = truth.iter().map(|v| v - 0.3).collect();
        assert!((empirical_mise(&f, &shifted, &grid).unwrap() - 0.09).abs() < 1e-12);
        assert!((rmspe(&f, &grid, &shifted).unwrap() - 0.3).abs() < 1e-12);
        assert!(empirical_mise(&f, &[], &[]).is_err());
    }

    #[test]
    fn mise_matches_naive_loop() {
        let f = FunctionSeries::new(vec![0.1, -0.4, 0.9, 0.3]).unwrap();
        let grid: Vec<f64> = (0..33).map(|i| (i as f64 + 0.5) / 33.0).collect();
        let truth: Vec<f64> = grid.iter().map(|t| (7.0 * t).sin()).collect();
        let mut acc = 0.0;
        for i in 0..grid.len() {
            let mut v = 0.0;
            for k in 1..=4 {
                v += f.coeff(k) * crate::spectral::fourier_eval(k, grid[i]).unwrap();
            }
            acc += (v - truth[i]) * (v - truth[i]);
        }
        assert!((empirical_mise(&f, &truth, &grid).unwrap() - acc / 33.0).abs() < 1e-12);
        let m = empirical_mise(&f, &truth, &grid).unwrap();
        assert!((rmspe(&f, &grid, &truth).unwrap() - m.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<SweepPoint> = [10.0, 40.0, 160.0, 640.0]
            .iter()
            .map(|&n: &f64| SweepPoint { n, m: 3.0, risk: 2.0 * n.powf(-0.5) })
            .collect();
        assert!((slope_recovery(&pts, SweepAxis::N).unwrap() + 0.5).abs() < 1e-12);
        assert!((slope_recovery(&pts, SweepAxis::NM).unwrap() + 0.5).abs() < 1e-12);
        assert!(matches!(slope_recovery(&pts, SweepAxis::M), Err(Error::DegenerateSweep(_))));
        assert!(slope_recovery(&pts[..2], SweepAxis::N).is_err());
    }

    #[test]
    fn closed_form_rate_slope() {
        let pts: Vec<SweepPoint> = [100.0, 400.0, 1600.0, 6400.0]
            .iter()
            .map(|&n| {
                let q = RateQuery::new(n, 20.0, 2.0, 0.5).unwrap();
                SweepPoint { n, m: 20.0, risk: rate_f(&q) }
            })
            .collect();
        let s = slope_recovery(&pts, SweepAxis::N).unwrap();
        assert!((s + 0.5).abs() < 0.02, "{s}");
    }
}
