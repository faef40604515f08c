use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Order statistics and log-mean of a list of risks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
    /// Mean of `ln(value)`; `−∞` if any value is zero.
    pub mean_log: f64,
}

impl Summary {
    /// `None` for an empty list.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let count = sorted.len();
        let mean = sorted.iter().sum::<f64>() / count as f64;
        let mean_log = sorted.iter().map(|v| math::ln(*v)).sum::<f64>() / count as f64;
        Some(Summary {
            count,
            median: quantile_sorted(&sorted, 0.5),
            mean,
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
            mean_log,
        })
    }
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    Summary::of(values).map(|s| s.median)
}

/// Echo of the settings a report was produced under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigEcho {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub seed: u64,
    pub replicates: u64,
}

/// Per-replicate risks of one estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub label: String,
    /// `(replicate, risk)` in replicate order.
    pub values: Vec<(u64, f64)>,
    /// Replicates where fitting failed.
    pub failures: Vec<(u64, Error)>,
    pub config: ConfigEcho,
}

impl RiskReport {
    pub fn new(label: String, config: ConfigEcho) -> Self {
        RiskReport { label, values: Vec::new(), failures: Vec::new(), config }
    }

    pub fn push(&mut self, replicate: u64, outcome: Result<f64>) {
        match outcome {
            Ok(v) => self.values.push((replicate, v)),
            Err(e) => self.failures.push((replicate, e)),
        }
    }

    /// Orders entries by replicate so the report is independent of arrival order.
    pub fn normalize(&mut self) {
        self.values.sort_by_key(|v| v.0);
        self.failures.sort_by_key(|v| v.0);
    }

    pub fn risks(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.1).collect()
    }

    pub fn summary(&self) -> Option<Summary> {
        Summary::of(&self.risks())
    }

    pub fn median(&self) -> Option<f64> {
        self.summary().map(|s| s.median)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn summary_values() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3, s.mean), (3.0, 2.0, 4.0, 3.0));
        assert!((s.mean_log - (120f64).ln() / 5.0).abs() < 1e-15);
        assert_eq!(Summary::of(&[1.0, 2.0]).unwrap().median, 1.5);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn report_normalizes_order() {
        let echo = ConfigEcho { n: 1, m: 1, alpha: 1.0, alpha_tilde: 1.0, seed: 0, replicates: 3 };
        let mut r = RiskReport::new("x".into(), echo);
        r.push(2, Ok(0.3));
        r.push(0, Ok(0.1));
        r.push(1, Err(Error::EmptyDesign));
        r.normalize();
        assert_eq!(r.values, vec![(0, 0.1), (2, 0.3)]);
        assert_eq!(r.failures.len(), 1);
    }
}
