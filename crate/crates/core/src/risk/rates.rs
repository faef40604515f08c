use crate::error::{Error, Result};
use crate::math;

/// Point in the continuous `(n, m)` design space with unit costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuery {
    pub n: f64,
    pub m: f64,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub cost_n: f64,
    pub cost_m: f64,
}

impl RateQuery {
    pub fn new(n: f64, m: f64, alpha: f64, alpha_tilde: f64) -> Result<Self> {
        RateQuery { n, m, alpha, alpha_tilde, cost_n: 1.0, cost_m: 1.0 }.validated()
    }

    pub fn with_costs(mut self, cost_n: f64, cost_m: f64) -> Result<Self> {
        self.cost_n = cost_n;
        self.cost_m = cost_m;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        let all = [self.n, self.m, self.alpha, self.alpha_tilde, self.cost_n, self.cost_m];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::domain("rate query fields must be positive and finite"));
        }
        Ok(self)
    }

    /// `log m / log n`, defined for `n > 1`.
    pub fn delta(&self) -> Option<f64> {
        (self.n > 1.0).then(|| math::ln(self.m) / math::ln(self.n))
    }
}

fn exponent(a: f64) -> f64 {
    2.0 * a / (1.0 + 2.0 * a)
}

/// `m⁻¹ + (nm)^{−2α/(1+2α)}`.
pub fn rate_g(q: &RateQuery) -> f64 {
    1.0 / q.m + math::powf(q.n * q.m, -exponent(q.alpha))
}

/// `n^{−2α̃/(1+2α̃)} + (nm)^{−2α/(1+2α)}`.
pub fn rate_f(q: &RateQuery) -> f64 {
    math::powf(q.n, -exponent(q.alpha_tilde)) + math::powf(q.n * q.m, -exponent(q.alpha))
}

/// Rate of the best single-subject procedure, `n^{−2(α∧α̃)/(1+2(α∧α̃))}`.
pub fn rate_single_subject(q: &RateQuery) -> f64 {
    math::powf(q.n, -exponent(q.alpha.min(q.alpha_tilde)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    G,
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    N,
    M,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::M => "m",
        }
    }
}

/// Cost-weighted partial derivatives of a rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateGradient {
    /// `∂rate/∂n / cost_n`.
    pub d_n: f64,
    /// `∂rate/∂m / cost_m`.
    pub d_m: f64,
    pub steeper: Axis,
}

/// Analytic gradient; the steeper axis is `n` iff `|d_n| > |d_m|`.
pub fn rate_gradient(q: &RateQuery, target: Target) -> RateGradient {
    let p = exponent(q.alpha);
    let pooled = math::powf(q.n * q.m, -p);
    let (dn, dm) = match target {
        Target::G => (-p * pooled / q.n, -1.0 / (q.m * q.m) - p * pooled / q.m),
        Target::F => {
            let r = exponent(q.alpha_tilde);
            (-r * math::powf(q.n, -r - 1.0) - p * pooled / q.n, -p * pooled / q.m)
        }
    };
    let (d_n, d_m) = (dn / q.cost_n, dm / q.cost_m);
    let steeper = if d_n.abs() > d_m.abs() { Axis::N } else { Axis::M };
    RateGradient { d_n, d_m, steeper }
}
