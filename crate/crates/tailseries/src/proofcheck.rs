//! Falsification harnesses for the three inequalities the comparison proofs
//! lean on: the weighted-sum bound through a bounded-variation function, the
//! Bernoulli-type bound `1 + a d <= (1 + d)^a` for `a <= 0`, and its
//! two-sided relative `1 + a d + g <= (1 + d)^a (1 + d^2)(1 + g)^2`.
//!
//! These are grid checks, not proofs: a pass means "no counterexample found
//! on this grid", and every grid and tolerance is explicit.

use serde::Serialize;

use crate::error::{Error, Result};

/// Numerical slack granted to both sides of each inequality.
pub const SLACK: f64 = 1e-12;

/// A piecewise-linear function on [0, inf): linear between nodes, constant
/// beyond the last one, so its total variation is finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("need at least two nodes".into()));
        }
        if nodes[0].0 < 0.0 {
            return Err(Error::InvalidParameter("domain starts at 0".into()));
        }
        if nodes.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidParameter("breakpoints must increase strictly".into()));
        }
        let (xs, ys) = nodes.into_iter().unzip();
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.ys.last().unwrap();
        }
        let i = self.xs.partition_point(|v| *v <= x) - 1;
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    /// Sum of absolute segment rises.
    pub fn total_variation(&self) -> f64 {
        self.ys.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.ys.iter().fold(0.0f64, |m, y| m.max(y.abs()))
    }
}

/// Outcome of the weighted-sum bound check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightedTailOutcome {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Checks `|sum_{n>=N} c_n g(d_n)| <= (D + sup|g|) sup_{k>=N} |sum_{n=N}^k c_n|`
/// on finite data, with `d` monotone and non-negative. `n_start` is 1-based.
pub fn check_weighted_tail_bound(
    c: &[f64],
    g: &PiecewiseLinear,
    d: &[f64],
    n_start: usize,
) -> Result<WeightedTailOutcome> {
    if c.len() != d.len() {
        return Err(Error::InvalidParameter("c and d must have equal length".into()));
    }
    if n_start < 1 || n_start > c.len() {
        return Err(Error::InvalidParameter(format!(
            "start index {n_start} outside 1..={}",
            c.len()
        )));
    }
    let nondecr = d.windows(2).all(|w| w[0] <= w[1]);
    let nonincr = d.windows(2).all(|w| w[0] >= w[1]);
    if !(nondecr || nonincr) || d.iter().any(|v| *v < 0.0) {
        return Err(Error::NotMonotone("d must be monotone and non-negative".into()));
    }

    let from = n_start - 1;
    let lhs: f64 = c[from..]
        .iter()
        .zip(&d[from..])
        .map(|(cn, dn)| cn * g.eval(*dn))
        .sum::<f64>()
        .abs();
    let mut partial = 0.0f64;
    let mut sup_partial = 0.0f64;
    for cn in &c[from..] {
        partial += cn;
        sup_partial = sup_partial.max(partial.abs());
    }
    let rhs = (g.total_variation() + g.sup_abs()) * sup_partial;
    Ok(WeightedTailOutcome { holds: lhs <= rhs + SLACK, lhs, rhs, slack: rhs - lhs })
}

/// A grid point violating an inequality, with the observed gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Violation {
    pub a: f64,
    pub delta: f64,
    pub gamma: f64,
    pub gap: f64,
}

/// Default grid for the one-sided Bernoulli bound: a in [-10, 0] step 0.1.
pub fn default_a_grid() -> Vec<f64> {
    (0..=100).map(|i| -10.0 + 0.1 * i as f64).collect()
}

/// Default delta grid: [-0.05, 0.05] step 1e-3.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=100).map(|i| -0.05 + 1e-3 * i as f64).collect()
}

/// Checks `1 + a d <= (1 + d)^a` for every pair on the grids (`a <= 0`,
/// `d > -1`). Returns the violations found.
pub fn check_bernoulli_bound(a_grid: &[f64], delta_grid: &[f64]) -> Vec<Violation> {
    let mut violations = Vec::new();
    for &a in a_grid {
        for &d in delta_grid {
            if d <= -1.0 {
                continue;
            }
            let lhs = 1.0 + a * d;
            let rhs = (a * d.ln_1p()).exp();
            if lhs > rhs + SLACK {
                violations.push(Violation { a, delta: d, gamma: 0.0, gap: lhs - rhs });
            }
        }
    }
    violations
}

/// Result of the two-sided bound search: the largest delta radius on the
/// grid for which no counterexample exists, and the first binding point
/// just beyond it.
#[derive(Debug, Clone, Serialize)]
pub struct TwoSidedOutcome {
    pub lambda_hat: f64,
    pub binding: Option<Violation>,
}

/// Default gamma grid spanning small to large positive values.
pub fn default_gamma_grid() -> Vec<f64> {
    vec![1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 10.0]
}

/// Grid for `a` given the sigma bound: [-sigma, sigma] in 201 steps.
pub fn symmetric_a_grid(sigma: f64) -> Vec<f64> {
    (0..=200).map(|i| -sigma + sigma * i as f64 / 100.0).collect()
}

/// Finds the largest `lambda <= 1/2` such that
/// `1 + a d + g <= (1 + d)^a (1 + d^2)(1 + g)^2` holds at every grid point
/// with `|a| <= sigma` and `|d| <= lambda`. Scanning the delta grid sorted
/// by |d| is exact on a finite grid (equivalent to bisection on it).
pub fn check_two_sided_bound(
    sigma: f64,
    a_grid: &[f64],
    delta_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<TwoSidedOutcome> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let mut deltas: Vec<f64> = delta_grid
        .iter()
        .copied()
        .filter(|d| d.abs() <= 0.5 && *d > -1.0)
        .collect();
    deltas.sort_by(|x, y| x.abs().total_cmp(&y.abs()));

    // lambda_hat trails by one |delta| group so that a failure at +d after a
    // pass at -d (same radius) does not count the radius as valid.
    let mut lambda_hat = 0.0f64;
    let mut group_abs = 0.0f64;
    for &d in &deltas {
        if d.abs() > group_abs {
            lambda_hat = group_abs;
            group_abs = d.abs();
        }
        for &a in a_grid.iter().filter(|a| a.abs() <= sigma) {
            for &g in gamma_grid.iter().filter(|g| **g > 0.0) {
                let lhs = 1.0 + a * d + g;
                let rhs = (a * d.ln_1p()).exp() * (1.0 + d * d) * (1.0 + g) * (1.0 + g);
                if lhs > rhs + SLACK {
                    if lambda_hat == 0.0 {
                        return Err(Error::NoValidLambda(format!(
                            "violated already at |delta| = {}",
                            d.abs()
                        )));
                    }
                    return Ok(TwoSidedOutcome {
                        lambda_hat,
                        binding: Some(Violation { a, delta: d, gamma: g, gap: lhs - rhs }),
                    });
                }
            }
        }
    }
    Ok(TwoSidedOutcome { lambda_hat: group_abs, binding: None })
}
