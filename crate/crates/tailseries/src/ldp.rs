//! Large-deviation machinery: one-sided power costs, the constrained rate
//! infimum over truncated weights, the closed-form log-tail asymptote
//! `-r^p c ||a||_q^{-p}`, comparison ratios, and the power transform that
//! maps the tail exponent of `|xi|` to that of `|xi|^k`.
//!
//! The rate infimum is computed by projected gradient descent on the convex
//! problem `min sum psi(u_j)` subject to `sum u_j x_j = z` (plus sign boxes
//! for one-sided infinite costs), warm-started from the symmetric
//! closed form. Termination is certified through the Fenchel dual: for any
//! multiplier `lambda`, `lambda z - sum psi*(lambda x_j)` is a lower bound
//! on the infimum, so the reported gap bounds `|I_hat - I|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::seqspec::SequenceSpec;

/// An i.i.d. source `|xi|` with a known tail exponent pair `(p, c)`:
/// `u^{-p} log P{|xi| >= u} -> -c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailLaw {
    /// `|xi|` for `xi ~ N(alpha, beta^2)`; exponent p = 2, c = 1/(2 beta^2).
    FoldedGaussian { alpha: f64, beta: f64 },
    /// Exponential with the given rate; p = 1, c = rate.
    Exponential { rate: f64 },
    /// Survival function exactly `exp(-c u^p)` on `u >= 0`.
    WeibullType { p: f64, c: f64 },
}

impl TailLaw {
    pub fn folded_gaussian(alpha: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "folded Gaussian needs finite alpha and beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(TailLaw::FoldedGaussian { alpha, beta })
    }

    pub fn standard_folded_gaussian() -> Self {
        TailLaw::FoldedGaussian { alpha: 0.0, beta: 1.0 }
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(TailLaw::Exponential { rate })
    }

    pub fn weibull_type(p: f64, c: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::BadExponent(format!("Weibull-type exponent must be >= 1, got {p}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("Weibull-type constant must be positive, got {c}")));
        }
        Ok(TailLaw::WeibullType { p, c })
    }

    /// The exponent pair `(p, c)` of the upper tail.
    pub fn tail_exponent(&self) -> TailExponent {
        match self {
            TailLaw::FoldedGaussian { beta, .. } => {
                TailExponent { p: 2.0, c: 1.0 / (2.0 * beta * beta) }
            }
            TailLaw::Exponential { rate } => TailExponent { p: 1.0, c: *rate },
            TailLaw::WeibullType { p, c } => TailExponent { p: *p, c: *c },
        }
    }

    /// `E |xi_1|` in closed form.
    pub fn mean_abs(&self) -> f64 {
        match self {
            TailLaw::FoldedGaussian { alpha, beta } => {
                let a = alpha.abs();
                beta * (2.0 / std::f64::consts::PI).sqrt() * (-a * a / (2.0 * beta * beta)).exp()
                    + a * (1.0 - 2.0 * gauss::phi_cdf(-a / beta))
            }
            TailLaw::Exponential { rate } => 1.0 / rate,
            TailLaw::WeibullType { p, c } => libm::tgamma(1.0 + 1.0 / p) * c.powf(-1.0 / p),
        }
    }
}

/// Tail exponent pair usable wherever a full law is not needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExponent {
    pub p: f64,
    pub c: f64,
}

impl TailExponent {
    /// Hoelder conjugate of `p`; infinity when `p = 1`.
    pub fn conjugate_q(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

/// Tail exponent of `|xi|^k`: same constant, exponent `p/k`. Errors when
/// `p/k < 1`, where the transformed variable leaves the regime the
/// asymptote covers.
pub fn power_transform(law: &TailLaw, k: f64) -> Result<TailExponent> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("power must be positive, got {k}")));
    }
    let te = law.tail_exponent();
    let p = te.p / k;
    if p < 1.0 {
        return Err(Error::BadExponent(format!(
            "transformed exponent p/k = {p} is below 1"
        )));
    }
    Ok(TailExponent { p, c: te.c })
}

/// One-sided power cost: `c1 |t|^p` for `t < 0`, `0` at `t = 0`,
/// `c2 |t|^p` for `t > 0`. Infinite costs are representable.
pub fn psi(t: f64, c1: f64, c2: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "cost exponent must be >= 1, got {p}");
    if t == 0.0 {
        0.0
    } else if t < 0.0 {
        c1 * (-t).powf(p)
    } else {
        c2 * t.powf(p)
    }
}

/// Truncated rate-infimum instance: weights `x`, costs `(c1, c2)` with
/// `min(c1, c2) < infinity`, exponent `p >= 1` and target level `z`.
/// Infinite costs appear in JSON as the string "inf".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProblem {
    pub x: Vec<f64>,
    #[serde(with = "cost_serde")]
    pub c1: f64,
    #[serde(with = "cost_serde")]
    pub c2: f64,
    pub p: f64,
    pub z: f64,
}

mod cost_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad cost value {t:?}"))),
        }
    }
}

impl RateProblem {
    pub fn new(x: Vec<f64>, c1: f64, c2: f64, p: f64, z: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 > 0.0) {
            return Err(Error::InvalidParameter(format!("costs must be positive, got ({c1}, {c2})")));
        }
        if c1.is_infinite() && c2.is_infinite() {
            return Err(Error::InvalidParameter("min(c1, c2) must be finite".into()));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::BadExponent(format!("cost exponent must be >= 1, got {p}")));
        }
        if x.iter().all(|v| *v == 0.0) || x.is_empty() {
            return Err(Error::InvalidParameter("at least one weight must be non-zero".into()));
        }
        if x.iter().any(|v| !v.is_finite()) || !z.is_finite() {
            return Err(Error::InvalidParameter("weights and level must be finite".into()));
        }
        Ok(RateProblem { x, c1, c2, p, z })
    }

    fn cost(&self, u: &[f64]) -> f64 {
        u.iter().map(|t| psi(*t, self.c1, self.c2, self.p)).sum()
    }

    fn grad(&self, u: &[f64], out: &mut [f64]) {
        for (g, t) in out.iter_mut().zip(u) {
            *g = if *t == 0.0 {
                0.0
            } else if *t < 0.0 {
                -self.c1 * self.p * (-*t).powf(self.p - 1.0)
            } else {
                self.c2 * self.p * t.powf(self.p - 1.0)
            };
        }
    }

    /// Fenchel conjugate `psi*(s)`, finite for every `s` when `p > 1`.
    fn conjugate(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let (c, a) = if s > 0.0 { (self.c2, s) } else { (self.c1, -s) };
        if c.is_infinite() {
            return 0.0;
        }
        if self.p == 1.0 {
            return if a <= c { 0.0 } else { f64::INFINITY };
        }
        let q = self.p / (self.p - 1.0);
        (self.p - 1.0) / self.p * a.powf(q) * (c * self.p).powf(-(q - 1.0))
    }

    fn dual_value(&self, lambda: f64) -> f64 {
        lambda * self.z - self.x.iter().map(|xj| self.conjugate(lambda * xj)).sum::<f64>()
    }
}

/// Result of the rate-infimum solver: `value` is within `certified_gap` of
/// the true infimum, and `minimizer` is feasible.
#[derive(Debug, Clone, Serialize)]
pub struct RateSolution {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub iterations: u64,
    pub certified_gap: f64,
}

const SOLVER_BUDGET: u64 = 10_000;

/// Computes `I(z) = inf { sum psi(u_j) : sum u_j x_j = z }` to within `tol`.
pub fn rate_infimum(prob: &RateProblem, tol: f64) -> Result<RateSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = prob.x.len();
    if prob.z == 0.0 {
        return Ok(RateSolution {
            value: 0.0,
            minimizer: vec![0.0; n],
            iterations: 0,
            certified_gap: 0.0,
        });
    }

    // Sign boxes from one-sided infinite costs.
    let lb: f64 = if prob.c1.is_infinite() { 0.0 } else { f64::NEG_INFINITY };
    let ub: f64 = if prob.c2.is_infinite() { 0.0 } else { f64::INFINITY };

    // Feasibility: some coordinate must be able to push the constraint sum
    // toward sign(z) at finite cost.
    let dir = prob.z.signum();
    let usable = prob.x.iter().any(|&xj| {
        (xj * dir > 0.0 && ub > 0.0) || (xj * dir < 0.0 && lb < 0.0)
    });
    if !usable {
        return Err(Error::Infeasible(
            "no coordinate can move the constraint toward z at finite cost".into(),
        ));
    }

    if prob.p == 1.0 {
        return Ok(rate_infimum_linear(prob, lb, ub));
    }

    // Warm start: symmetric closed form with the cheaper cost, clipped to
    // the sign boxes and projected back onto the constraint plane.
    let q = prob.p / (prob.p - 1.0);
    let denom: f64 = prob.x.iter().map(|xj| xj.abs().powf(q)).sum();
    let mut u: Vec<f64> = prob
        .x
        .iter()
        .map(|xj| (prob.z * xj.signum() * xj.abs().powf(q - 1.0) / denom).clamp(lb, ub))
        .collect();
    u = project_plane_box(&u, &prob.x, prob.z, lb, ub)?;

    let mut grad = vec![0.0; n];
    let mut value = prob.cost(&u);
    let mut best_dual = f64::NEG_INFINITY;
    let mut step = 1.0;
    let mut iterations = 0u64;

    loop {
        prob.grad(&u, &mut grad);

        // Dual lower bounds from multiplier candidates: the least-squares
        // multiplier plus each per-coordinate ratio g_j / x_j.
        let sx2: f64 = prob.x.iter().map(|v| v * v).sum();
        let lsq = grad.iter().zip(&prob.x).map(|(g, x)| g * x).sum::<f64>() / sx2;
        best_dual = best_dual.max(prob.dual_value(lsq));
        for j in 0..n {
            if prob.x[j] != 0.0 && u[j] != 0.0 {
                best_dual = best_dual.max(prob.dual_value(grad[j] / prob.x[j]));
            }
        }
        let gap = value - best_dual;
        if gap <= tol {
            return Ok(RateSolution { value, minimizer: u, iterations, certified_gap: gap.max(0.0) });
        }
        if iterations >= SOLVER_BUDGET {
            return Err(Error::Nonconverged { tol, gap, iterations });
        }

        // Projected gradient step with Armijo backtracking.
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u
                .iter()
                .zip(&grad)
                .map(|(uj, gj)| uj - step * gj)
                .collect();
            let proj = project_plane_box(&trial, &prob.x, prob.z, lb, ub)?;
            let move2: f64 = proj.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum();
            let trial_value = prob.cost(&proj);
            if trial_value <= value - 1e-4 / step * move2 {
                u = proj;
                value = trial_value;
                step *= 1.25;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Step collapsed; the point is stationary to machine precision.
            let gap = value - best_dual;
            if gap <= tol {
                return Ok(RateSolution { value, minimizer: u, iterations, certified_gap: gap.max(0.0) });
            }
            return Err(Error::Nonconverged { tol, gap, iterations });
        }
        iterations += 1;
    }
}

/// p = 1: the optimum concentrates all mass on the coordinate with the
/// cheapest cost per unit of constraint movement.
fn rate_infimum_linear(prob: &RateProblem, lb: f64, ub: f64) -> RateSolution {
    let dir = prob.z.signum();
    let mut best: Option<(usize, f64)> = None;
    for (j, &xj) in prob.x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        // Moving u_j so that u_j * x_j has the sign of z.
        let u_sign = dir * xj.signum();
        let cost_rate = if u_sign > 0.0 {
            if ub <= 0.0 { continue } else { prob.c2 / xj.abs() }
        } else if lb >= 0.0 {
            continue;
        } else {
            prob.c1 / xj.abs()
        };
        if best.map(|(_, c)| cost_rate < c).unwrap_or(true) {
            best = Some((j, cost_rate));
        }
    }
    let (j, rate) = best.expect("feasibility checked by caller");
    let mut u = vec![0.0; prob.x.len()];
    u[j] = prob.z / prob.x[j];
    RateSolution {
        value: rate * prob.z.abs(),
        minimizer: u,
        iterations: 0,
        certified_gap: 0.0,
    }
}

/// Euclidean projection onto `{u : sum u_j x_j = z, lb <= u_j <= ub}`.
/// The projection is `clip(v + t x)` for the `t` solving the constraint;
/// `t -> sum clip(v_j + t x_j) x_j` is monotone non-decreasing.
fn project_plane_box(v: &[f64], x: &[f64], z: f64, lb: f64, ub: f64) -> Result<Vec<f64>> {
    let value = |t: f64| -> f64 {
        v.iter()
            .zip(x)
            .map(|(vj, xj)| (vj + t * xj).clamp(lb, ub) * xj)
            .sum()
    };
    let mut t_lo = 0.0f64;
    let mut t_hi = 0.0f64;
    let v0 = value(0.0);
    if v0 == z {
        return Ok(v.iter().map(|vj| vj.clamp(lb, ub)).collect());
    }
    let mut span = 1.0f64;
    if v0 < z {
        loop {
            t_hi = span;
            if value(t_hi) >= z {
                break;
            }
            span *= 2.0;
            if span > 1e120 {
                return Err(Error::Infeasible("projection bracket exhausted".into()));
            }
        }
    } else {
        loop {
            t_lo = -span;
            if value(t_lo) <= z {
                break;
            }
            span *= 2.0;
            if span > 1e120 {
                return Err(Error::Infeasible("projection bracket exhausted".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (t_lo + t_hi);
        if value(mid) < z {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
        if t_hi - t_lo <= 1e-16 * (1.0 + t_hi.abs()) {
            break;
        }
    }
    let t = 0.5 * (t_lo + t_hi);
    Ok(v.iter().zip(x).map(|(vj, xj)| (vj + t * xj).clamp(lb, ub)).collect())
}

/// Rate of the half-line `[z, infinity)`: by monotonicity of `I` along each
/// sign direction this is `I(z)` for `z >= 0` and `0` otherwise (the
/// half-line then contains the free point).
pub fn half_line_rate(prob: &RateProblem, tol: f64) -> Result<RateSolution> {
    if prob.z <= 0.0 {
        return Ok(RateSolution {
            value: 0.0,
            minimizer: vec![0.0; prob.x.len()],
            iterations: 0,
            certified_gap: 0.0,
        });
    }
    rate_infimum(prob, tol)
}

/// Closed-form log-tail asymptote `-r^p c ||a||_q^{-p}` with `q` the
/// conjugate of the law's tail exponent.
pub fn log_tail_asymptote(spec: &SequenceSpec, law: &TailLaw, r: f64) -> Result<f64> {
    log_tail_asymptote_exponent(spec, law.tail_exponent(), r)
}

/// Same, from a bare exponent pair (e.g. after a power transform).
pub fn log_tail_asymptote_exponent(
    spec: &SequenceSpec,
    te: TailExponent,
    r: f64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {r}")));
    }
    let q = te.conjugate_q();
    let w = q.min(2.0);
    if !spec.power_sum_converges(w) {
        return Err(Error::HypothesisViolated(format!(
            "sum a_n^{w} must converge for the asymptote to hold"
        )));
    }
    let nq = spec.norm(q)?;
    Ok(-r.powf(te.p) * te.c * nq.powf(-te.p))
}

/// Log-level comparison ratio at a common raw threshold:
/// `(||b||_q / ||a||_q)^p`. At thresholds pre-scaled by each sequence's own
/// `||.||_q` the corresponding ratio is identically 1.
pub fn log_ratio_asymptote(a: &SequenceSpec, b: &SequenceSpec, law: &TailLaw) -> Result<f64> {
    let te = law.tail_exponent();
    let q = te.conjugate_q();
    let w = q.min(2.0);
    if !a.power_sum_converges(w) || !b.power_sum_converges(w) {
        return Err(Error::HypothesisViolated(format!(
            "sum a_n^{w} must converge for both sequences"
        )));
    }
    Ok((b.norm(q)? / a.norm(q)?).powf(te.p))
}
