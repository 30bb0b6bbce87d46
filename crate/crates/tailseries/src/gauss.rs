//! Gaussian special functions in log-space and the exact-level tail
//! evaluator for weighted series of folded Gaussians.
//!
//! The evaluator computes the logarithm of
//!
//! ```text
//! prod_n  e(a_n (r - |alpha| A) / (||a||_2^2 beta), alpha/beta)
//!       * [1 - Phi((r - |alpha| A) / (||a||_2 beta))],    A = sum_n a_n,
//! ```
//!
//! with `e(x, y) = Phi(x + |y|) + exp(-2 x |y|) Phi(x - |y|)`. The infinite
//! product becomes a log-series: a finite head plus a first-order tail
//! correction whose neglected remainder is bounded analytically, so the
//! declared tolerance is certified rather than heuristic. All probability
//! accumulation stays in log-space; `1 - Phi` at large arguments goes
//! through a Mills-ratio continued fraction instead of `erfc`, which would
//! underflow near 5e-324 already for arguments around 38.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqspec::SequenceSpec;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal density.
pub fn phi_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() * (0.398_942_280_401_432_7)
}

/// Standard normal distribution function.
pub fn phi_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Phi(x)`, accurate into the deep left tail.
pub fn log_phi(x: f64) -> f64 {
    if x >= -0.3 {
        // Phi(x) >= 0.38; ln(1 - small) keeps full precision.
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else {
        log_one_minus_phi(-x)
    }
}

/// `ln(1 - Phi(x))` without underflow, valid over the whole real line.
pub fn log_one_minus_phi(x: f64) -> f64 {
    if x <= 0.0 {
        return log_phi(-x);
    }
    if x < 8.0 {
        (0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln()
    } else {
        // 1 - Phi(x) = phi(x)/x * m(x) with m(x) = x R(x), R the Mills ratio.
        -0.5 * x * x - x.ln() - LN_SQRT_2PI + (x * mills_ratio(x)).ln()
    }
}

/// Mills ratio `R(x) = (1 - Phi(x)) / phi(x)` for `x >= 8` via the standard
/// continued fraction `1 / (x + 1/(x + 2/(x + 3/(...))))` (Lentz form).
fn mills_ratio(x: f64) -> f64 {
    debug_assert!(x >= 8.0);
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..=200 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    1.0 / f
}

/// The per-term product factor `Phi(x + |y|) + exp(-2 x |y|) Phi(x - |y|)`,
/// defined for `x >= 0`.
pub fn eps_hat(x: f64, y: f64) -> f64 {
    assert!(x >= 0.0, "eps_hat requires x >= 0, got {x}");
    let ay = y.abs();
    phi_cdf(x + ay) + (-2.0 * x * ay).exp() * phi_cdf(x - ay)
}

/// `ln eps_hat(x, y)` without overflow or underflow, for `x` up to 1e6 and
/// beyond.
pub fn log_eps_hat(x: f64, y: f64) -> f64 {
    assert!(x >= 0.0, "log_eps_hat requires x >= 0, got {x}");
    let ay = y.abs();
    let lead = log_phi(x + ay);
    // Ratio of the second summand to the first, in log form. It is at most
    // 2 exp(-2 x |y|) <= 2, so exponentiating cannot overflow.
    let t = -2.0 * x * ay + log_phi(x - ay) - lead;
    lead + t.exp().ln_1p()
}

/// First-order coefficient of `ln eps_hat(x, y)` at `x = 0`:
/// `kappa(y) = 2 (phi(y) - |y| Phi(-|y|))`; always non-negative.
pub(crate) fn eps_hat_slope(y: f64) -> f64 {
    let ay = y.abs();
    if ay >= 8.0 {
        // phi(y)(1 - y R(y)) with the cancellation evaluated via the
        // continued fraction; 1 - yR ~ 1/y^2 here.
        2.0 * phi_pdf(ay) * (1.0 - ay * mills_ratio(ay))
    } else {
        2.0 * (phi_pdf(ay) - ay * phi_cdf(-ay))
    }
}

/// Uniform bound `B(y)` with `|ln eps_hat(x, y) - kappa(y) x| <= B x^2` for
/// all `x >= 0`, from crude sup-norm bounds on the first two derivatives of
/// eps_hat and `eps_hat >= 1/2`.
pub(crate) fn eps_hat_curvature_bound(y: f64) -> f64 {
    let ay = y.abs();
    let a1 = 0.8 + 2.0 * ay;
    let a2 = 0.5 + 1.6 * ay + 4.0 * ay * ay;
    a2 + 2.0 * a1 * a1
}

/// Mean `alpha` and standard deviation `beta` of the i.i.d. Gaussian terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub alpha: f64,
    pub beta: f64,
}

impl GaussianParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Gaussian parameters need finite alpha and beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(GaussianParams { alpha, beta })
    }

    pub fn standard() -> Self {
        GaussianParams { alpha: 0.0, beta: 1.0 }
    }
}

/// How a log-probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogProbMethod {
    LifshitsAsymptotic,
    ExactSingleTerm,
    MonteCarlo,
}

/// A natural-log probability together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogProb {
    pub value: f64,
    pub method: LogProbMethod,
}

/// Exact-level log-tail of `P{sum a_n |xi_n| >= r}` for i.i.d. `N(alpha,
/// beta^2)` terms, with a certified truncation error below `tol`.
///
/// Requires `sum a_n < infinity` and `r > |alpha| sum a_n`.
pub fn lifshits_log_tail(
    spec: &SequenceSpec,
    params: &GaussianParams,
    r: f64,
    tol: f64,
) -> Result<LogProb> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {r}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let a_sum = spec.sum_pow(1.0)?;
    let sq_sum = spec.sum_pow(2.0)?;
    let floor = params.alpha.abs() * a_sum.hi;
    if r <= floor {
        return Err(Error::ThresholdTooSmall { r, floor });
    }
    let shifted = r - params.alpha.abs() * a_sum.mid();
    let u = shifted / (sq_sum.mid() * params.beta);
    let v = shifted / (sq_sum.mid().sqrt() * params.beta);
    let y = params.alpha / params.beta;

    let kappa = eps_hat_slope(y);
    let curv = eps_hat_curvature_bound(y);

    // Grow the head until the certified remainder (second-order term plus
    // the widths of the tail-sum enclosures) sits below tol.
    let mut n_head = spec.truncation_index(1e-3, 1.0)?.max(8);
    let t1 = loop {
        let t1 = spec.tail_pow(n_head, 1.0)?;
        let t2 = spec.tail_pow(n_head, 2.0)?;
        let slack = curv * u * u * t2.hi + kappa * u * t1.width();
        if slack <= tol {
            break t1;
        }
        if n_head >= 50_000_000 {
            return Err(Error::Nonconverged { tol, gap: slack, iterations: n_head });
        }
        n_head *= 2;
    };

    let mut head = 0.0;
    for n in 1..=n_head {
        let a_n = spec.term(n);
        if a_n == 0.0 {
            break; // explicit list exhausted
        }
        head += log_eps_hat(a_n * u, y);
    }
    let tail_correction = kappa * u * t1.mid();
    let value = head + tail_correction + log_one_minus_phi(v);
    Ok(LogProb { value, method: LogProbMethod::LifshitsAsymptotic })
}

/// Exact log-tail of a single weighted term, `P{w |xi| >= r}`, used as the
/// closed-form reference the asymptotic evaluator is checked against.
pub fn exact_single_term_log_tail(weight: f64, params: &GaussianParams, r: f64) -> Result<LogProb> {
    if !(weight > 0.0) {
        return Err(Error::InvalidParameter(format!("weight must be positive, got {weight}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be positive, got {r}")));
    }
    let u = r / weight;
    // P{|xi| >= u} = Phi((alpha - u)/beta) + 1 - Phi((u + alpha)/beta).
    let a = log_phi((params.alpha - u) / params.beta);
    let b = log_one_minus_phi((u + params.alpha) / params.beta);
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let value = hi + (lo - hi).exp().ln_1p();
    Ok(LogProb { value, method: LogProbMethod::ExactSingleTerm })
}

/// Matched comparison threshold `r ||a||_2 beta + |alpha| sum a_n`.
pub fn scaled_threshold(spec: &SequenceSpec, params: &GaussianParams, r: f64) -> Result<f64> {
    let l2 = spec.norm(2.0)?;
    let a_sum = spec.sum_pow(1.0)?.mid();
    Ok(r * l2 * params.beta + params.alpha.abs() * a_sum)
}

/// Matched threshold for powers `1 <= p < 2`:
/// `(r sigma_a + |alpha| sum a_n^{1/p})^p` with
/// `sigma_a = (sum a_n^{m/p})^{1/m} beta`, `m = 2p / (2 - p)`.
pub fn scaled_threshold_p(
    spec: &SequenceSpec,
    params: &GaussianParams,
    r: f64,
    p: f64,
) -> Result<f64> {
    let sigma = sigma_p(spec, params.beta, p)?;
    let shift_sum = spec.sum_pow(1.0 / p)?.mid();
    Ok((r * sigma + params.alpha.abs() * shift_sum).powf(p))
}

/// `sigma_a = (sum a_n^{m/p})^{1/m} beta` with `m = 2p/(2-p)`, for
/// `1 <= p < 2`.
pub(crate) fn sigma_p(spec: &SequenceSpec, beta: f64, p: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::BadExponent(format!("power exponent must lie in [1, 2), got {p}")));
    }
    let m = 2.0 * p / (2.0 - p);
    Ok(spec.sum_pow(m / p)?.mid().powf(1.0 / m) * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// High-precision oracle for the upper tail integral of the standard
    /// normal density: composite Gauss-Legendre over [x, 48].
    pub(crate) fn tail_quadrature(x: f64) -> f64 {
        // 20-point Gauss-Legendre nodes/weights on [-1, 1].
        const NODES: [f64; 10] = [
            0.076_526_521_133_497_32,
            0.227_785_851_141_645_07,
            0.373_706_088_715_419_56,
            0.510_867_001_950_827_1,
            0.636_053_680_726_515_1,
            0.746_331_906_460_150_8,
            0.839_116_971_822_218_8,
            0.912_234_428_251_326,
            0.963_971_927_277_913_8,
            0.993_128_599_185_094_9,
        ];
        const WEIGHTS: [f64; 10] = [
            0.152_753_387_130_725_85,
            0.149_172_986_472_603_75,
            0.142_096_109_318_382_05,
            0.131_688_638_449_176_63,
            0.118_194_531_961_518_4,
            0.101_930_119_817_240_44,
            0.083_276_741_576_704_75,
            0.062_672_048_334_109_06,
            0.040_601_429_800_386_94,
            0.017_614_007_139_152_118,
        ];
        let upper = 48.0f64.max(x + 1.0);
        let steps = (((upper - x) * 4.0).ceil() as usize).max(1);
        let h = (upper - x) / steps as f64;
        let mut total = 0.0;
        for i in (0..steps).rev() {
            let a = x + i as f64 * h;
            let mid = a + 0.5 * h;
            let half = 0.5 * h;
            let mut acc = 0.0;
            for j in 0..10 {
                acc += WEIGHTS[j] * (phi_pdf(mid - half * NODES[j]) + phi_pdf(mid + half * NODES[j]));
            }
            total += acc * half;
        }
        total
    }

    #[test]
    fn phi_at_zero_and_two() {
        assert_eq!(phi_cdf(0.0), 0.5);
        let want = 1.0 - tail_quadrature(2.0);
        assert!((phi_cdf(2.0) - want).abs() < 1e-14);
        assert!((phi_cdf(2.0) - 0.977_249_9).abs() < 1e-7);
    }

    #[test]
    fn phi_matches_quadrature_on_grid() {
        let mut x = -8.0f64;
        while x <= 8.0 {
            let oracle = if x <= 0.0 {
                tail_quadrature(-x)
            } else {
                1.0 - tail_quadrature(x)
            };
            let got = phi_cdf(x);
            assert!(
                (got - oracle).abs() <= 1e-13 * oracle,
                "x = {x}: got {got}, oracle {oracle}"
            );
            x += 0.25;
        }
    }

    #[test]
    fn log_tail_at_ten_matches_quadrature() {
        let want = tail_quadrature(10.0).ln();
        assert!((log_one_minus_phi(10.0) - want).abs() < 1e-9);
        // Continuity across the erfc / Mills switch at 8.
        for x in [7.9, 7.9999, 8.0, 8.0001, 8.5] {
            let want = tail_quadrature(x).ln();
            assert!((log_one_minus_phi(x) - want).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn log_tail_extreme_arguments() {
        // x = 40 underflows erfc; the Mills branch must stay finite and
        // match the leading asymptotics.
        let v = log_one_minus_phi(40.0);
        assert!(v.is_finite());
        let leading = -0.5 * 40.0f64 * 40.0 - (40.0f64).ln() - LN_SQRT_2PI;
        assert!((v - leading).abs() < 1e-3);
        assert!(log_one_minus_phi(1e6).is_finite());
    }

    #[test]
    fn eps_hat_trivial_cases() {
        for x in [0.0, 0.5, 3.0, 10.0] {
            assert!((eps_hat(x, 0.0) - 2.0 * phi_cdf(x)).abs() < 1e-15);
        }
        for y in [0.0, 0.3, 2.0, 25.0] {
            assert!((eps_hat(0.0, y) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eps_hat_three_one() {
        let want = phi_cdf(4.0) + (-6.0f64).exp() * phi_cdf(2.0);
        assert!((eps_hat(3.0, 1.0) - want).abs() < 1e-15);
        assert!((want - 1.002_390_7).abs() < 1e-7);
    }

    #[test]
    fn log_eps_hat_no_overflow_at_huge_x() {
        for x in [1e3, 1e5, 1e6] {
            for y in [0.0, 0.5, 3.0, 100.0] {
                let v = log_eps_hat(x, y);
                assert!(v.is_finite());
                assert!(v <= 2.0f64.ln() + 1e-12);
            }
        }
    }

    #[test]
    fn eps_hat_slope_matches_finite_difference() {
        for y in [0.0, 0.4, 1.0, 3.0, 6.0, 12.0] {
            let h = 1e-6;
            let fd = (eps_hat(h, y) - 1.0) / h;
            assert!(
                (eps_hat_slope(y) - fd).abs() < 1e-4 * (1.0 + fd.abs()),
                "y = {y}: slope {} vs fd {fd}",
                eps_hat_slope(y)
            );
        }
    }

    #[test]
    fn single_term_equals_closed_form() {
        let spec = SequenceSpec::explicit(vec![1.0]).unwrap();
        let params = GaussianParams::standard();
        for r in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let got = lifshits_log_tail(&spec, &params, r, 1e-10).unwrap().value;
            let want = (2.0f64).ln() + log_phi(r) + log_one_minus_phi(r);
            assert!((got - want).abs() < 1e-10, "r = {r}: {got} vs {want}");
        }
    }

    #[test]
    fn exact_single_term_matches_symmetric_form() {
        let params = GaussianParams::standard();
        for r in [0.5, 2.0, 6.0, 30.0] {
            // alpha = 0: P{|Z| >= r} = 2(1 - Phi(r)).
            let got = exact_single_term_log_tail(1.0, &params, r).unwrap();
            let want = (2.0f64).ln() + log_one_minus_phi(r);
            assert!((got.value - want).abs() < 1e-12, "r = {r}");
            assert_eq!(got.method, LogProbMethod::ExactSingleTerm);
        }
        // The asymptotic evaluator's relative error against the exact value
        // is 1 - Phi(r), i.e. the ratio of the two is Phi(r).
        let spec = SequenceSpec::explicit(vec![1.0]).unwrap();
        let approx = lifshits_log_tail(&spec, &params, 6.0, 1e-10).unwrap().value;
        let exact = exact_single_term_log_tail(1.0, &params, 6.0).unwrap().value;
        assert!((approx - exact - log_phi(6.0)).abs() < 1e-10);
    }

    #[test]
    fn single_term_leading_order_is_gaussian() {
        // log P{|Z| >= r} ~ -r^2/2 to leading order.
        let spec = SequenceSpec::explicit(vec![1.0]).unwrap();
        let params = GaussianParams::standard();
        let r = 100.0;
        let v = lifshits_log_tail(&spec, &params, r, 1e-8).unwrap().value;
        assert!((v / (-0.5 * r * r) - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn threshold_too_small_is_rejected() {
        let spec = SequenceSpec::explicit(vec![1.0]).unwrap();
        let params = GaussianParams::new(2.0, 1.0).unwrap();
        assert!(matches!(
            lifshits_log_tail(&spec, &params, 1.5, 1e-8),
            Err(Error::ThresholdTooSmall { .. })
        ));
    }

    #[test]
    fn tolerance_contract() {
        let spec = SequenceSpec::geometric(0.5).unwrap();
        let params = GaussianParams::standard();
        let a = lifshits_log_tail(&spec, &params, 5.0, 1e-6).unwrap().value;
        let b = lifshits_log_tail(&spec, &params, 5.0, 1e-10).unwrap().value;
        assert!((a - b).abs() <= 1e-6 + 1e-10);
    }

    #[test]
    fn scaled_threshold_examples() {
        let g = SequenceSpec::geometric(0.5).unwrap();
        let std = GaussianParams::standard();
        assert!(
            (scaled_threshold(&g, &std, 3.0).unwrap() - 3.0 / 3.0f64.sqrt()).abs() < 1e-12
        );
        let one = SequenceSpec::explicit(vec![1.0]).unwrap();
        let p = GaussianParams::new(1.0, 2.0).unwrap();
        assert!((scaled_threshold(&one, &p, 2.0).unwrap() - 5.0).abs() < 1e-12);
        let neg = GaussianParams::new(-1.0, 1.0).unwrap();
        assert!((scaled_threshold(&g, &neg, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_threshold_p_examples() {
        let one = SequenceSpec::explicit(vec![1.0]).unwrap();
        let std = GaussianParams::standard();
        // Single term, p = 3/2: sigma = 1, threshold = r^{3/2}.
        let got = scaled_threshold_p(&one, &std, 2.0, 1.5).unwrap();
        assert!((got - 2.0f64.powf(1.5)).abs() < 1e-12);

        // Geometric(1/2), p = 3/2: m = 6, sigma = (1/15)^{1/6}.
        let g = SequenceSpec::geometric(0.5).unwrap();
        let sigma = (1.0f64 / 15.0).powf(1.0 / 6.0);
        let want = (2.0 * sigma).powf(1.5);
        let got = scaled_threshold_p(&g, &std, 2.0, 1.5).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((got - 1.4370).abs() < 1e-3);

        // p = 1 reduces exactly to the linear threshold.
        let p = GaussianParams::new(0.7, 1.3).unwrap();
        let lin = scaled_threshold(&g, &p, 2.5).unwrap();
        let red = scaled_threshold_p(&g, &p, 2.5, 1.0).unwrap();
        assert!((lin - red).abs() < 1e-12);

        assert!(matches!(
            scaled_threshold_p(&g, &std, 1.0, 2.0),
            Err(Error::BadExponent(_))
        ));
    }

    proptest! {
        // exp(log_eps_hat) agrees with the direct form wherever the direct
        // form does not underflow.
        #[test]
        fn log_eps_hat_consistent(x in 0.0f64..30.0, y in -6.0f64..6.0) {
            let direct = eps_hat(x, y);
            let via_log = log_eps_hat(x, y).exp();
            prop_assert!((direct - via_log).abs() <= 1e-12 * direct);
        }

        // eps_hat lies in (0, 2] and tends to 1 for large x when y != 0.
        #[test]
        fn eps_hat_range(x in 0.0f64..50.0, y in -8.0f64..8.0) {
            let v = eps_hat(x, y);
            prop_assert!(v > 0.0 && v <= 2.0 + 1e-12);
        }

        // Replacing a_n by lambda a_n and r by lambda r leaves the evaluated
        // formula unchanged (alpha = 0).
        #[test]
        fn scale_invariance(lambda in 0.2f64..5.0, r in 2.0f64..8.0) {
            let params = GaussianParams::standard();
            let a = SequenceSpec::explicit(vec![1.0, 0.5, 0.25]).unwrap();
            let scaled = SequenceSpec::explicit(vec![lambda, 0.5 * lambda, 0.25 * lambda]).unwrap();
            let v1 = lifshits_log_tail(&a, &params, r, 1e-10).unwrap().value;
            let v2 = lifshits_log_tail(&scaled, &params, lambda * r, 1e-10).unwrap().value;
            prop_assert!((v1 - v2).abs() < 1e-9);
        }
    }

    #[test]
    fn eps_hat_tends_to_one_for_large_x() {
        for y in [0.5, 1.0, 4.0] {
            assert!((eps_hat(60.0, y) - 1.0).abs() < 1e-12);
        }
    }
}
