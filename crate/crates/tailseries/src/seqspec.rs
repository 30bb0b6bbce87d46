//! Positive weight sequences `{a_n}`: closed-form families, lq norms, tail
//! sums and truncation logic.
//!
//! Every family carries either exact closed forms (geometric, explicit) or
//! certified interval bounds (polynomial via an integral sandwich, perturbed
//! via an analytic bound on the deviation), so downstream consumers never
//! accumulate uncontrolled truncation error. Full power sums of polynomial
//! families are refined with an Euler-Maclaurin tail whose remainder is
//! bracketed by the first omitted term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Certified enclosure `[lo, hi]` of a scalar quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn point(v: f64) -> Self {
        Bounds { lo: v, hi: v }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "invalid bounds [{lo}, {hi}]");
        Bounds { lo, hi }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn offset(&self, v: f64) -> Bounds {
        Bounds::new(self.lo + v, self.hi + v)
    }
}

/// Signed multiplicative deviation attached to a perturbed family: the
/// perturbed terms are `base_n * (1 + eps_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Deviation {
    /// `eps_n = scale * (-1)^n / n`
    AlternatingHarmonic {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// `eps_n = scale / n^2`
    InverseSquare {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// Finite list; `eps_n = 0` beyond its length.
    Explicit { terms: Vec<f64> },
}

fn default_scale() -> f64 {
    1.0
}

impl Deviation {
    pub fn eps(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            Deviation::AlternatingHarmonic { scale } => {
                let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
                scale * sign / nf
            }
            Deviation::InverseSquare { scale } => scale / (nf * nf),
            Deviation::Explicit { terms } => terms.get((n - 1) as usize).copied().unwrap_or(0.0),
        }
    }

    /// `sup_{n > n0} |eps_n|`.
    pub fn sup_beyond(&self, n0: u64) -> f64 {
        let next = (n0 + 1) as f64;
        match self {
            Deviation::AlternatingHarmonic { scale } => scale.abs() / next,
            Deviation::InverseSquare { scale } => scale.abs() / (next * next),
            Deviation::Explicit { terms } => terms
                .iter()
                .skip(n0 as usize)
                .fold(0.0f64, |m, x| m.max(x.abs())),
        }
    }

    /// Smallest index `M` with `sup_beyond(M) < bound`.
    fn settles_index(&self, bound: f64) -> u64 {
        match self {
            Deviation::AlternatingHarmonic { scale } => (scale.abs() / bound).floor() as u64 + 1,
            Deviation::InverseSquare { scale } => (scale.abs() / bound).sqrt().floor() as u64 + 1,
            Deviation::Explicit { terms } => terms.len() as u64,
        }
    }

    fn validate(&self) -> Result<()> {
        let scale = match self {
            Deviation::AlternatingHarmonic { scale } | Deviation::InverseSquare { scale } => *scale,
            Deviation::Explicit { terms } => {
                for (i, x) in terms.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "deviation term {} is not finite",
                            i + 1
                        )));
                    }
                }
                return Ok(());
            }
        };
        if !scale.is_finite() {
            return Err(Error::InvalidParameter("deviation scale must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum FamilyRepr {
    Geometric {
        rho: f64,
    },
    Polynomial {
        s: f64,
        #[serde(default)]
        offset: f64,
    },
    Explicit {
        terms: Vec<f64>,
    },
    Perturbed {
        base: Box<SequenceSpec>,
        deviation: Deviation,
    },
}

/// A positive weight sequence given by a closed-form family or an explicit
/// list. Explicit lists are treated as finite sequences: terms beyond the
/// list are zero and all tail sums vanish there.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    repr: FamilyRepr,
}

impl Serialize for SequenceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SequenceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FamilyRepr::deserialize(d)?;
        SequenceSpec::from_repr(repr).map_err(serde::de::Error::custom)
    }
}

/// Default number of leading perturbed terms checked for strict positivity
/// on construction, in addition to the analytic bound on the deviation.
pub const DEFAULT_POSITIVITY_PREFIX: u64 = 1000;

/// Largest index the adaptive summation of perturbed families will visit.
const MAX_DIRECT_TERMS: u64 = 1 << 21;

impl SequenceSpec {
    pub fn geometric(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0, 1), got {rho}"
            )));
        }
        Ok(SequenceSpec { repr: FamilyRepr::Geometric { rho } })
    }

    pub fn polynomial(s: f64) -> Result<Self> {
        Self::polynomial_with_offset(s, 0.0)
    }

    pub fn polynomial_with_offset(s: f64, offset: f64) -> Result<Self> {
        if !(s > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "polynomial exponent must satisfy s > 1, got {s}"
            )));
        }
        if !(offset > -1.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "polynomial offset must satisfy offset > -1, got {offset}"
            )));
        }
        Ok(SequenceSpec { repr: FamilyRepr::Polynomial { s, offset } })
    }

    pub fn explicit(terms: Vec<f64>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("explicit list must be non-empty".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if !(t.is_finite() && *t > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "explicit term {} must be a positive real, got {t}",
                    i + 1
                )));
            }
        }
        Ok(SequenceSpec { repr: FamilyRepr::Explicit { terms } })
    }

    pub fn perturbed(base: SequenceSpec, deviation: Deviation) -> Result<Self> {
        Self::perturbed_with_prefix(base, deviation, DEFAULT_POSITIVITY_PREFIX)
    }

    /// As [`SequenceSpec::perturbed`] with an explicit positivity-check
    /// prefix: terms `1..=prefix` are scanned directly and the rest are
    /// covered by the analytic bound on the deviation.
    pub fn perturbed_with_prefix(
        base: SequenceSpec,
        deviation: Deviation,
        prefix: u64,
    ) -> Result<Self> {
        deviation.validate()?;
        for n in 1..=prefix.max(1) {
            if 1.0 + deviation.eps(n) <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "perturbed term {n} would be non-positive (eps = {})",
                    deviation.eps(n)
                )));
            }
        }
        if deviation.sup_beyond(prefix.max(1)) >= 1.0 {
            return Err(Error::InvalidParameter(
                "deviation bound beyond the checked prefix reaches 1; terms could vanish".into(),
            ));
        }
        Ok(SequenceSpec {
            repr: FamilyRepr::Perturbed { base: Box::new(base), deviation },
        })
    }

    fn from_repr(repr: FamilyRepr) -> Result<Self> {
        match repr {
            FamilyRepr::Geometric { rho } => Self::geometric(rho),
            FamilyRepr::Polynomial { s, offset } => Self::polynomial_with_offset(s, offset),
            FamilyRepr::Explicit { terms } => Self::explicit(terms),
            FamilyRepr::Perturbed { base, deviation } => Self::perturbed(*base, deviation),
        }
    }

    /// The n-th term, n >= 1. Zero beyond the end of an explicit list.
    pub fn term(&self, n: u64) -> f64 {
        assert!(n >= 1, "sequence indices start at 1");
        match &self.repr {
            FamilyRepr::Geometric { rho } => {
                if n <= i32::MAX as u64 {
                    rho.powi(n as i32)
                } else {
                    rho.powf(n as f64)
                }
            }
            FamilyRepr::Polynomial { s, offset } => (n as f64 + offset).powf(-s),
            FamilyRepr::Explicit { terms } => terms.get((n - 1) as usize).copied().unwrap_or(0.0),
            FamilyRepr::Perturbed { base, deviation } => {
                base.term(n) * (1.0 + deviation.eps(n))
            }
        }
    }

    /// `ln a_n`, computed without underflow for deep indices.
    pub fn log_term(&self, n: u64) -> f64 {
        assert!(n >= 1, "sequence indices start at 1");
        match &self.repr {
            FamilyRepr::Geometric { rho } => n as f64 * rho.ln(),
            FamilyRepr::Polynomial { s, offset } => -s * (n as f64 + offset).ln(),
            FamilyRepr::Explicit { terms } => terms
                .get((n - 1) as usize)
                .map(|t| t.ln())
                .unwrap_or(f64::NEG_INFINITY),
            FamilyRepr::Perturbed { base, deviation } => {
                base.log_term(n) + (deviation.eps(n)).ln_1p()
            }
        }
    }

    /// Number of terms of an explicit list; `None` for infinite families.
    pub fn explicit_len(&self) -> Option<u64> {
        match &self.repr {
            FamilyRepr::Explicit { terms } => Some(terms.len() as u64),
            _ => None,
        }
    }

    pub(crate) fn deviation_of_base(&self) -> Option<(&SequenceSpec, &Deviation)> {
        match &self.repr {
            FamilyRepr::Perturbed { base, deviation } => Some((base, deviation)),
            _ => None,
        }
    }

    pub(crate) fn geometric_ratio(&self) -> Option<f64> {
        match &self.repr {
            FamilyRepr::Geometric { rho } => Some(*rho),
            _ => None,
        }
    }

    /// Whether `sum a_n^w` converges, decided analytically.
    pub(crate) fn power_sum_converges(&self, w: f64) -> bool {
        match &self.repr {
            FamilyRepr::Geometric { .. } | FamilyRepr::Explicit { .. } => true,
            FamilyRepr::Polynomial { s, .. } => s * w > 1.0,
            FamilyRepr::Perturbed { base, .. } => base.power_sum_converges(w),
        }
    }

    /// Certified bounds on `sum_{n>=1} a_n^w`.
    pub(crate) fn sum_pow(&self, w: f64) -> Result<Bounds> {
        check_power(w)?;
        match &self.repr {
            FamilyRepr::Geometric { rho } => {
                let x = rho.powf(w);
                Ok(Bounds::point(x / (1.0 - x)))
            }
            FamilyRepr::Polynomial { s, offset } => {
                let t = s * w;
                if t <= 1.0 {
                    return Err(Error::DivergentNorm(format!(
                        "sum of (n + {offset})^(-{t}) diverges (exponent <= 1)"
                    )));
                }
                let head: f64 = (1..=POLY_HEAD).map(|n| (n as f64 + offset).powf(-t)).sum();
                Ok(euler_maclaurin_tail(POLY_HEAD, t, *offset).offset(head))
            }
            FamilyRepr::Explicit { terms } => {
                Ok(Bounds::point(terms.iter().map(|a| a.powf(w)).sum()))
            }
            FamilyRepr::Perturbed { .. } => {
                let mut m: u64 = 1024;
                let mut partial: f64 = (1..=m).map(|n| self.term(n).powf(w)).sum();
                loop {
                    let b = self.perturbed_tail_bounds(m, w)?.offset(partial);
                    if b.width() <= 1e-12 * b.mid().abs() || m >= MAX_DIRECT_TERMS {
                        return Ok(b);
                    }
                    partial += ((m + 1)..=(2 * m)).map(|n| self.term(n).powf(w)).sum::<f64>();
                    m *= 2;
                }
            }
        }
    }

    /// Certified bounds on `sum_{n>N} a_n^w`.
    pub(crate) fn tail_pow(&self, n_trunc: u64, w: f64) -> Result<Bounds> {
        check_power(w)?;
        match &self.repr {
            FamilyRepr::Geometric { rho } => {
                let x = rho.powf(w);
                let tail = (w * (n_trunc + 1) as f64 * rho.ln()).exp() / (1.0 - x);
                Ok(Bounds::point(tail))
            }
            FamilyRepr::Polynomial { s, offset } => {
                let t = s * w;
                if t <= 1.0 {
                    return Err(Error::DivergentNorm(format!(
                        "tail of (n + {offset})^(-{t}) diverges (exponent <= 1)"
                    )));
                }
                if n_trunc == 0 {
                    return self.sum_pow(w);
                }
                // Integral sandwich for the decreasing integrand x^(-t).
                let lo = (n_trunc as f64 + 1.0 + offset).powf(1.0 - t) / (t - 1.0);
                let hi = (n_trunc as f64 + offset).powf(1.0 - t) / (t - 1.0);
                Ok(Bounds::new(lo, hi))
            }
            FamilyRepr::Explicit { terms } => {
                let tail: f64 = terms
                    .iter()
                    .skip(n_trunc as usize)
                    .map(|a| a.powf(w))
                    .sum();
                Ok(Bounds::point(tail))
            }
            FamilyRepr::Perturbed { .. } => self.perturbed_tail_bounds(n_trunc, w),
        }
    }

    fn perturbed_tail_bounds(&self, n_trunc: u64, w: f64) -> Result<Bounds> {
        let (base, dev) = self.deviation_of_base().expect("perturbed family");
        // Move past indices where the deviation is too large for the
        // multiplicative bound to be useful, summing those terms directly.
        let settled = dev.settles_index(0.5).max(n_trunc);
        let direct: f64 = ((n_trunc + 1)..=settled).map(|n| self.term(n).powf(w)).sum();
        let delta = dev.sup_beyond(settled);
        let base_tail = base.tail_pow(settled, w)?;
        let lo = base_tail.lo * (1.0 - delta).powf(w);
        let hi = base_tail.hi * (1.0 + delta).powf(w);
        Ok(Bounds::new(lo, hi).offset(direct))
    }

    /// Conservative tail sum: the certified upper bound on `sum_{n>N} a_n^w`.
    pub fn tail_sum(&self, n_trunc: u64, w: f64) -> Result<f64> {
        Ok(self.tail_pow(n_trunc, w)?.hi)
    }

    /// The lq norm, `q` in `[1, inf]`; pass `f64::INFINITY` for the sup norm.
    pub fn norm(&self, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidParameter(format!("norm order must be >= 1, got {q}")));
        }
        if q.is_infinite() {
            return self.norm_inf();
        }
        Ok(self.sum_pow(q)?.mid().powf(1.0 / q))
    }

    fn norm_inf(&self) -> Result<f64> {
        match &self.repr {
            FamilyRepr::Geometric { rho } => Ok(*rho),
            FamilyRepr::Polynomial { s, offset } => Ok((1.0 + offset).powf(-s)),
            FamilyRepr::Explicit { terms } => {
                Ok(terms.iter().fold(f64::MIN, |m, t| m.max(*t)))
            }
            FamilyRepr::Perturbed { base, deviation } => {
                let mut k = deviation.settles_index(0.01).max(64);
                loop {
                    let max_prefix =
                        (1..=k).map(|n| self.term(n)).fold(f64::MIN, f64::max);
                    let beyond = base.sup_beyond(k)? * (1.0 + deviation.sup_beyond(k));
                    if beyond <= max_prefix {
                        return Ok(max_prefix);
                    }
                    if k >= MAX_DIRECT_TERMS {
                        return Ok(max_prefix.max(beyond));
                    }
                    k *= 2;
                }
            }
        }
    }

    /// Upper bound on `sup_{n>N} a_n`.
    fn sup_beyond(&self, n0: u64) -> Result<f64> {
        match &self.repr {
            FamilyRepr::Geometric { .. } | FamilyRepr::Polynomial { .. } => Ok(self.term(n0 + 1)),
            FamilyRepr::Explicit { terms } => Ok(terms
                .iter()
                .skip(n0 as usize)
                .fold(0.0f64, |m, t| m.max(*t))),
            FamilyRepr::Perturbed { base, deviation } => {
                Ok(base.sup_beyond(n0)? * (1.0 + deviation.sup_beyond(n0)))
            }
        }
    }

    /// Smallest `N` whose certified tail bound satisfies
    /// `tail_sum(N, w) <= tol * sum_pow(w)`. Explicit lists return their
    /// length: truncating a finite list buys nothing.
    pub fn truncation_index(&self, tol: f64, w: f64) -> Result<u64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
        }
        if let FamilyRepr::Explicit { terms } = &self.repr {
            check_power(w)?;
            return Ok(terms.len() as u64);
        }
        let target = tol * self.sum_pow(w)?.mid();
        if self.tail_pow(0, w)?.hi <= target {
            return Ok(0);
        }
        let mut hi: u64 = 1;
        while self.tail_pow(hi, w)?.hi > target {
            hi *= 2;
            if hi > 1_000_000_000 {
                return Err(Error::Nonconverged {
                    tol,
                    gap: self.tail_pow(hi / 2, w)?.hi / target,
                    iterations: hi,
                });
            }
        }
        let mut lo = hi / 2; // tail(lo) > target, tail(hi) <= target
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_pow(mid, w)?.hi <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Checks `a_n >= a_{n+1}` over the given horizon. For geometric and
    /// polynomial families the verdict is analytic (monotone at every index);
    /// explicit and perturbed families get a prefix-only verdict.
    pub fn is_nonincreasing(&self, horizon: u64) -> MonotonicityReport {
        assert!(horizon >= 2, "monotonicity horizon must be at least 2");
        match &self.repr {
            FamilyRepr::Geometric { .. } | FamilyRepr::Polynomial { .. } => {
                MonotonicityReport { nonincreasing: true, analytic: true }
            }
            FamilyRepr::Explicit { terms } => {
                let ok = terms.windows(2).all(|w| w[0] >= w[1]);
                MonotonicityReport { nonincreasing: ok, analytic: false }
            }
            FamilyRepr::Perturbed { .. } => {
                let ok = (1..horizon).all(|n| self.term(n) >= self.term(n + 1));
                MonotonicityReport { nonincreasing: ok, analytic: false }
            }
        }
    }
}

/// Verdict of [`SequenceSpec::is_nonincreasing`]. `analytic = false` means
/// the check covered only the scanned prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonotonicityReport {
    pub nonincreasing: bool,
    pub analytic: bool,
}

/// A norm/power-sum query: `q` in `[1, inf]`, `power > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormQuery {
    pub q: f64,
    pub power: f64,
}

impl NormQuery {
    pub fn new(q: f64, power: f64) -> Result<Self> {
        if q.is_nan() || q < 1.0 {
            return Err(Error::InvalidParameter(format!("norm order must be >= 1, got {q}")));
        }
        if !(power > 0.0) {
            return Err(Error::InvalidParameter(format!("power must be positive, got {power}")));
        }
        Ok(NormQuery { q, power })
    }

    pub fn norm(&self, spec: &SequenceSpec) -> Result<f64> {
        spec.norm(self.q)
    }

    pub fn power_sum(&self, spec: &SequenceSpec) -> Result<f64> {
        Ok(spec.sum_pow(self.power)?.mid())
    }
}

fn check_power(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter(format!("power must be a positive real, got {w}")));
    }
    Ok(())
}

/// Terms kept before switching to the Euler-Maclaurin tail of a polynomial
/// power sum.
const POLY_HEAD: u64 = 1000;

/// Euler-Maclaurin bounds for `sum_{n > m} (n + offset)^(-t)`, `t > 1`.
///
/// With `a = m + 1` and `f(x) = (x + offset)^(-t)` (completely monotone),
/// `sum_{n>=a} f(n) = I + f(a)/2 - f'(a)/12 + f'''(a)/720 - R` where the
/// remainder `R` has the sign of, and is bounded by, the next term.
fn euler_maclaurin_tail(m: u64, t: f64, offset: f64) -> Bounds {
    let a = m as f64 + 1.0 + offset;
    let integral = a.powf(1.0 - t) / (t - 1.0);
    let f0 = a.powf(-t);
    let d1 = t * a.powf(-t - 1.0);
    let d3 = t * (t + 1.0) * (t + 2.0) * a.powf(-t - 3.0);
    let d5 = t * (t + 1.0) * (t + 2.0) * (t + 3.0) * (t + 4.0) * a.powf(-t - 5.0);
    let est = integral + 0.5 * f0 + d1 / 12.0 - d3 / 720.0;
    let rem = d5 / 30240.0;
    Bounds::new(est - rem, est + rem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo(rho: f64) -> SequenceSpec {
        SequenceSpec::geometric(rho).unwrap()
    }

    #[test]
    fn geometric_terms() {
        let a = geo(0.5);
        assert_eq!(a.term(3), 0.125);
        assert_eq!(a.term(1), 0.5);
    }

    #[test]
    fn polynomial_terms() {
        let a = SequenceSpec::polynomial(2.0).unwrap();
        assert_eq!(a.term(2), 0.25);
        assert_eq!(a.term(1), 1.0);
    }

    #[test]
    fn explicit_terms_and_lookup_past_end() {
        let a = SequenceSpec::explicit(vec![1.0, 0.5]).unwrap();
        assert_eq!(a.term(2), 0.5);
        assert_eq!(a.term(3), 0.0);
    }

    #[test]
    fn geometric_l2_norm() {
        let a = geo(0.5);
        assert!((a.norm(2.0).unwrap() - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.norm(f64::INFINITY).unwrap(), 0.5);
    }

    #[test]
    fn basel_sum() {
        let a = SequenceSpec::polynomial(2.0).unwrap();
        let sum = a.sum_pow(1.0).unwrap();
        let basel = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        assert!((sum.mid() - basel).abs() < 1e-12, "got {}, want {basel}", sum.mid());
        assert!((a.norm(1.0).unwrap() - basel).abs() < 1e-12);
    }

    #[test]
    fn geometric_tail_sum() {
        let a = geo(0.5);
        assert!((a.tail_sum(3, 1.0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn explicit_tail_is_zero_past_end() {
        let a = SequenceSpec::explicit(vec![1.0, 0.5]).unwrap();
        assert_eq!(a.tail_sum(5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_tail_sandwich() {
        let a = SequenceSpec::polynomial(2.0).unwrap();
        let b = a.tail_pow(10, 1.0).unwrap();
        assert!(b.lo >= 1.0 / 11.0 - 1e-15 && b.hi <= 1.0 / 10.0 + 1e-15);
        assert!((b.hi - 0.1).abs() < 1e-15);
    }

    #[test]
    fn truncation_index_geometric() {
        let a = geo(0.5);
        assert_eq!(a.truncation_index(1e-6, 1.0).unwrap(), 20);
    }

    #[test]
    fn truncation_index_explicit_is_length() {
        let a = SequenceSpec::explicit(vec![1.0; 7]).unwrap();
        assert_eq!(a.truncation_index(0.5, 1.0).unwrap(), 7);
        assert_eq!(a.truncation_index(1e-12, 1.0).unwrap(), 7);
    }

    // Independent route: confirm the integral-bound index against direct
    // partial summation of the series.
    #[test]
    fn truncation_index_polynomial_confirmed_by_partial_sums() {
        let a = SequenceSpec::polynomial(2.0).unwrap();
        let n = a.truncation_index(1e-3, 1.0).unwrap();
        assert_eq!(n, 608);
        let full = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        let partial: f64 = (1..=n).map(|k| 1.0 / (k as f64 * k as f64)).sum();
        let true_tail = full - partial;
        // The certified bound must enclose the true tail and meet the target.
        assert!(true_tail <= a.tail_sum(n, 1.0).unwrap());
        assert!(a.tail_sum(n, 1.0).unwrap() <= 1e-3 * full * (1.0 + 1e-12));
        assert!(a.tail_sum(n - 1, 1.0).unwrap() > 1e-3 * full);
    }

    #[test]
    fn monotonicity_verdicts() {
        assert_eq!(
            geo(0.5).is_nonincreasing(100),
            MonotonicityReport { nonincreasing: true, analytic: true }
        );
        let e = SequenceSpec::explicit(vec![0.5, 0.6]).unwrap();
        assert_eq!(
            e.is_nonincreasing(2),
            MonotonicityReport { nonincreasing: false, analytic: false }
        );
    }

    // Consecutive-ratio route: a_{n+1}/a_n = rho * (1 + eps_{n+1})/(1 + eps_n)
    // with eps_n = n^{-2} stays below 1 because the deviation factor is at
    // most (1 + 1/(n+1)^2) <= 5/4 < 1/rho = 2; checked over a 10^4 prefix.
    #[test]
    fn perturbed_inverse_square_is_nonincreasing() {
        let base = geo(0.5);
        let a = SequenceSpec::perturbed(base, Deviation::InverseSquare { scale: 1.0 }).unwrap();
        for n in 1..10_000u64 {
            let ratio = 0.5 * (1.0 + 1.0 / ((n + 1) * (n + 1)) as f64)
                / (1.0 + 1.0 / (n * n) as f64);
            assert!(ratio < 1.0);
        }
        let rep = a.is_nonincreasing(10_000);
        assert!(rep.nonincreasing);
        assert!(!rep.analytic);
    }

    #[test]
    fn perturbed_positivity_is_enforced() {
        let base = geo(0.5);
        let r = SequenceSpec::perturbed(base, Deviation::AlternatingHarmonic { scale: 1.5 });
        assert!(r.is_err());
    }

    #[test]
    fn divergent_norm_is_reported() {
        let a = SequenceSpec::polynomial(1.5).unwrap();
        // q = 0.5 is rejected outright, and s*q <= 1 diverges.
        assert!(matches!(a.norm(0.5), Err(Error::InvalidParameter(_))));
        assert!(matches!(a.sum_pow(0.5), Err(Error::DivergentNorm(_))));
    }

    #[test]
    fn perturbed_sum_matches_direct_summation() {
        let base = geo(0.5);
        let a = SequenceSpec::perturbed(base, Deviation::InverseSquare { scale: 1.0 }).unwrap();
        let direct: f64 = (1..200u64).map(|n| a.term(n)).sum();
        let b = a.sum_pow(1.0).unwrap();
        assert!((b.mid() - direct).abs() < 1e-9, "mid {} direct {direct}", b.mid());
        assert!(b.lo <= direct + 1e-12 && direct <= b.hi + 1e-12);
    }

    #[test]
    fn norm_query_validation() {
        assert!(NormQuery::new(0.5, 1.0).is_err());
        assert!(NormQuery::new(2.0, 0.0).is_err());
        let q = NormQuery::new(f64::INFINITY, 1.0).unwrap();
        assert_eq!(q.norm(&geo(0.5)).unwrap(), 0.5);
    }

    proptest! {
        // norm^q lies inside partial sum + certified tail bounds, for all N.
        #[test]
        fn norm_consistent_with_partial_plus_tail(
            rho in 0.05f64..0.95,
            q in 1.0f64..4.0,
            n in 0u64..40,
        ) {
            let a = geo(rho);
            let norm_q = a.norm(q).unwrap().powf(q);
            let partial: f64 = (1..=n).map(|k| a.term(k).powf(q)).sum();
            let tail = a.tail_pow(n, q).unwrap();
            let slack = 1e-9 * norm_q.max(1.0);
            prop_assert!(partial + tail.lo - slack <= norm_q);
            prop_assert!(norm_q <= partial + tail.hi + slack);
        }

        #[test]
        fn truncation_index_monotone_in_tol(
            rho in 0.1f64..0.9,
            exp_a in -8i32..-1,
            exp_b in -8i32..-1,
        ) {
            let a = geo(rho);
            let (t1, t2) = (10f64.powi(exp_a), 10f64.powi(exp_b));
            let (n1, n2) = (
                a.truncation_index(t1, 1.0).unwrap(),
                a.truncation_index(t2, 1.0).unwrap(),
            );
            if t1 <= t2 {
                prop_assert!(n1 >= n2);
            } else {
                prop_assert!(n1 <= n2);
            }
        }

        // Closed form: geometric lq norm is rho * (1 - rho^q)^(-1/q).
        #[test]
        fn geometric_norm_closed_form(rho in 0.05f64..0.95, q in 1.0f64..6.0) {
            let a = geo(rho);
            let want = rho * (1.0 - rho.powf(q)).powf(-1.0 / q);
            let got = a.norm(q).unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * want);
        }
    }
}
