//! Numerical checkers for the comparison hypotheses: convergence of the
//! products `prod (2 - rho_n)`, of the series `sum (1 - rho_n)` and its
//! squares, of the absolute power-threshold deviation, and the four-way
//! product/series relations used to connect them.
//!
//! Numerical convergence detection is undecidable, so every checker returns
//! a three-valued verdict and takes an analytic fast path whenever the
//! deviation has a recognized closed form. Heuristic verdicts are never
//! promoted to analytic ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss;
use crate::seqspec::SequenceSpec;

/// Default number of terms examined by the windowed heuristic.
pub const DEFAULT_HORIZON: u64 = 1_000_000;
/// Default trailing window over which oscillation and drift are measured.
pub const DEFAULT_WINDOW: u64 = 1_000;
/// Default oscillation threshold.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Shared knobs for the windowed Cauchy heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub horizon: u64,
    pub window: u64,
    pub eps: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { horizon: DEFAULT_HORIZON, window: DEFAULT_WINDOW, eps: DEFAULT_EPS }
    }
}

impl CheckOptions {
    fn validate(&self) -> Result<()> {
        if self.window < 2 || self.horizon < 2 * self.window {
            return Err(Error::InvalidParameter(format!(
                "need horizon >= 2*window >= 4, got horizon {} window {}",
                self.horizon, self.window
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        Ok(())
    }
}

/// A deviation sequence in closed form, used both for direct condition
/// checks and as the analytic catalogue behind the fast path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviationForm {
    Zero,
    /// `coeff * n^{-s}`
    PowerLaw { coeff: f64, s: f64 },
    /// `coeff * (-1)^n * n^{-s}`
    AlternatingPowerLaw { coeff: f64, s: f64 },
    /// Finite list, zero beyond its length.
    Explicit { terms: Vec<f64> },
}

impl DeviationForm {
    pub fn alternating_harmonic() -> Self {
        DeviationForm::AlternatingPowerLaw { coeff: 1.0, s: 1.0 }
    }

    pub fn value(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            DeviationForm::Zero => 0.0,
            DeviationForm::PowerLaw { coeff, s } => coeff * nf.powf(-s),
            DeviationForm::AlternatingPowerLaw { coeff, s } => {
                let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
                coeff * sign * nf.powf(-s)
            }
            DeviationForm::Explicit { terms } => {
                terms.get((n - 1) as usize).copied().unwrap_or(0.0)
            }
        }
    }

    fn is_trivially_zero(&self) -> bool {
        match self {
            DeviationForm::Zero => true,
            DeviationForm::PowerLaw { coeff, .. }
            | DeviationForm::AlternatingPowerLaw { coeff, .. } => *coeff == 0.0,
            DeviationForm::Explicit { terms } => terms.iter().all(|x| *x == 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converges,
    Diverges,
    Inconclusive,
}

/// Trajectory statistics backing a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Terms examined.
    pub horizon: u64,
    pub window: u64,
    /// max - min of the partial sums over the trailing window.
    pub oscillation: f64,
    /// Signed change of the partial sums across the trailing window.
    pub drift: f64,
    pub last_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub status: Status,
    pub evidence: Evidence,
    /// Closed-form justification tag; analytic verdicts are never
    /// inconclusive.
    pub analytic: Option<String>,
}

impl ConvergenceVerdict {
    fn analytic(status: Status, tag: &str, evidence: Evidence) -> Self {
        debug_assert!(status != Status::Inconclusive);
        ConvergenceVerdict { status, evidence, analytic: Some(tag.to_string()) }
    }

    fn heuristic(status: Status, evidence: Evidence) -> Self {
        ConvergenceVerdict { status, evidence, analytic: None }
    }

    pub fn converges(&self) -> bool {
        self.status == Status::Converges
    }
}

/// Windowed Cauchy heuristic on a partial-sum trajectory: converges when the
/// trailing window oscillates below eps, diverges when the trajectory drifts
/// monotonically beyond eps * window, inconclusive otherwise.
fn window_verdict(partial_sums: impl Iterator<Item = f64>, opts: &CheckOptions) -> ConvergenceVerdict {
    let window = opts.window as usize;
    let mut ring: Vec<f64> = Vec::with_capacity(window);
    let mut pos = 0usize;
    let mut count: u64 = 0;
    let mut last = 0.0f64;
    let mut monotone_up = true;
    let mut monotone_down = true;
    let mut prev_in_window: Option<f64> = None;

    for s in partial_sums {
        count += 1;
        last = s;
        if !s.is_finite() {
            // Runaway partial sums settle it immediately.
            return ConvergenceVerdict::heuristic(
                Status::Diverges,
                Evidence {
                    horizon: count,
                    window: opts.window,
                    oscillation: f64::INFINITY,
                    drift: s,
                    last_value: s,
                },
            );
        }
        if count + (opts.window) > opts.horizon {
            // Inside the trailing window: track monotonicity of increments.
            if let Some(p) = prev_in_window {
                monotone_up &= s >= p;
                monotone_down &= s <= p;
            }
            prev_in_window = Some(s);
        }
        if ring.len() < window {
            ring.push(s);
        } else {
            ring[pos] = s;
            pos = (pos + 1) % window;
        }
        if count >= opts.horizon {
            break;
        }
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &ring {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let oscillation = if ring.is_empty() { 0.0 } else { hi - lo };
    let oldest = if ring.len() < window { ring.first().copied().unwrap_or(last) } else { ring[pos] };
    let drift = last - oldest;
    let evidence = Evidence {
        horizon: count,
        window: opts.window,
        oscillation,
        drift,
        last_value: last,
    };
    let status = if oscillation <= opts.eps {
        Status::Converges
    } else if (monotone_up || monotone_down) && drift.abs() > opts.eps * opts.window as f64 {
        Status::Diverges
    } else {
        Status::Inconclusive
    };
    ConvergenceVerdict::heuristic(status, evidence)
}

/// Analytic classification of a pair of specs, when one is recognizable.
#[derive(Debug, Clone, PartialEq)]
enum PairClass {
    /// Identical or proportional: deviation identically zero.
    Zero,
    /// One spec perturbs the other multiplicatively; after normalization the
    /// deviation tends to `1 - gamma != 0`.
    LimitNonzero { limit: f64 },
    /// The sequences end at different indices, so the ratio degenerates.
    SupportMismatch,
}

/// The normalized ratio sequence `rho_n = (a_n / ||a||_2) / (b_n / ||b||_2)`
/// together with its deviation `1 - rho_n`, or a directly specified
/// deviation in closed form.
#[derive(Debug, Clone)]
pub struct RatioSequence {
    source: Source,
}

#[derive(Debug, Clone)]
enum Source {
    Pair {
        a: SequenceSpec,
        b: SequenceSpec,
        /// `ln(||b||_2 / ||a||_2)`
        log_norm_ratio: f64,
        class: Option<PairClass>,
    },
    Form(DeviationForm),
}

impl RatioSequence {
    pub fn from_specs(a: SequenceSpec, b: SequenceSpec) -> Result<Self> {
        let na = a.norm(2.0)?;
        let nb = b.norm(2.0)?;
        let log_norm_ratio = nb.ln() - na.ln();
        let class = classify_pair(&a, &b, nb / na);
        Ok(RatioSequence { source: Source::Pair { a, b, log_norm_ratio, class } })
    }

    pub fn from_deviation(form: DeviationForm) -> Self {
        RatioSequence { source: Source::Form(form) }
    }

    /// `rho_n`, strictly positive for spec pairs. When both sequences are
    /// explicit lists that have ended, the ratio is taken to be 1.
    pub fn rho(&self, n: u64) -> f64 {
        match &self.source {
            Source::Pair { a, b, log_norm_ratio, .. } => {
                let (la, lb) = (a.log_term(n), b.log_term(n));
                if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
                    return 1.0;
                }
                (la - lb + log_norm_ratio).exp()
            }
            Source::Form(form) => 1.0 - form.value(n),
        }
    }

    /// `1 - rho_n`.
    pub fn deviation(&self, n: u64) -> f64 {
        match &self.source {
            Source::Pair { a, b, log_norm_ratio, .. } => {
                let (la, lb) = (a.log_term(n), b.log_term(n));
                if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
                    return 0.0;
                }
                -(la - lb + log_norm_ratio).exp_m1()
            }
            Source::Form(form) => form.value(n),
        }
    }

    fn catalogue(&self) -> Option<Catalogue> {
        match &self.source {
            Source::Pair { class, .. } => match class {
                Some(PairClass::Zero) => Some(Catalogue::Zero),
                Some(PairClass::LimitNonzero { limit }) => {
                    Some(Catalogue::LimitNonzero { limit: *limit })
                }
                Some(PairClass::SupportMismatch) => Some(Catalogue::SupportMismatch),
                None => None,
            },
            Source::Form(form) => {
                if form.is_trivially_zero() {
                    return Some(Catalogue::Zero);
                }
                match form {
                    DeviationForm::Zero => Some(Catalogue::Zero),
                    DeviationForm::PowerLaw { s, .. } => Some(Catalogue::Power { s: *s }),
                    DeviationForm::AlternatingPowerLaw { s, .. } => {
                        Some(Catalogue::AlternatingPower { s: *s })
                    }
                    DeviationForm::Explicit { .. } => Some(Catalogue::FiniteSupport),
                }
            }
        }
    }
}

/// Recognized closed forms the analytic rules understand.
enum Catalogue {
    Zero,
    Power { s: f64 },
    AlternatingPower { s: f64 },
    FiniteSupport,
    LimitNonzero { limit: f64 },
    SupportMismatch,
}

const SUPPORT_MISMATCH_TAG: &str = "sequences end at different indices";

fn specs_proportional(a: &SequenceSpec, b: &SequenceSpec) -> bool {
    if a == b {
        return true;
    }
    if let (Some(ra), Some(rb)) = (a.geometric_ratio(), b.geometric_ratio()) {
        return ra == rb;
    }
    false
}

fn classify_pair(a: &SequenceSpec, b: &SequenceSpec, norm_ratio: f64) -> Option<PairClass> {
    if specs_proportional(a, b) {
        return Some(PairClass::Zero);
    }
    if a.explicit_len() != b.explicit_len() {
        return Some(PairClass::SupportMismatch);
    }
    // A multiplicative perturbation of b: rho_n = (1 + eps_n) * gamma with
    // gamma = ||b||_2 / ||a||_2, so the deviation tends to 1 - gamma.
    if let Some((base, _)) = a.deviation_of_base() {
        if specs_proportional(base, b) {
            let limit = 1.0 - norm_ratio;
            return if limit.abs() > 1e-9 { Some(PairClass::LimitNonzero { limit }) } else { None };
        }
    }
    if let Some((base, _)) = b.deviation_of_base() {
        if specs_proportional(base, a) {
            let limit = 1.0 - norm_ratio;
            return if limit.abs() > 1e-9 { Some(PairClass::LimitNonzero { limit }) } else { None };
        }
    }
    // Geometric pairs with different ratios drift to a deviation of 1 (or
    // diverge to -infinity); either way nothing converges.
    if let (Some(ra), Some(rb)) = (a.geometric_ratio(), b.geometric_ratio()) {
        if ra != rb {
            return Some(PairClass::LimitNonzero { limit: 1.0 });
        }
    }
    None
}

/// Evidence pass: numeric trajectory statistics even when the verdict itself
/// is analytic. Uses a reduced horizon to keep analytic paths cheap.
fn evidence_for<F: Fn(u64) -> f64>(term: F, opts: &CheckOptions) -> Evidence {
    let reduced = CheckOptions {
        horizon: opts.horizon.min(100_000),
        window: opts.window.min(opts.horizon.min(100_000) / 2).max(2),
        eps: opts.eps,
    };
    let mut acc = 0.0;
    let v = window_verdict(
        (1..=reduced.horizon).map(move |n| {
            acc += term(n);
            acc
        }),
        &reduced,
    );
    v.evidence
}

/// Condition for the standard-normal comparison: both products
/// `prod (2 - rho_n)` and `prod (2 - 1/rho_n)` must converge. Verdicts are
/// returned per direction (a vs b, b vs a), evaluated in log-space.
pub fn check_product_condition(
    rs: &RatioSequence,
    opts: &CheckOptions,
) -> Result<(ConvergenceVerdict, ConvergenceVerdict)> {
    opts.validate()?;
    if let Some(cat) = rs.catalogue() {
        let (status, tag) = match cat {
            Catalogue::Zero => (Status::Converges, "zero deviation"),
            Catalogue::FiniteSupport => (Status::Converges, "finitely supported deviation"),
            Catalogue::Power { s } => {
                if s > 1.0 {
                    (Status::Converges, "absolutely summable power-law deviation")
                } else {
                    (Status::Diverges, "power-law deviation with s <= 1")
                }
            }
            Catalogue::AlternatingPower { s } => {
                if s > 0.5 {
                    (Status::Converges, "alternating power-law deviation with summable squares")
                } else {
                    (Status::Diverges, "alternating power-law deviation with non-summable squares")
                }
            }
            Catalogue::LimitNonzero { limit } => {
                let tag = limit_tag(limit);
                let ev1 = evidence_for(|n| ln_or_skip(2.0 - rs.rho(n)), opts);
                let ev2 = evidence_for(|n| ln_or_skip(2.0 - 1.0 / rs.rho(n)), opts);
                return Ok((
                    ConvergenceVerdict::analytic(Status::Diverges, &tag, ev1),
                    ConvergenceVerdict::analytic(Status::Diverges, &tag, ev2),
                ));
            }
            Catalogue::SupportMismatch => {
                let ev1 = evidence_for(|n| ln_or_skip(2.0 - rs.rho(n)), opts);
                let ev2 = evidence_for(|n| ln_or_skip(2.0 - 1.0 / rs.rho(n)), opts);
                return Ok((
                    ConvergenceVerdict::analytic(Status::Diverges, SUPPORT_MISMATCH_TAG, ev1),
                    ConvergenceVerdict::analytic(Status::Diverges, SUPPORT_MISMATCH_TAG, ev2),
                ));
            }
        };
        // Evidence only; nonpositive head factors are skipped since the
        // analytic verdict concerns the tail.
        let ev1 = evidence_for(|n| ln_or_skip(2.0 - rs.rho(n)), opts);
        let ev2 = evidence_for(|n| ln_or_skip(2.0 - 1.0 / rs.rho(n)), opts);
        return Ok((
            ConvergenceVerdict::analytic(status, tag, ev1),
            ConvergenceVerdict::analytic(status, tag, ev2),
        ));
    }
    let forward = product_verdict(|n| 2.0 - rs.rho(n), opts)?;
    let backward = product_verdict(|n| 2.0 - 1.0 / rs.rho(n), opts)?;
    Ok((forward, backward))
}

fn safe_ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn ln_or_skip(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        0.0
    }
}

fn limit_tag(limit: f64) -> String {
    format!("deviation tends to the non-zero limit {limit:.6}")
}

fn product_verdict<F: Fn(u64) -> f64>(
    factor: F,
    opts: &CheckOptions,
) -> Result<ConvergenceVerdict> {
    // Positivity pre-check over the horizon keeps the log-space trajectory
    // meaningful.
    let mut acc = 0.0;
    let mut bad: Option<(u64, f64)> = None;
    let verdict = window_verdict(
        (1..=opts.horizon).map(|n| {
            let f = factor(n);
            if f <= 0.0 && bad.is_none() {
                bad = Some((n, f));
            }
            acc += safe_ln(f);
            acc
        }),
        opts,
    );
    if let Some((n, value)) = bad {
        return Err(Error::NonpositiveFactor { n, value });
    }
    Ok(verdict)
}

/// Condition for the general Gaussian comparison: `sum (1 - rho_n)`
/// converges (conditionally is enough) and `sum (1 - rho_n)^2 < infinity`.
/// Returns (series verdict, squares verdict).
pub fn check_series_condition(
    rs: &RatioSequence,
    opts: &CheckOptions,
) -> Result<(ConvergenceVerdict, ConvergenceVerdict)> {
    opts.validate()?;
    if let Some(cat) = rs.catalogue() {
        let (series, squares, tag): (Status, Status, &str) = match cat {
            Catalogue::Zero => (Status::Converges, Status::Converges, "zero deviation"),
            Catalogue::FiniteSupport => {
                (Status::Converges, Status::Converges, "finitely supported deviation")
            }
            Catalogue::Power { s } => (
                if s > 1.0 { Status::Converges } else { Status::Diverges },
                if s > 0.5 { Status::Converges } else { Status::Diverges },
                "power-law deviation",
            ),
            Catalogue::AlternatingPower { s } => (
                if s > 0.0 { Status::Converges } else { Status::Diverges },
                if s > 0.5 { Status::Converges } else { Status::Diverges },
                "alternating power-law deviation",
            ),
            Catalogue::LimitNonzero { limit } => {
                let tag = limit_tag(limit);
                let ev1 = evidence_for(|n| rs.deviation(n), opts);
                let ev2 = evidence_for(|n| rs.deviation(n).powi(2), opts);
                return Ok((
                    ConvergenceVerdict::analytic(Status::Diverges, &tag, ev1),
                    ConvergenceVerdict::analytic(Status::Diverges, &tag, ev2),
                ));
            }
            Catalogue::SupportMismatch => {
                let ev = Evidence {
                    horizon: 0,
                    window: 0,
                    oscillation: 0.0,
                    drift: 0.0,
                    last_value: 0.0,
                };
                return Ok((
                    ConvergenceVerdict::analytic(Status::Diverges, SUPPORT_MISMATCH_TAG, ev),
                    ConvergenceVerdict::analytic(Status::Diverges, SUPPORT_MISMATCH_TAG, ev),
                ));
            }
        };
        let ev1 = evidence_for(|n| rs.deviation(n), opts);
        let ev2 = evidence_for(|n| rs.deviation(n).powi(2), opts);
        return Ok((
            ConvergenceVerdict::analytic(series, tag, ev1),
            ConvergenceVerdict::analytic(squares, tag, ev2),
        ));
    }
    let mut acc1 = 0.0;
    let series = window_verdict(
        (1..=opts.horizon).map(|n| {
            acc1 += rs.deviation(n);
            acc1
        }),
        opts,
    );
    let mut acc2 = 0.0;
    let squares = window_verdict(
        (1..=opts.horizon).map(|n| {
            acc2 += rs.deviation(n).powi(2);
            acc2
        }),
        opts,
    );
    Ok((series, squares))
}

/// Absolute-series condition for the power comparison:
/// `sum |1 - (a_n / sigma_a^p) / (b_n / sigma_b^p)| < infinity`.
pub fn check_power_condition(
    a: &SequenceSpec,
    b: &SequenceSpec,
    p: f64,
    beta: f64,
    opts: &CheckOptions,
) -> Result<ConvergenceVerdict> {
    opts.validate()?;
    let sigma_a = gauss::sigma_p(a, beta, p)?;
    let sigma_b = gauss::sigma_p(b, beta, p)?;
    let log_scale = p * (sigma_b.ln() - sigma_a.ln());
    let dev = |n: u64| -> f64 { (-(a.log_term(n) - b.log_term(n) + log_scale).exp_m1()).abs() };

    if specs_proportional(a, b) {
        let ev = evidence_for(dev, opts);
        return Ok(ConvergenceVerdict::analytic(Status::Converges, "zero deviation", ev));
    }
    // A multiplicative perturbation shifts the normalized ratio to a nonzero
    // limit, so the absolute series diverges.
    let related = a
        .deviation_of_base()
        .map(|(base, _)| specs_proportional(base, b))
        .unwrap_or(false)
        || b.deviation_of_base()
            .map(|(base, _)| specs_proportional(base, a))
            .unwrap_or(false);
    if related {
        let limit = dev(1_000_000);
        if limit > 1e-9 {
            let ev = evidence_for(dev, opts);
            return Ok(ConvergenceVerdict::analytic(
                Status::Diverges,
                "deviation tends to a non-zero limit",
                ev,
            ));
        }
    }
    let mut acc = 0.0;
    Ok(window_verdict(
        (1..=opts.horizon).map(|n| {
            acc += dev(n);
            acc
        }),
        opts,
    ))
}

/// Same absolute-series condition, for a directly specified deviation.
pub fn check_power_condition_deviation(
    form: &DeviationForm,
    opts: &CheckOptions,
) -> Result<ConvergenceVerdict> {
    opts.validate()?;
    let ev = evidence_for(|n| form.value(n).abs(), opts);
    let verdict = match form {
        _ if form.is_trivially_zero() => {
            ConvergenceVerdict::analytic(Status::Converges, "zero deviation", ev)
        }
        DeviationForm::Zero => ConvergenceVerdict::analytic(Status::Converges, "zero deviation", ev),
        DeviationForm::Explicit { .. } => {
            ConvergenceVerdict::analytic(Status::Converges, "finitely supported deviation", ev)
        }
        DeviationForm::PowerLaw { s, .. } | DeviationForm::AlternatingPowerLaw { s, .. } => {
            let status = if *s > 1.0 { Status::Converges } else { Status::Diverges };
            ConvergenceVerdict::analytic(status, "absolute power-law series", ev)
        }
    };
    Ok(verdict)
}

/// Verdicts for the four expressions `prod (1 + x_n)`, `prod (1 - x_n)`,
/// `sum x_n`, `sum x_n^2`, plus a consistency flag.
#[derive(Debug, Clone, Serialize)]
pub struct WermuthReport {
    pub prod_plus: ConvergenceVerdict,
    pub prod_minus: ConvergenceVerdict,
    pub sum: ConvergenceVerdict,
    pub sum_squares: ConvergenceVerdict,
    /// Raised when at least two expressions converge while another
    /// diverges: a numerically detected contradiction of the four-way
    /// equivalence, reported and never silently corrected.
    pub consistency_flag: bool,
    /// Product factors skipped because some |x_n| >= 1 in the head;
    /// convergence of an infinite product is a tail property.
    pub skipped_prefix: u64,
}

/// Checks the four product/series expressions for a signed sequence given in
/// closed form or as an explicit list. Requires `|x_n| < 1` eventually; for
/// explicit lists a vanishing factor is an error.
pub fn wermuth_relations(form: &DeviationForm, opts: &CheckOptions) -> Result<WermuthReport> {
    opts.validate()?;

    // Locate the last head index with |x_n| >= 1; products are evaluated
    // beyond it.
    let scan = 10_000u64.min(opts.horizon);
    let mut skipped = 0u64;
    for n in 1..=scan {
        let x = form.value(n);
        if let DeviationForm::Explicit { .. } = form {
            if x == 1.0 || x == -1.0 {
                return Err(Error::ZeroFactor { n });
            }
        }
        if x.abs() >= 1.0 {
            skipped = n;
        }
    }
    if skipped >= scan {
        return Err(Error::InvalidParameter(
            "|x_n| has not dropped below 1 within the scanned prefix".into(),
        ));
    }

    let analytic: Option<(Status, Status, Status, Status, &str)> = if form.is_trivially_zero() {
        Some((Status::Converges, Status::Converges, Status::Converges, Status::Converges, "zero sequence"))
    } else {
        match form {
            DeviationForm::Zero => unreachable!("zero handled above"),
            DeviationForm::Explicit { .. } => Some((
                Status::Converges,
                Status::Converges,
                Status::Converges,
                Status::Converges,
                "finitely supported sequence",
            )),
            DeviationForm::PowerLaw { s, .. } => {
                let sum = if *s > 1.0 { Status::Converges } else { Status::Diverges };
                let squares = if *s > 0.5 { Status::Converges } else { Status::Diverges };
                // One-signed: products behave like the plain series.
                Some((sum, sum, sum, squares, "power-law sequence"))
            }
            DeviationForm::AlternatingPowerLaw { s, .. } => {
                let sum = if *s > 0.0 { Status::Converges } else { Status::Diverges };
                let squares = if *s > 0.5 { Status::Converges } else { Status::Diverges };
                // log(1 +- x_n) = +-x_n - x_n^2/2 + O(x^3): products need the
                // series and the squares.
                let prod = if *s > 0.5 { Status::Converges } else { Status::Diverges };
                Some((prod, prod, sum, squares, "alternating power-law sequence"))
            }
        }
    };

    let start = skipped + 1;
    let prod_trajectory = |sign: f64, opts: &CheckOptions| -> ConvergenceVerdict {
        let mut acc = 0.0;
        window_verdict(
            (start..=opts.horizon).map(|n| {
                acc += safe_ln(1.0 + sign * form.value(n));
                acc
            }),
            opts,
        )
    };

    let (prod_plus, prod_minus, sum, sum_squares) = if let Some((pp, pm, s, sq, tag)) = analytic {
        let reduced = *opts;
        let ev_pp = prod_trajectory(1.0, &CheckOptions { horizon: reduced.horizon.min(100_000), ..reduced }).evidence;
        let ev_pm = prod_trajectory(-1.0, &CheckOptions { horizon: reduced.horizon.min(100_000), ..reduced }).evidence;
        let ev_s = evidence_for(|n| if n >= start { form.value(n) } else { 0.0 }, opts);
        let ev_sq = evidence_for(|n| form.value(n).powi(2), opts);
        (
            ConvergenceVerdict::analytic(pp, tag, ev_pp),
            ConvergenceVerdict::analytic(pm, tag, ev_pm),
            ConvergenceVerdict::analytic(s, tag, ev_s),
            ConvergenceVerdict::analytic(sq, tag, ev_sq),
        )
    } else {
        let mut acc_s = 0.0;
        let sum_v = window_verdict(
            (start..=opts.horizon).map(|n| {
                acc_s += form.value(n);
                acc_s
            }),
            opts,
        );
        let mut acc_q = 0.0;
        let sq_v = window_verdict(
            (start..=opts.horizon).map(|n| {
                acc_q += form.value(n).powi(2);
                acc_q
            }),
            opts,
        );
        (prod_trajectory(1.0, opts), prod_trajectory(-1.0, opts), sum_v, sq_v)
    };

    let statuses = [
        prod_plus.status,
        prod_minus.status,
        sum.status,
        sum_squares.status,
    ];
    let n_conv = statuses.iter().filter(|s| **s == Status::Converges).count();
    let n_div = statuses.iter().filter(|s| **s == Status::Diverges).count();
    let consistency_flag = n_conv >= 2 && n_div >= 1;

    Ok(WermuthReport {
        prod_plus,
        prod_minus,
        sum,
        sum_squares,
        consistency_flag,
        skipped_prefix: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> CheckOptions {
        CheckOptions { horizon: 200_000, window: 500, eps: 1e-6 }
    }

    #[test]
    fn alternating_harmonic_satisfies_both_conditions() {
        let rs = RatioSequence::from_deviation(DeviationForm::alternating_harmonic());
        let (f, b) = check_product_condition(&rs, &opts()).unwrap();
        assert!(f.converges() && b.converges());
        assert!(f.analytic.is_some());
        let (series, squares) = check_series_condition(&rs, &opts()).unwrap();
        assert!(series.converges() && squares.converges());
    }

    #[test]
    fn inverse_square_deviation_converges() {
        let rs = RatioSequence::from_deviation(DeviationForm::PowerLaw { coeff: 1.0, s: 2.0 });
        let (f, b) = check_product_condition(&rs, &opts()).unwrap();
        assert!(f.converges() && b.converges());
    }

    #[test]
    fn harmonic_deviation_diverges() {
        let rs = RatioSequence::from_deviation(DeviationForm::PowerLaw { coeff: 1.0, s: 1.0 });
        let (f, b) = check_product_condition(&rs, &opts()).unwrap();
        assert_eq!(f.status, Status::Diverges);
        assert_eq!(b.status, Status::Diverges);
        let (series, squares) = check_series_condition(&rs, &opts()).unwrap();
        assert_eq!(series.status, Status::Diverges);
        assert!(squares.converges());
    }

    #[test]
    fn alternating_sqrt_splits() {
        let rs = RatioSequence::from_deviation(DeviationForm::AlternatingPowerLaw {
            coeff: 1.0,
            s: 0.5,
        });
        let (series, squares) = check_series_condition(&rs, &opts()).unwrap();
        assert!(series.converges());
        assert_eq!(squares.status, Status::Diverges);
    }

    #[test]
    fn identical_specs_give_zero_deviation() {
        let a = SequenceSpec::geometric(0.5).unwrap();
        let rs = RatioSequence::from_specs(a.clone(), a).unwrap();
        for n in [1u64, 5, 100] {
            assert!(rs.deviation(n).abs() < 1e-14);
        }
        let (f, b) = check_product_condition(&rs, &opts()).unwrap();
        assert!(f.converges() && b.converges());
        assert!(f.analytic.is_some());
    }

    #[test]
    fn rescaling_leaves_deviations_invariant() {
        let a = SequenceSpec::explicit(vec![1.0, 0.5, 0.25, 0.125]).unwrap();
        let b = SequenceSpec::explicit(vec![0.9, 0.5, 0.24, 0.13]).unwrap();
        let scaled = SequenceSpec::explicit(vec![3.0, 1.5, 0.75, 0.375]).unwrap();
        let r1 = RatioSequence::from_specs(a, b.clone()).unwrap();
        let r2 = RatioSequence::from_specs(scaled, b).unwrap();
        for n in 1..=4u64 {
            assert!((r1.rho(n) - r2.rho(n)).abs() < 1e-12);
        }
    }

    // The normalized deviation of a one-signed multiplicative perturbation
    // tends to 1 - ||b||_2/||a||_2 != 0, so the hypotheses fail; the checker
    // must say so rather than echo the perturbation's own summability.
    #[test]
    fn perturbed_pair_is_classified_as_drifting() {
        let b = SequenceSpec::geometric(0.5).unwrap();
        let a = SequenceSpec::perturbed(
            b.clone(),
            crate::seqspec::Deviation::InverseSquare { scale: 1.0 },
        )
        .unwrap();
        let rs = RatioSequence::from_specs(a, b).unwrap();
        let (series, squares) = check_series_condition(&rs, &opts()).unwrap();
        assert_eq!(series.status, Status::Diverges);
        assert_eq!(squares.status, Status::Diverges);
        assert!(series.analytic.is_some());
    }

    #[test]
    fn condition_26_cases() {
        let g = SequenceSpec::geometric(0.5).unwrap();
        let v = check_power_condition(&g, &g.clone(), 1.5, 1.0, &opts()).unwrap();
        assert!(v.converges());

        let conv =
            check_power_condition_deviation(&DeviationForm::PowerLaw { coeff: 1.0, s: 2.0 }, &opts())
                .unwrap();
        assert!(conv.converges());

        let div = check_power_condition_deviation(&DeviationForm::alternating_harmonic(), &opts())
            .unwrap();
        assert_eq!(div.status, Status::Diverges);
    }

    #[test]
    fn wermuth_alternating_harmonic_all_converge() {
        let rep = wermuth_relations(&DeviationForm::alternating_harmonic(), &opts()).unwrap();
        assert!(rep.prod_plus.converges());
        assert!(rep.prod_minus.converges());
        assert!(rep.sum.converges());
        assert!(rep.sum_squares.converges());
        assert!(!rep.consistency_flag);
        assert_eq!(rep.skipped_prefix, 1); // |x_1| = 1
    }

    #[test]
    fn wermuth_inverse_square_all_converge() {
        let rep = wermuth_relations(
            &DeviationForm::PowerLaw { coeff: 0.5, s: 2.0 },
            &opts(),
        )
        .unwrap();
        assert!(rep.prod_plus.converges() && rep.prod_minus.converges());
        assert!(rep.sum.converges() && rep.sum_squares.converges());
        assert!(!rep.consistency_flag);
    }

    #[test]
    fn wermuth_alternating_sqrt_single_convergent_entry() {
        let rep = wermuth_relations(
            &DeviationForm::AlternatingPowerLaw { coeff: 1.0, s: 0.5 },
            &opts(),
        )
        .unwrap();
        assert!(rep.sum.converges());
        assert_eq!(rep.sum_squares.status, Status::Diverges);
        assert_eq!(rep.prod_plus.status, Status::Diverges);
        assert!(!rep.consistency_flag);
    }

    #[test]
    fn wermuth_zero_factor_in_explicit_list() {
        let rep = wermuth_relations(
            &DeviationForm::Explicit { terms: vec![0.5, 1.0, 0.1] },
            &opts(),
        );
        assert!(matches!(rep, Err(Error::ZeroFactor { n: 2 })));
    }

    #[test]
    fn nonpositive_factor_in_numeric_path() {
        // Non-catalogue source: a pair whose rho dips are impossible, so use
        // a synthetic explicit deviation >= 1 beyond the catalogue... the
        // catalogue covers explicit forms, so exercise the error through a
        // numeric product on a pair-free path is not reachable; assert the
        // helper rejects directly instead.
        let r = product_verdict(|n| if n == 3 { -0.5 } else { 0.5 }, &opts());
        assert!(matches!(r, Err(Error::NonpositiveFactor { n: 3, .. })));
    }

    #[test]
    fn numeric_heuristic_on_pair_without_catalogue() {
        // Two explicit lists close to proportional but not recognized:
        // deviations are finitely supported in effect, so partial sums
        // stabilize and the heuristic reports convergence.
        let a = SequenceSpec::explicit(vec![1.0, 0.5, 0.25, 0.125, 0.0625]).unwrap();
        let b = SequenceSpec::explicit(vec![1.01, 0.49, 0.252, 0.126, 0.062]).unwrap();
        let rs = RatioSequence::from_specs(a, b).unwrap();
        let o = CheckOptions { horizon: 2_000, window: 100, eps: 1e-6 };
        let (series, squares) = check_series_condition(&rs, &o).unwrap();
        assert!(series.analytic.is_none());
        assert!(series.converges());
        assert!(squares.converges());
    }
}
