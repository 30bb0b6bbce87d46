//! Python bindings: the main types and operations of `tailseries` exposed as
//! an extension module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tailseries::conditions::{self, CheckOptions, DeviationForm as DevForm, RatioSequence};
use tailseries::gauss;
use tailseries::ldp;
use tailseries::mc;
use tailseries::proofcheck;
use tailseries::seqspec;

fn err(e: tailseries::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "SequenceSpec", skip_from_py_object)]
#[derive(Clone)]
struct PySequenceSpec {
    inner: seqspec::SequenceSpec,
}

#[pymethods]
impl PySequenceSpec {
    #[staticmethod]
    fn geometric(rho: f64) -> PyResult<Self> {
        Ok(PySequenceSpec { inner: seqspec::SequenceSpec::geometric(rho).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (s, offset = 0.0))]
    fn polynomial(s: f64, offset: f64) -> PyResult<Self> {
        Ok(PySequenceSpec {
            inner: seqspec::SequenceSpec::polynomial_with_offset(s, offset).map_err(err)?,
        })
    }

    #[staticmethod]
    fn explicit(terms: Vec<f64>) -> PyResult<Self> {
        Ok(PySequenceSpec { inner: seqspec::SequenceSpec::explicit(terms).map_err(err)? })
    }

    /// Multiplicative perturbation of a base spec: kind is
    /// "alternating_harmonic" or "inverse_square" (with a scale), or
    /// "explicit" (with terms).
    #[staticmethod]
    #[pyo3(signature = (base, kind, scale = 1.0, terms = None))]
    fn perturbed(
        base: &PySequenceSpec,
        kind: &str,
        scale: f64,
        terms: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let deviation = match kind {
            "alternating_harmonic" => seqspec::Deviation::AlternatingHarmonic { scale },
            "inverse_square" => seqspec::Deviation::InverseSquare { scale },
            "explicit" => seqspec::Deviation::Explicit {
                terms: terms.ok_or_else(|| PyValueError::new_err("explicit deviation needs terms"))?,
            },
            other => return Err(PyValueError::new_err(format!("unknown deviation kind {other}"))),
        };
        Ok(PySequenceSpec {
            inner: seqspec::SequenceSpec::perturbed(base.inner.clone(), deviation).map_err(err)?,
        })
    }

    fn term(&self, n: u64) -> f64 {
        self.inner.term(n)
    }

    fn log_term(&self, n: u64) -> f64 {
        self.inner.log_term(n)
    }

    /// lq norm; pass float('inf') for the sup norm.
    fn norm(&self, q: f64) -> PyResult<f64> {
        self.inner.norm(q).map_err(err)
    }

    fn tail_sum(&self, n_trunc: u64, power: f64) -> PyResult<f64> {
        self.inner.tail_sum(n_trunc, power).map_err(err)
    }

    fn truncation_index(&self, tol: f64, power: f64) -> PyResult<u64> {
        self.inner.truncation_index(tol, power).map_err(err)
    }

    /// Returns (nonincreasing, analytic); analytic = False means the check
    /// covered only the scanned prefix.
    fn is_nonincreasing(&self, horizon: u64) -> (bool, bool) {
        let rep = self.inner.is_nonincreasing(horizon);
        (rep.nonincreasing, rep.analytic)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "GaussianParams", skip_from_py_object)]
#[derive(Clone)]
struct PyGaussianParams {
    inner: gauss::GaussianParams,
}

#[pymethods]
impl PyGaussianParams {
    #[new]
    #[pyo3(signature = (alpha = 0.0, beta = 1.0))]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(PyGaussianParams { inner: gauss::GaussianParams::new(alpha, beta).map_err(err)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
}

#[pyclass(name = "TailLaw", skip_from_py_object)]
#[derive(Clone)]
struct PyTailLaw {
    inner: ldp::TailLaw,
}

#[pymethods]
impl PyTailLaw {
    #[staticmethod]
    #[pyo3(signature = (alpha = 0.0, beta = 1.0))]
    fn folded_gaussian(alpha: f64, beta: f64) -> PyResult<Self> {
        Ok(PyTailLaw { inner: ldp::TailLaw::folded_gaussian(alpha, beta).map_err(err)? })
    }

    #[staticmethod]
    fn exponential(rate: f64) -> PyResult<Self> {
        Ok(PyTailLaw { inner: ldp::TailLaw::exponential(rate).map_err(err)? })
    }

    #[staticmethod]
    fn weibull_type(p: f64, c: f64) -> PyResult<Self> {
        Ok(PyTailLaw { inner: ldp::TailLaw::weibull_type(p, c).map_err(err)? })
    }

    fn mean_abs(&self) -> f64 {
        self.inner.mean_abs()
    }

    /// (p, c) of the upper tail.
    fn tail_exponent(&self) -> (f64, f64) {
        let te = self.inner.tail_exponent();
        (te.p, te.c)
    }

    fn conjugate_q(&self) -> f64 {
        self.inner.tail_exponent().conjugate_q()
    }
}

#[pyclass(name = "SamplerConfig", skip_from_py_object)]
#[derive(Clone)]
struct PySamplerConfig {
    inner: mc::SamplerConfig,
}

#[pymethods]
impl PySamplerConfig {
    #[new]
    #[pyo3(signature = (n_samples = 100_000, seed = 0, n_workers = 1, truncation_tol = 1e-6))]
    fn new(n_samples: u64, seed: u64, n_workers: u32, truncation_tol: f64) -> PyResult<Self> {
        let inner = mc::SamplerConfig {
            n_samples,
            seed,
            n_workers,
            truncation_tol,
            ..mc::SamplerConfig::default()
        };
        inner.validate().map_err(err)?;
        Ok(PySamplerConfig { inner })
    }
}

#[pyclass(name = "Estimate")]
struct PyEstimate {
    inner: mc::Estimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn p_hat(&self) -> f64 {
        self.inner.p_hat
    }

    #[getter]
    fn log_p_hat(&self) -> f64 {
        self.inner.log_p_hat
    }

    #[getter]
    fn ci_low(&self) -> f64 {
        self.inner.ci_low
    }

    #[getter]
    fn ci_high(&self) -> f64 {
        self.inner.ci_high
    }

    #[getter]
    fn ess(&self) -> f64 {
        self.inner.ess
    }

    #[getter]
    fn trunc_bound(&self) -> f64 {
        self.inner.trunc_bound
    }

    #[getter]
    fn hits(&self) -> u64 {
        self.inner.hits
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(p_hat={:.6e}, log_p_hat={:.6}, ci=({:.6}, {:.6}), ess={:.1})",
            self.inner.p_hat, self.inner.log_p_hat, self.inner.ci_low, self.inner.ci_high,
            self.inner.ess
        )
    }
}

#[pyclass(name = "Verdict", skip_from_py_object)]
#[derive(Clone)]
struct PyVerdict {
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    analytic: Option<String>,
    #[pyo3(get)]
    oscillation: f64,
    #[pyo3(get)]
    drift: f64,
}

impl From<conditions::ConvergenceVerdict> for PyVerdict {
    fn from(v: conditions::ConvergenceVerdict) -> Self {
        let status = match v.status {
            conditions::Status::Converges => "converges",
            conditions::Status::Diverges => "diverges",
            conditions::Status::Inconclusive => "inconclusive",
        };
        PyVerdict {
            status: status.to_string(),
            analytic: v.analytic,
            oscillation: v.evidence.oscillation,
            drift: v.evidence.drift,
        }
    }
}

#[pyclass(name = "DeviationForm", skip_from_py_object)]
#[derive(Clone)]
struct PyDeviationForm {
    inner: DevForm,
}

#[pymethods]
impl PyDeviationForm {
    #[staticmethod]
    fn zero() -> Self {
        PyDeviationForm { inner: DevForm::Zero }
    }

    #[staticmethod]
    fn power_law(coeff: f64, s: f64) -> Self {
        PyDeviationForm { inner: DevForm::PowerLaw { coeff, s } }
    }

    #[staticmethod]
    fn alternating_power_law(coeff: f64, s: f64) -> Self {
        PyDeviationForm { inner: DevForm::AlternatingPowerLaw { coeff, s } }
    }

    #[staticmethod]
    fn explicit(terms: Vec<f64>) -> Self {
        PyDeviationForm { inner: DevForm::Explicit { terms } }
    }

    fn value(&self, n: u64) -> f64 {
        self.inner.value(n)
    }
}

fn opts(horizon: u64, window: u64, eps: f64) -> CheckOptions {
    CheckOptions { horizon, window, eps }
}

// --- free functions -------------------------------------------------------

#[pyfunction]
fn phi_cdf(x: f64) -> f64 {
    gauss::phi_cdf(x)
}

#[pyfunction]
fn log_phi(x: f64) -> f64 {
    gauss::log_phi(x)
}

#[pyfunction]
fn log_one_minus_phi(x: f64) -> f64 {
    gauss::log_one_minus_phi(x)
}

#[pyfunction]
fn eps_hat(x: f64, y: f64) -> f64 {
    gauss::eps_hat(x, y)
}

#[pyfunction]
fn log_eps_hat(x: f64, y: f64) -> f64 {
    gauss::log_eps_hat(x, y)
}

#[pyfunction]
#[pyo3(signature = (spec, params, r, tol = 1e-8))]
fn lifshits_log_tail(
    spec: &PySequenceSpec,
    params: &PyGaussianParams,
    r: f64,
    tol: f64,
) -> PyResult<f64> {
    Ok(gauss::lifshits_log_tail(&spec.inner, &params.inner, r, tol)
        .map_err(err)?
        .value)
}

#[pyfunction]
fn scaled_threshold(spec: &PySequenceSpec, params: &PyGaussianParams, r: f64) -> PyResult<f64> {
    gauss::scaled_threshold(&spec.inner, &params.inner, r).map_err(err)
}

#[pyfunction]
fn scaled_threshold_p(
    spec: &PySequenceSpec,
    params: &PyGaussianParams,
    r: f64,
    p: f64,
) -> PyResult<f64> {
    gauss::scaled_threshold_p(&spec.inner, &params.inner, r, p).map_err(err)
}

#[pyfunction]
fn psi(t: f64, c1: f64, c2: f64, p: f64) -> f64 {
    ldp::psi(t, c1, c2, p)
}

/// Returns (value, minimizer, certified_gap).
#[pyfunction]
#[pyo3(signature = (x, c1, c2, p, z, tol = 1e-8))]
fn rate_infimum(
    x: Vec<f64>,
    c1: f64,
    c2: f64,
    p: f64,
    z: f64,
    tol: f64,
) -> PyResult<(f64, Vec<f64>, f64)> {
    let prob = ldp::RateProblem::new(x, c1, c2, p, z).map_err(err)?;
    let sol = ldp::rate_infimum(&prob, tol).map_err(err)?;
    Ok((sol.value, sol.minimizer, sol.certified_gap))
}

#[pyfunction]
fn log_tail_asymptote(spec: &PySequenceSpec, law: &PyTailLaw, r: f64) -> PyResult<f64> {
    ldp::log_tail_asymptote(&spec.inner, &law.inner, r).map_err(err)
}

#[pyfunction]
fn log_ratio_asymptote(
    a: &PySequenceSpec,
    b: &PySequenceSpec,
    law: &PyTailLaw,
) -> PyResult<f64> {
    ldp::log_ratio_asymptote(&a.inner, &b.inner, &law.inner).map_err(err)
}

/// Tail exponent of |xi|^k: returns (p, c, q).
#[pyfunction]
fn power_transform(law: &PyTailLaw, k: f64) -> PyResult<(f64, f64, f64)> {
    let te = ldp::power_transform(&law.inner, k).map_err(err)?;
    Ok((te.p, te.c, te.conjugate_q()))
}

#[pyfunction]
fn tilt_parameter(law: &PyTailLaw, spec: &PySequenceSpec, r: f64, n_trunc: u64) -> PyResult<f64> {
    mc::tilt_parameter(&law.inner, &spec.inner, r, n_trunc).map_err(err)
}

#[pyfunction]
fn sample_naive(
    law: &PyTailLaw,
    spec: &PySequenceSpec,
    r: f64,
    cfg: &PySamplerConfig,
) -> PyResult<PyEstimate> {
    Ok(PyEstimate { inner: mc::sample_naive(&law.inner, &spec.inner, r, &cfg.inner).map_err(err)? })
}

#[pyfunction]
fn sample_is(
    law: &PyTailLaw,
    spec: &PySequenceSpec,
    r: f64,
    cfg: &PySamplerConfig,
) -> PyResult<PyEstimate> {
    Ok(PyEstimate { inner: mc::sample_is(&law.inner, &spec.inner, r, &cfg.inner).map_err(err)? })
}

/// Returns (c_eff, intercept, [(r, log_p), ...]).
#[allow(clippy::type_complexity)]
#[pyfunction]
fn empirical_log_slope(
    law: &PyTailLaw,
    spec: &PySequenceSpec,
    r_grid: Vec<f64>,
    cfg: &PySamplerConfig,
) -> PyResult<(f64, f64, Vec<(f64, f64)>)> {
    let fit = mc::empirical_log_slope(&law.inner, &spec.inner, &r_grid, &cfg.inner).map_err(err)?;
    let pts = fit.points.iter().map(|p| (p.r, p.log_p)).collect();
    Ok((fit.c_eff, fit.intercept, pts))
}

/// Product condition for the pair (a, b); returns one verdict per direction.
#[pyfunction]
#[pyo3(signature = (a = None, b = None, deviation = None, horizon = 1_000_000, window = 1_000, eps = 1e-8))]
fn check_product_condition(
    a: Option<&PySequenceSpec>,
    b: Option<&PySequenceSpec>,
    deviation: Option<&PyDeviationForm>,
    horizon: u64,
    window: u64,
    eps: f64,
) -> PyResult<(PyVerdict, PyVerdict)> {
    let rs = ratio_sequence(a, b, deviation)?;
    let (f, bwd) = conditions::check_product_condition(&rs, &opts(horizon, window, eps)).map_err(err)?;
    Ok((f.into(), bwd.into()))
}

/// Series-plus-squares condition; returns (series, squares).
#[pyfunction]
#[pyo3(signature = (a = None, b = None, deviation = None, horizon = 1_000_000, window = 1_000, eps = 1e-8))]
fn check_series_condition(
    a: Option<&PySequenceSpec>,
    b: Option<&PySequenceSpec>,
    deviation: Option<&PyDeviationForm>,
    horizon: u64,
    window: u64,
    eps: f64,
) -> PyResult<(PyVerdict, PyVerdict)> {
    let rs = ratio_sequence(a, b, deviation)?;
    let (s, sq) = conditions::check_series_condition(&rs, &opts(horizon, window, eps)).map_err(err)?;
    Ok((s.into(), sq.into()))
}

#[pyfunction]
#[pyo3(signature = (a, b, p, beta = 1.0, horizon = 1_000_000, window = 1_000, eps = 1e-8))]
fn check_power_condition(
    a: &PySequenceSpec,
    b: &PySequenceSpec,
    p: f64,
    beta: f64,
    horizon: u64,
    window: u64,
    eps: f64,
) -> PyResult<PyVerdict> {
    conditions::check_power_condition(&a.inner, &b.inner, p, beta, &opts(horizon, window, eps))
        .map(Into::into)
        .map_err(err)
}

/// Returns (prod_plus, prod_minus, sum, sum_squares, consistency_flag).
#[pyfunction]
#[pyo3(signature = (deviation, horizon = 1_000_000, window = 1_000, eps = 1e-8))]
fn wermuth_relations(
    deviation: &PyDeviationForm,
    horizon: u64,
    window: u64,
    eps: f64,
) -> PyResult<(PyVerdict, PyVerdict, PyVerdict, PyVerdict, bool)> {
    let rep =
        conditions::wermuth_relations(&deviation.inner, &opts(horizon, window, eps)).map_err(err)?;
    Ok((
        rep.prod_plus.into(),
        rep.prod_minus.into(),
        rep.sum.into(),
        rep.sum_squares.into(),
        rep.consistency_flag,
    ))
}

fn ratio_sequence(
    a: Option<&PySequenceSpec>,
    b: Option<&PySequenceSpec>,
    deviation: Option<&PyDeviationForm>,
) -> PyResult<RatioSequence> {
    match (a, b, deviation) {
        (Some(a), Some(b), None) => {
            RatioSequence::from_specs(a.inner.clone(), b.inner.clone()).map_err(err)
        }
        (None, None, Some(d)) => Ok(RatioSequence::from_deviation(d.inner.clone())),
        _ => Err(PyValueError::new_err("pass either (a, b) or a deviation")),
    }
}

/// Weighted-sum bound on finite data; g is piecewise linear through the
/// given nodes. Returns (holds, slack).
#[pyfunction]
fn check_weighted_tail_bound(
    c: Vec<f64>,
    g_nodes: Vec<(f64, f64)>,
    d: Vec<f64>,
    n_start: usize,
) -> PyResult<(bool, f64)> {
    let g = proofcheck::PiecewiseLinear::new(g_nodes).map_err(err)?;
    let out = proofcheck::check_weighted_tail_bound(&c, &g, &d, n_start).map_err(err)?;
    Ok((out.holds, out.slack))
}

/// Returns violations as (a, delta, gap) triples; empty means clean.
#[pyfunction]
#[pyo3(signature = (a_grid = None, delta_grid = None))]
fn check_bernoulli_bound(
    a_grid: Option<Vec<f64>>,
    delta_grid: Option<Vec<f64>>,
) -> Vec<(f64, f64, f64)> {
    let a = a_grid.unwrap_or_else(proofcheck::default_a_grid);
    let d = delta_grid.unwrap_or_else(proofcheck::default_delta_grid);
    proofcheck::check_bernoulli_bound(&a, &d)
        .into_iter()
        .map(|v| (v.a, v.delta, v.gap))
        .collect()
}

/// Largest delta radius on the grid for which the two-sided bound holds.
#[pyfunction]
fn check_two_sided_bound(sigma: f64) -> PyResult<f64> {
    let deltas: Vec<f64> = (0..=1000).map(|i| -0.5 + 1e-3 * i as f64).collect();
    let out = proofcheck::check_two_sided_bound(
        sigma,
        &proofcheck::symmetric_a_grid(sigma),
        &deltas,
        &proofcheck::default_gamma_grid(),
    )
    .map_err(err)?;
    Ok(out.lambda_hat)
}

#[pymodule]
fn tailseries_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySequenceSpec>()?;
    m.add_class::<PyGaussianParams>()?;
    m.add_class::<PyTailLaw>()?;
    m.add_class::<PySamplerConfig>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyVerdict>()?;
    m.add_class::<PyDeviationForm>()?;
    m.add_function(wrap_pyfunction!(phi_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(log_phi, m)?)?;
    m.add_function(wrap_pyfunction!(log_one_minus_phi, m)?)?;
    m.add_function(wrap_pyfunction!(eps_hat, m)?)?;
    m.add_function(wrap_pyfunction!(log_eps_hat, m)?)?;
    m.add_function(wrap_pyfunction!(lifshits_log_tail, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_threshold_p, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(rate_infimum, m)?)?;
    m.add_function(wrap_pyfunction!(log_tail_asymptote, m)?)?;
    m.add_function(wrap_pyfunction!(log_ratio_asymptote, m)?)?;
    m.add_function(wrap_pyfunction!(power_transform, m)?)?;
    m.add_function(wrap_pyfunction!(tilt_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(sample_naive, m)?)?;
    m.add_function(wrap_pyfunction!(sample_is, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_log_slope, m)?)?;
    m.add_function(wrap_pyfunction!(check_product_condition, m)?)?;
    m.add_function(wrap_pyfunction!(check_series_condition, m)?)?;
    m.add_function(wrap_pyfunction!(check_power_condition, m)?)?;
    m.add_function(wrap_pyfunction!(wermuth_relations, m)?)?;
    m.add_function(wrap_pyfunction!(check_weighted_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_bernoulli_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_two_sided_bound, m)?)?;
    Ok(())
}
