//! Python bindings. Exact results come back as `fractions.Fraction`;
//! rational arguments accept `int`, `Fraction`, decimal `float` or strings
//! such as `"2/3"`.

use mabinogion::apolicy::{PolicyA, PolicyASequences};
use mabinogion::asymptotics::{self, AuditQuantity};
use mabinogion::exact::{self, ExactRational};
use mabinogion::mprocess;
use mabinogion::recursion::ChainQuantity;
use mabinogion::sim::{self, SimConfig};
use mabinogion::strategy::{self, Quantity, StrategySpec};
use mabinogion::{identities, Error};
use num_bigint::BigInt;
use pyo3::exceptions::{PyOverflowError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Overflow => PyOverflowError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPyErr<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPyErr<T> for mabinogion::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn fraction<'py>(py: Python<'py>, x: &ExactRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((x.numer().clone(), x.denom().clone()))
}

fn fractions<'py>(py: Python<'py>, xs: &[ExactRational]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    xs.iter().map(|x| fraction(py, x)).collect()
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<ExactRational> {
    if let Ok(s) = obj.extract::<String>() {
        return exact::parse_rational(&s).py();
    }
    if let Ok(n) = obj.extract::<BigInt>() {
        return Ok(ExactRational::from_integer(n));
    }
    if let (Ok(num), Ok(den)) = (obj.getattr("numerator"), obj.getattr("denominator")) {
        let (num, den) = (num.extract::<BigInt>()?, den.extract::<BigInt>()?);
        if den == BigInt::from(0) {
            return Err(PyValueError::new_err("zero denominator"));
        }
        return Ok(ExactRational::new(num, den));
    }
    let x: f64 = obj.extract()?;
    // the shortest repr, so 0.1 means 1/10
    exact::parse_rational(&obj.repr()?.to_string())
        .map_err(|_| PyValueError::new_err(format!("{x} is not a finite decimal")))
}

/// An urn with `white` and `black` balls.
#[pyclass(frozen, eq, hash, from_py_object, module = "mabinogion")]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct UrnState {
    inner: mprocess::UrnState,
}

#[pymethods]
impl UrnState {
    #[new]
    fn new(white: u64, black: u64) -> Self {
        Self { inner: mprocess::UrnState::new(white, black) }
    }

    #[getter]
    fn white(&self) -> u64 {
        self.inner.white
    }

    #[getter]
    fn black(&self) -> u64 {
        self.inner.black
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    fn is_absorbing(&self) -> bool {
        self.inner.is_absorbing()
    }

    fn __repr__(&self) -> String {
        format!("UrnState(white={}, black={})", self.inner.white, self.inner.black)
    }
}

/// A removal rule: `"none"`, `"A"`, `"R"` or `"q:<rational>"`.
#[pyclass(frozen, skip_from_py_object, module = "mabinogion")]
#[derive(Clone)]
pub struct Strategy {
    inner: StrategySpec,
}

#[pymethods]
impl Strategy {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: spec.parse().py()? })
    }

    /// The `q`-threshold strategy.
    #[staticmethod]
    fn threshold(q: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(Self { inner: StrategySpec::threshold(rational(q)?).py()? })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    /// Whites removed in `(white, black)`.
    fn removal(&self, white: u64, black: u64) -> u64 {
        self.inner.removal(mprocess::UrnState::new(white, black))
    }

    fn apply(&self, white: u64, black: u64) -> UrnState {
        UrnState { inner: self.inner.apply(mprocess::UrnState::new(white, black)) }
    }

    fn __repr__(&self) -> String {
        format!("Strategy({:?})", self.inner.label())
    }
}

fn strategy_arg(obj: &Bound<'_, PyAny>) -> PyResult<StrategySpec> {
    if let Ok(s) = obj.cast::<Strategy>() {
        return Ok(s.get().inner.clone());
    }
    let spec: String = obj.extract()?;
    spec.parse().py()
}

/// Monte Carlo summary; `paths` holds `(step, black)` lists when recorded.
#[pyclass(frozen, get_all, module = "mabinogion")]
pub struct SimulationSummary {
    runs: u64,
    mean_h: f64,
    stderr_h: f64,
    mean_final_black: f64,
    stderr_final_black: f64,
    mean_discounted: Option<f64>,
    stderr_discounted: Option<f64>,
    prob_all_black: f64,
    paths: Vec<Vec<(u64, u64)>>,
}

impl From<sim::SimulationSummary> for SimulationSummary {
    fn from(s: sim::SimulationSummary) -> Self {
        Self {
            runs: s.runs,
            mean_h: s.mean_h,
            stderr_h: s.stderr_h,
            mean_final_black: s.mean_final_black,
            stderr_final_black: s.stderr_final_black,
            mean_discounted: s.mean_discounted,
            stderr_discounted: s.stderr_discounted,
            prob_all_black: s.prob_all_black,
            paths: s.paths.into_iter().map(|p| p.points.into_iter().map(|pt| (pt.step, pt.black)).collect()).collect(),
        }
    }
}

#[pymethods]
impl SimulationSummary {
    /// Scalar fields as a dict.
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("runs", self.runs)?;
        d.set_item("mean_h", self.mean_h)?;
        d.set_item("stderr_h", self.stderr_h)?;
        d.set_item("mean_final_black", self.mean_final_black)?;
        d.set_item("stderr_final_black", self.stderr_final_black)?;
        d.set_item("mean_discounted", self.mean_discounted)?;
        d.set_item("stderr_discounted", self.stderr_discounted)?;
        d.set_item("prob_all_black", self.prob_all_black)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("SimulationSummary(runs={}, mean_h={}, stderr_h={})", self.runs, self.mean_h, self.stderr_h)
    }
}

fn state(white: u64, black: u64) -> mprocess::UrnState {
    mprocess::UrnState::new(white, black)
}

/// Probability of ending all black.
#[pyfunction]
fn absorb_prob_black(py: Python<'_>, white: u64, black: u64) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &mprocess::absorb_prob_black(state(white, black)).py()?)
}

/// Expected final number of black balls.
#[pyfunction]
fn expected_final_black(py: Python<'_>, white: u64, black: u64) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &mprocess::expected_final_black(state(white, black)).py()?)
}

/// Expected absorption time of the uncontrolled urn.
#[pyfunction]
fn expected_time(py: Python<'_>, white: u64, black: u64) -> PyResult<Bound<'_, PyAny>> {
    let v = py.detach(|| mprocess::expected_time(state(white, black))).py()?;
    fraction(py, &v)
}

/// `T(k, k)` from the odd harmonic sum.
#[pyfunction]
fn expected_time_symmetric(py: Python<'_>, k: u64) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &mprocess::expected_time_symmetric(k))
}

/// Expected absorption time given that the urn ends all black.
#[pyfunction]
fn conditional_expected_time(py: Python<'_>, white: u64, black: u64) -> PyResult<Bound<'_, PyAny>> {
    let v = py.detach(|| mprocess::conditional_expected_time(state(white, black))).py()?;
    fraction(py, &v)
}

/// `C(2k, k) / 4^k`.
#[pyfunction]
fn central_prob(py: Python<'_>, k: u64) -> PyResult<Bound<'_, PyAny>> {
    fraction(py, &exact::central_prob(k))
}

/// `V^A(w, b)`.
#[pyfunction]
fn policy_a_final_black(py: Python<'_>, white: u64, black: u64) -> PyResult<Bound<'_, PyAny>> {
    let st = state(white, black);
    let v = py.detach(|| PolicyA::for_total(st.total()).final_black(st)).py()?;
    fraction(py, &v)
}

/// `T^A(w, b)`.
#[pyfunction]
fn policy_a_time(py: Python<'_>, white: u64, black: u64) -> PyResult<Bound<'_, PyAny>> {
    let st = state(white, black);
    let v = py.detach(|| PolicyA::for_total(st.total()).time(st)).py()?;
    fraction(py, &v)
}

/// `([v_1..v_kmax], [t_1..t_kmax])`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn policy_a_sequences(py: Python<'_>, k_max: u64) -> PyResult<(Vec<Bound<'_, PyAny>>, Vec<Bound<'_, PyAny>>)> {
    let seq = py.detach(|| PolicyASequences::new(k_max));
    let v: Vec<ExactRational> = (1..=k_max).map(|k| seq.v(k).clone()).collect();
    let t: Vec<ExactRational> = (1..=k_max).map(|k| seq.t(k).clone()).collect();
    Ok((fractions(py, &v)?, fractions(py, &t)?))
}

#[pyfunction]
fn phi(k: u64, q: &Bound<'_, PyAny>) -> PyResult<u64> {
    strategy::phi(k, &rational(q)?).py()
}

#[pyfunction]
fn p_q<'py>(py: Python<'py>, k: u64, q: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &strategy::p_q(k, &rational(q)?).py()?)
}

/// `[V^q(phi(k), k) for k in 1..=k_max]`.
#[pyfunction]
fn v_q_sequence<'py>(py: Python<'py>, k_max: u64, q: &Bound<'py, PyAny>) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let q = rational(q)?;
    let seq = py.detach(|| strategy::v_q_sequence(k_max, &q)).py()?;
    fractions(py, &seq)
}

/// Strategy DP value. `quantity` is `"final-black"`, `"time"` or
/// `"discounted"`; discounting at `mu > 0` returns a float.
#[pyfunction]
#[pyo3(signature = (white, black, strategy, quantity = "final-black", mu = 0.0))]
fn strategy_value<'py>(
    py: Python<'py>,
    white: u64,
    black: u64,
    strategy: &Bound<'py, PyAny>,
    quantity: &str,
    mu: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = strategy_arg(strategy)?;
    let quantity = match quantity {
        "final-black" => Quantity::FinalBlack,
        "time" => Quantity::Time,
        "discounted" => Quantity::Discounted(mu),
        other => return Err(PyValueError::new_err(format!("unknown quantity {other:?}"))),
    };
    let st = state(white, black);
    let value = py.detach(|| strategy::exact_value_under_strategy(st, &spec, quantity)).py()?;
    match value.exact() {
        Some(x) => fraction(py, x),
        None => Ok(value.to_f64().into_pyobject(py)?.into_any()),
    }
}

/// Reference value from the full linear system; `discount_factor` is an
/// exact per-step factor for `"final-black"`.
#[pyfunction]
#[pyo3(signature = (white, black, strategy = None, quantity = "final-black", discount_factor = None))]
fn oracle_value<'py>(
    py: Python<'py>,
    white: u64,
    black: u64,
    strategy: Option<&Bound<'py, PyAny>>,
    quantity: &str,
    discount_factor: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = strategy.map(strategy_arg).transpose()?.unwrap_or(StrategySpec::None);
    let quantity = match quantity {
        "final-black" => ChainQuantity::TerminalPayoff,
        "time" => ChainQuantity::TotalCost,
        other => return Err(PyValueError::new_err(format!("unknown quantity {other:?}"))),
    };
    let factor = discount_factor.map(rational).transpose()?;
    let st = state(white, black);
    let v = py.detach(|| strategy::brute_force_under_strategy(st, &spec, quantity, factor.as_ref())).py()?;
    fraction(py, &v)
}

/// `[(identity, n, holds)]` for `1 <= n <= n_max`.
#[pyfunction]
fn verify_identities(py: Python<'_>, n_max: u64) -> Vec<(&'static str, u64, bool)> {
    py.detach(|| identities::verify_identities(n_max))
        .into_iter()
        .map(|r| (r.identity.label(), r.n, r.holds))
        .collect()
}

#[pyfunction]
fn approx_t_sym(k: u64) -> f64 {
    asymptotics::approx_t_sym(k)
}

#[pyfunction]
fn approx_v_a(k: u64) -> f64 {
    asymptotics::approx_v_a(k)
}

#[pyfunction]
fn approx_t_a(k: u64) -> f64 {
    asymptotics::approx_t_a(k)
}

#[pyfunction]
fn approx_t_skewed(n: u64, x: f64) -> PyResult<f64> {
    asymptotics::approx_t_skewed(n, x).py()
}

/// Asymptotic formula against exact values. `quantity` is one of `t-sym`,
/// `v-a`, `t-a`, `p`, `ratio-v`, `ratio-t`, `t-skewed:<x>`.
#[pyfunction]
fn audit<'py>(py: Python<'py>, quantity: &str, params: Vec<u64>) -> PyResult<Bound<'py, PyList>> {
    let quantity: AuditQuantity = quantity.parse().py()?;
    let reports = py.detach(|| asymptotics::audit(&quantity, &params)).py()?;
    let out = PyList::empty(py);
    for r in reports {
        let d = PyDict::new(py);
        d.set_item("parameter", r.parameter)?;
        d.set_item("exact", r.exact)?;
        d.set_item("approx", r.approx)?;
        d.set_item("abs_err", r.abs_err)?;
        d.set_item("rel_err", r.rel_err)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Monte Carlo simulation; deterministic given `seed`, `runs` and
/// `batch_size`, whatever the thread count.
#[pyfunction]
#[pyo3(signature = (
    white, black, strategy = None, runs = 10_000, seed = 0, mu = None,
    conditional = false, record_paths = false, batch_size = 250, threads = None
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    white: u64,
    black: u64,
    strategy: Option<&Bound<'_, PyAny>>,
    runs: u64,
    seed: u64,
    mu: Option<f64>,
    conditional: bool,
    record_paths: bool,
    batch_size: u64,
    threads: Option<usize>,
) -> PyResult<SimulationSummary> {
    let spec = strategy.map(strategy_arg).transpose()?.unwrap_or(StrategySpec::None);
    let mut config = SimConfig::new(state(white, black), spec)
        .runs(runs)
        .seed(seed)
        .conditional(conditional)
        .record_paths(record_paths)
        .batch_size(batch_size)
        .threads(threads);
    config.mu = mu;
    Ok(py.detach(|| sim::simulate(&config)).py()?.into())
}

/// Simulated `(q, mu)` grid; one dict per cell, strategy-major.
#[pyfunction]
#[pyo3(signature = (white, black, q_values, mus, runs = 10_000, seed = 0, threads = None))]
#[allow(clippy::too_many_arguments)]
fn scan_q<'py>(
    py: Python<'py>,
    white: u64,
    black: u64,
    q_values: Vec<Bound<'py, PyAny>>,
    mus: Vec<f64>,
    runs: u64,
    seed: u64,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyList>> {
    let qs = q_values.iter().map(rational).collect::<PyResult<Vec<_>>>()?;
    let cells = py.detach(|| sim::scan_q(state(white, black), &qs, runs, &mus, seed, threads)).py()?;
    let out = PyList::empty(py);
    for cell in cells {
        let d = SimulationSummary::from(cell.summary).to_dict(py)?;
        d.set_item("strategy", cell.strategy)?;
        d.set_item("mu", cell.mu)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Policy A absorption times over `totals` and the published black fractions.
#[pyfunction]
#[pyo3(signature = (totals = None, runs = 10_000, large_runs = None, seed = 0, threads = None))]
fn simulate_table1<'py>(
    py: Python<'py>,
    totals: Option<Vec<u64>>,
    runs: u64,
    large_runs: Option<u64>,
    seed: u64,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyList>> {
    let mut config = sim::Table1Config { runs, large_runs, seed, threads, ..Default::default() };
    if let Some(t) = totals {
        config.totals = t;
    }
    let cells = py.detach(|| sim::simulate_table1(&config)).py()?;
    let out = PyList::empty(py);
    for cell in cells {
        let d = SimulationSummary::from(cell.summary).to_dict(py)?;
        d.set_item("total", cell.total)?;
        d.set_item("fraction", cell.fraction)?;
        d.set_item("white", cell.start.white)?;
        d.set_item("black", cell.start.black)?;
        out.append(d)?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "mabinogion")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<UrnState>()?;
    m.add_class::<Strategy>()?;
    m.add_class::<SimulationSummary>()?;
    m.add_function(wrap_pyfunction!(absorb_prob_black, m)?)?;
    m.add_function(wrap_pyfunction!(expected_final_black, m)?)?;
    m.add_function(wrap_pyfunction!(expected_time, m)?)?;
    m.add_function(wrap_pyfunction!(expected_time_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_expected_time, m)?)?;
    m.add_function(wrap_pyfunction!(central_prob, m)?)?;
    m.add_function(wrap_pyfunction!(policy_a_final_black, m)?)?;
    m.add_function(wrap_pyfunction!(policy_a_time, m)?)?;
    m.add_function(wrap_pyfunction!(policy_a_sequences, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(p_q, m)?)?;
    m.add_function(wrap_pyfunction!(v_q_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(strategy_value, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_value, m)?)?;
    m.add_function(wrap_pyfunction!(verify_identities, m)?)?;
    m.add_function(wrap_pyfunction!(approx_t_sym, m)?)?;
    m.add_function(wrap_pyfunction!(approx_v_a, m)?)?;
    m.add_function(wrap_pyfunction!(approx_t_a, m)?)?;
    m.add_function(wrap_pyfunction!(approx_t_skewed, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(scan_q, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_table1, m)?)?;
    Ok(())
}
