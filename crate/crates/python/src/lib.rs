//! Python bindings. Exact quantities cross the boundary as
//! `fractions.Fraction`; probability tables as nested lists of them.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use jointprob::behavior::{self as bh, validate_behavior};
use jointprob::duplication::{self as dup, AgentRole, BuyPolicy, DuplicationExperiment};
use jointprob::induction::{self as ind, BbRule, ToyMachineConfig};
use jointprob::io::BehaviorFile;
use jointprob::membership::{self as mem, MembershipTest};
use jointprob::quantum::{self as qm, EwfsProtocol, StateFamily};
use jointprob::rational::{format_rational, parse_rational, Rational, RationalizeOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn frac<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((format_rational(r),))
}

/// Accepts int, float, str ("1/3", "0.25") or Fraction via its str form.
fn rational(v: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let text = v.str()?.to_string();
    parse_rational(&text, &RationalizeOptions::default()).map_err(value_err)
}

/// Exact conditional probability table p(ab|xy).
#[pyclass(name = "Behavior", module = "jointprob_py", frozen)]
pub struct PyBehavior {
    inner: bh::Behavior,
}

#[pymethods]
impl PyBehavior {
    /// Parses the JSON behavior-file format.
    #[staticmethod]
    #[pyo3(signature = (text, den_cap=None))]
    fn from_json(text: &str, den_cap: Option<u64>) -> PyResult<Self> {
        let opts = RationalizeOptions {
            max_den: den_cap,
            ..RationalizeOptions::default()
        };
        let inner = BehaviorFile::from_json(text)
            .and_then(|f| f.to_behavior(&opts))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        BehaviorFile::from_behavior(&self.inner).to_json()
    }

    #[staticmethod]
    fn pr_box() -> Self {
        Self { inner: bh::pr_box() }
    }

    #[staticmethod]
    #[pyo3(signature = (settings_a, settings_b, outcomes_a=2, outcomes_b=2))]
    fn uniform(settings_a: usize, settings_b: usize, outcomes_a: usize, outcomes_b: usize) -> PyResult<Self> {
        let s = bh::Scenario::new(settings_a, settings_b, outcomes_a, outcomes_b).map_err(value_err)?;
        Ok(Self {
            inner: bh::Behavior::uniform(s),
        })
    }

    /// Same table with the friend flags replaced.
    #[pyo3(signature = (friend_a=false, friend_b=false))]
    fn with_friends(&self, friend_a: bool, friend_b: bool) -> Self {
        Self {
            inner: self.inner.clone().with_scenario_flags(friend_a, friend_b),
        }
    }

    /// (settings_a, settings_b, outcomes_a, outcomes_b, friend_a, friend_b)
    #[getter]
    fn scenario(&self) -> (usize, usize, usize, usize, bool, bool) {
        let s = self.inner.scenario();
        (s.settings_a, s.settings_b, s.outcomes_a, s.outcomes_b, s.friend_on_a, s.friend_on_b)
    }

    /// Settings are 1-based, outcomes 0-based.
    fn p<'py>(&self, py: Python<'py>, x: usize, y: usize, a: usize, b: usize) -> PyResult<Bound<'py, PyAny>> {
        let s = self.inner.scenario();
        if !(1..=s.settings_a).contains(&x) || !(1..=s.settings_b).contains(&y) || a >= s.outcomes_a || b >= s.outcomes_b {
            return Err(PyValueError::new_err("index out of range"));
        }
        frac(py, self.inner.p(x, y, a, b))
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = validate_behavior(&self.inner);
        let d = PyDict::new(py);
        d.set_item("valid", r.is_valid())?;
        d.set_item("normalization", r.normalization_ok)?;
        d.set_item("nonnegativity", r.nonnegativity_ok)?;
        d.set_item("no_signalling", r.no_signalling_ok())?;
        Ok(d)
    }

    fn chsh<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        frac(py, &bh::chsh_value(&self.inner).map_err(value_err)?)
    }

    fn __repr__(&self) -> String {
        format!("Behavior({})", self.inner.scenario())
    }
}

/// Verdict of a membership test with its verified certificate.
#[pyclass(name = "Membership", module = "jointprob_py", frozen)]
pub struct PyMembership {
    inner: mem::Membership,
}

#[pymethods]
impl PyMembership {
    #[getter]
    fn feasible(&self) -> bool {
        self.inner.is_member()
    }

    #[getter]
    fn test(&self) -> &'static str {
        self.inner.encoding.test.name()
    }

    /// Witness weights (feasible) or Farkas functional (infeasible).
    #[getter]
    fn certificate<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        use jointprob::certificate::FeasibilityCertificate as F;
        let v = match &self.inner.certificate {
            F::Feasible { witness } => witness,
            F::Infeasible { functional } => functional,
        };
        v.iter().map(|r| frac(py, r)).collect()
    }

    /// Re-checks the certificate against the encoded problem.
    fn verify(&self) -> PyResult<bool> {
        self.inner.verify().map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(true)
    }

    /// Separating inequality: dict with `coefficients[(x, y)][a][b]`,
    /// `bound`, `value`, and for joint/LD the normalized form.
    #[pyo3(signature = (vertex_cap=bh::DEFAULT_VERTEX_CAP))]
    fn inequality<'py>(&self, py: Python<'py>, vertex_cap: u64) -> PyResult<Bound<'py, PyDict>> {
        let rep = mem::extract_inequality(&self.inner, vertex_cap).map_err(value_err)?;
        let d = PyDict::new(py);
        let s = rep.scenario;
        let ineq = |q: &mem::Inequality| -> PyResult<Bound<'py, PyDict>> {
            let out = PyDict::new(py);
            let coeffs = PyDict::new(py);
            for (x, y) in s.cells() {
                let mut rows = Vec::new();
                for a in 0..s.outcomes_a {
                    let row: PyResult<Vec<_>> = (0..s.outcomes_b)
                        .map(|b| frac(py, &q.coefficients[s.cell(x, y)][s.entry(a, b)]))
                        .collect();
                    rows.push(row?);
                }
                coeffs.set_item((x, y), rows)?;
            }
            out.set_item("coefficients", coeffs)?;
            out.set_item("bound", frac(py, &q.bound)?)?;
            Ok(out)
        };
        d.set_item("raw", ineq(&rep.raw)?)?;
        d.set_item("value", frac(py, &rep.raw_value)?)?;
        if let (Some(n), Some(v)) = (&rep.normalized, &rep.normalized_value) {
            d.set_item("normalized", ineq(n)?)?;
            d.set_item("normalized_value", frac(py, v)?)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Membership(test={}, feasible={})", self.test(), self.feasible())
    }
}

/// test is one of "joint", "ld", "lf", "sw".
#[pyfunction]
#[pyo3(signature = (test, behavior, vertex_cap=bh::DEFAULT_VERTEX_CAP))]
fn check(test: &str, behavior: &PyBehavior, vertex_cap: u64) -> PyResult<PyMembership> {
    let t = match test {
        "joint" => MembershipTest::Joint,
        "ld" => MembershipTest::Ld,
        "lf" => MembershipTest::Lf,
        "sw" => MembershipTest::Sw,
        _ => return Err(PyValueError::new_err(format!("unknown test {test:?}"))),
    };
    let inner = mem::check(t, &behavior.inner, vertex_cap).map_err(value_err)?;
    Ok(PyMembership { inner })
}

/// Returns (vertices_checked, samples_checked, infeasible_cases, disagreements).
#[pyfunction]
#[pyo3(signature = (settings_a, settings_b, samples, seed, vertex_cap=bh::DEFAULT_VERTEX_CAP))]
fn ld_sw_test(settings_a: usize, settings_b: usize, samples: usize, seed: u64, vertex_cap: u64) -> PyResult<(usize, usize, usize, usize)> {
    let r = mem::ld_sw_equivalence_test(settings_a, settings_b, samples, seed, vertex_cap).map_err(value_err)?;
    Ok((r.vertices_checked, r.samples_checked, r.infeasible_cases, r.disagreements.len()))
}

fn quantum_err(e: qm::QuantumError) -> PyErr {
    match e {
        qm::QuantumError::NotFound { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

/// Exact Born table of the friend protocol (Alice setting 1 is the
/// friend's copied Z record; `alice` gives angles for settings 2, 3, ...).
#[pyfunction]
#[pyo3(signature = (schmidt_angle, system_rotation, alice, bob, den_cap=1_000_000))]
fn born_behavior(schmidt_angle: f64, system_rotation: f64, alice: Vec<f64>, bob: Vec<f64>, den_cap: u64) -> PyResult<PyBehavior> {
    let p = EwfsProtocol::new(schmidt_angle, system_rotation, &alice, &bob).map_err(quantum_err)?;
    let b = qm::born_behavior(&p, den_cap).map_err(quantum_err)?;
    Ok(PyBehavior { inner: b.exact })
}

/// Returns (value, schmidt_angle, [alice1, alice2], [bob1, bob2]).
#[pyfunction]
#[pyo3(signature = (seed, iterations=20_000, product=false))]
fn chsh_optimize(seed: u64, iterations: usize, product: bool) -> (f64, f64, Vec<f64>, Vec<f64>) {
    let family = if product { StateFamily::Product } else { StateFamily::Entangled };
    let o = qm::chsh_optimize(seed, iterations, family);
    (o.value, o.schmidt_angle, o.alice.to_vec(), o.bob.to_vec())
}

/// Returns (candidate index, behavior, membership); raises RuntimeError
/// when the budget runs out.
#[pyfunction]
#[pyo3(signature = (seed, budget=1000, settings_a=3, settings_b=3, den_cap=1_000_000))]
fn lf_search(seed: u64, budget: usize, settings_a: usize, settings_b: usize, den_cap: u64) -> PyResult<(usize, PyBehavior, PyMembership)> {
    let r = qm::lf_violation_search(settings_a, settings_b, seed, budget, den_cap).map_err(quantum_err)?;
    Ok((r.index, PyBehavior { inner: r.born.exact }, PyMembership { inner: r.membership }))
}

fn rule(s: &str) -> PyResult<dup::CredenceRule> {
    jointprob::cli::parse_rule(s).map_err(|f| PyValueError::new_err(f.message))
}

/// (P(Heads), P(Tails)) for one agent in a single-lab experiment.
#[pyfunction]
#[pyo3(signature = (m, q, rule_name="elga", role="freya"))]
fn credence<'py>(py: Python<'py>, m: u64, q: &Bound<'py, PyAny>, rule_name: &str, role: &str) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let role = match role {
        "freya" => AgentRole::Freya,
        "wigner" => AgentRole::Wigner,
        _ => return Err(PyValueError::new_err("role must be 'freya' or 'wigner'")),
    };
    let e = DuplicationExperiment::with_offer(1, m, rational(q)?, Rational::new(1.into(), 100.into())).map_err(value_err)?;
    let c = dup::credence_outcome(&rule(rule_name)?, &e, role).map_err(value_err)?;
    Ok((frac(py, &c.heads)?, frac(py, &c.tails)?))
}

/// (P(Heads), P(Tails), c) from the copy-weighted binomial over n labs.
#[pyfunction]
fn binomial_credence<'py>(py: Python<'py>, n: u64, m: u64, q: &Bound<'py, PyAny>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let b = dup::credence_via_binomial(n, m, &rational(q)?).map_err(value_err)?;
    Ok((frac(py, &b.heads)?, frac(py, &b.tails)?, frac(py, &b.c)?))
}

/// (freya P(T), wigner P(T), consistent).
#[pyfunction]
#[pyo3(signature = (m, q, rule_f="elga", rule_w="elga"))]
fn cp_check<'py>(py: Python<'py>, m: u64, q: &Bound<'py, PyAny>, rule_f: &str, rule_w: &str) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>, bool)> {
    let r = dup::check_cp_consistency(&rule(rule_f)?, &rule(rule_w)?, m, &rational(q)?).map_err(value_err)?;
    Ok((frac(py, &r.freya_tails)?, frac(py, &r.wigner_tails)?, r.consistent))
}

/// Runs the betting simulation; returns (summary CSV, rows CSV).
#[pyfunction]
#[pyo3(signature = (n, m, q, runs, seed, eps="1/20"))]
fn simulate(n: u64, m: u64, q: &Bound<'_, PyAny>, runs: u64, seed: u64, eps: &str) -> PyResult<(String, String)> {
    let eps = parse_rational(eps, &RationalizeOptions::default()).map_err(value_err)?;
    let e = DuplicationExperiment::with_offer(n, m, rational(q)?, eps).map_err(value_err)?;
    let r = dup::simulate_betting(&e, runs, seed, &BuyPolicy::Always).map_err(value_err)?;
    Ok((r.summary_csv(), r.rows_csv()))
}

fn machine(max_len: u32, steps: u64) -> PyResult<ToyMachineConfig> {
    ToyMachineConfig::new(max_len, steps).map_err(value_err)
}

fn bits(s: &str) -> PyResult<Vec<bool>> {
    ind::parse_bits(s).map_err(value_err)
}

/// Lower bound on M(x) from programs up to `max_len` bits.
#[pyfunction]
#[pyo3(signature = (x, max_len=14, steps=10_000))]
fn estimate_m<'py>(py: Python<'py>, x: &str, max_len: u32, steps: u64) -> PyResult<Bound<'py, PyAny>> {
    let e = ind::estimate_m(&bits(x)?, &machine(max_len, steps)?).map_err(value_err)?;
    frac(py, &e.mass())
}

#[pyfunction]
#[pyo3(signature = (x, y, max_len=14, steps=10_000))]
fn conditional_m<'py>(py: Python<'py>, x: &str, y: &str, max_len: u32, steps: u64) -> PyResult<Bound<'py, PyAny>> {
    let c = ind::conditional_m(&bits(x)?, &bits(y)?, &machine(max_len, steps)?).map_err(value_err)?;
    frac(py, &c.value)
}

/// (P(OO), P(BB)) under "indifference" or "induction".
#[pyfunction]
#[pyo3(signature = (x, y_oo, y_bb, n_oo=1, n_bb=1000, rule_name="induction", max_len=14, steps=10_000))]
#[allow(clippy::too_many_arguments)]
fn bb_credence<'py>(
    py: Python<'py>,
    x: &str,
    y_oo: &str,
    y_bb: &str,
    n_oo: u64,
    n_bb: u64,
    rule_name: &str,
    max_len: u32,
    steps: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let r = match rule_name {
        "indifference" => BbRule::Indifference,
        "induction" => BbRule::Induction,
        _ => return Err(PyValueError::new_err("rule must be 'indifference' or 'induction'")),
    };
    let c = ind::bb_credence(&bits(x)?, &bits(y_oo)?, &bits(y_bb)?, n_oo, n_bb, r, &machine(max_len, steps)?)
        .map_err(value_err)?;
    Ok((frac(py, &c.ordinary)?, frac(py, &c.thermal)?))
}

#[pymodule]
fn jointprob_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBehavior>()?;
    m.add_class::<PyMembership>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(ld_sw_test, m)?)?;
    m.add_function(wrap_pyfunction!(born_behavior, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(lf_search, m)?)?;
    m.add_function(wrap_pyfunction!(credence, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_credence, m)?)?;
    m.add_function(wrap_pyfunction!(cp_check, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_m, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_m, m)?)?;
    m.add_function(wrap_pyfunction!(bb_credence, m)?)?;
    m.add("MACHINE", ind::MACHINE_ID)?;
    Ok(())
}
