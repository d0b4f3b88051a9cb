//! Python bindings: the dyadic scalar type plus one entry point per core
//! area. Dyadic values cross the boundary as exact fraction strings
//! ("m/2^s") or `Dyadic` objects; prefixes cross as Python ints.

// The pyfunction macro expansion trips this lint on its own glue.
#![allow(clippy::useless_conversion)]

use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::pyclass::CompareOp;
use pyo3::types::PyDict;

use omegalab::coding;
use omegalab::construction::{self, Adversary, AdversaryPolicy};
use omegalab::corpus;
use omegalab::dyadic::Dyadic;
use omegalab::games::{self, UseSpec};
use omegalab::machines;
use omegalab::usefn::{self, Signature, UseTable};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn obj(py: Python<'_>, d: Dyadic) -> PyObject {
    PyDyadic::from(d).into_py(py)
}

fn parse_dyadic(s: &str) -> PyResult<Dyadic> {
    s.parse::<Dyadic>().map_err(err)
}

fn parse_seq(values: Vec<String>) -> PyResult<coding::ApproxSequence> {
    let parsed: Vec<Dyadic> =
        values.iter().map(|s| parse_dyadic(s)).collect::<PyResult<_>>()?;
    coding::ApproxSequence::new(parsed).map_err(err)
}

fn sig_from_parts(parts: Vec<(u64, u64, u64)>) -> PyResult<Signature> {
    Signature::from_parts(&parts).map_err(err)
}

fn table(g: Vec<u64>) -> PyResult<UseTable> {
    UseTable::new(g).map_err(err)
}

/// An exact dyadic rational `mantissa / 2^scale`.
#[pyclass(name = "Dyadic")]
#[derive(Clone)]
struct PyDyadic {
    inner: Dyadic,
}

impl From<Dyadic> for PyDyadic {
    fn from(inner: Dyadic) -> Self {
        PyDyadic { inner }
    }
}

#[pymethods]
impl PyDyadic {
    /// From a fraction string "m/2^s" (or a plain integer string), or from
    /// (mantissa, scale) integers.
    #[new]
    #[pyo3(signature = (value, scale=None))]
    fn new(value: &Bound<'_, PyAny>, scale: Option<u64>) -> PyResult<Self> {
        if let Ok(s) = value.extract::<String>() {
            return Ok(parse_dyadic(&s)?.into());
        }
        let mantissa: BigUint = value.extract()?;
        Ok(Dyadic::new(mantissa, scale.unwrap_or(0)).into())
    }

    fn fraction(&self) -> String {
        self.inner.to_fraction_string()
    }

    fn binary(&self) -> String {
        self.inner.to_binary_string()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// floor(value * 2^len) as an int.
    fn prefix(&self, len: u64) -> BigUint {
        self.inner.prefix(len)
    }

    /// The 1-based binary digit at a position right of the point.
    fn digit(&self, pos: u64) -> u8 {
        self.inner.digit(pos)
    }

    /// Smallest addition that changes the first `demand` digits.
    fn least_increment(&self, demand: u64) -> PyDyadic {
        self.inner.least_increment(demand).into()
    }

    fn __add__(&self, other: &PyDyadic) -> PyDyadic {
        (&self.inner + &other.inner).into()
    }

    fn __richcmp__(&self, other: &PyDyadic, op: CompareOp) -> bool {
        op.matches(self.inner.cmp(&other.inner))
    }

    fn __str__(&self) -> String {
        self.inner.to_fraction_string()
    }

    fn __repr__(&self) -> String {
        format!("Dyadic(\"{}\")", self.inner.to_fraction_string())
    }
}

/// Final value of the constant-offset game on (k, k+n]: n * 2^(-k-c).
#[pyfunction]
fn predict_atomic(n: u64, k: u64, c: u64) -> PyDyadic {
    games::predict_atomic(n, k, c).into()
}

fn use_spec(c: Option<u64>, g: Option<Vec<u64>>) -> PyResult<UseSpec> {
    match (c, g) {
        (Some(c), None) => Ok(UseSpec::Offset { c }),
        (None, Some(g)) => Ok(UseSpec::PlusTable(table(g)?)),
        _ => Err(err("pass exactly one of c= or g=")),
    }
}

/// Exact final value of the least-effort response on (lo, hi] under
/// h(x) = x + c or h(x) = x + g(x).
#[pyfunction]
#[pyo3(signature = (lo, hi, c=None, g=None))]
fn least_effort_final(lo: u64, hi: u64, c: Option<u64>, g: Option<Vec<u64>>) -> PyResult<PyDyadic> {
    let spec = use_spec(c, g)?;
    Ok(games::least_effort_final(&spec, lo, hi).map_err(err)?.into())
}

/// Plays the full game and returns (final_gamma, total_steps, digest_hex).
#[pyfunction]
#[pyo3(signature = (lo, hi, c=None, g=None))]
fn play_hload(
    lo: u64,
    hi: u64,
    c: Option<u64>,
    g: Option<Vec<u64>>,
) -> PyResult<(PyDyadic, u64, String)> {
    let spec = use_spec(c, g)?;
    let config =
        games::HloadConfig::new(spec, lo, hi).map_err(err)?.with_record_limit(0);
    let trace = games::hload(&config, &mut games::LeastEffort).map_err(err)?;
    Ok((trace.final_state.gamma.clone().into(), trace.total_steps, format!("{:016x}", trace.digest)))
}

/// The truncation constraint (and floor, when defined) for the general
/// least-effort game over a run-length signature.
#[pyfunction]
fn predict_general<'py>(
    py: Python<'py>,
    parts: Vec<(u64, u64, u64)>,
    k: usize,
    t: usize,
    m: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let sig = sig_from_parts(parts)?;
    let pred = games::predict_general(&sig, k, t, m).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("constraint", obj(py, pred.constraint))?;
    out.set_item("truncation_constant", pred.truncation_constant)?;
    out.set_item("floor", pred.floor.map(|f| obj(py, f)))?;
    Ok(out)
}

/// The recursively truncated interval weights S_k(0..k-1).
#[pyfunction]
fn truncated_sums(parts: Vec<(u64, u64, u64)>, k: usize) -> PyResult<Vec<PyDyadic>> {
    let sig = sig_from_parts(parts)?;
    let sums = omegalab::bounds::truncated_sums(&sig, k).map_err(err)?;
    Ok((0..k).map(|i| PyDyadic::from(sums.value(i).expect("in range").clone())).collect())
}

/// Whether S_k(t) >= (sum of the last t+1 interval weights) - 1.
#[pyfunction]
fn lower_bound_holds(parts: Vec<(u64, u64, u64)>, k: usize, t: usize) -> PyResult<bool> {
    let sig = sig_from_parts(parts)?;
    Ok(omegalab::bounds::lower_bound_report(&sig, k, t).map_err(err)?.holds)
}

/// (gamma, claimed) when the run's final value beats the naive weight
/// bound on (lo, hi]; None otherwise.
#[pyfunction]
fn false_bound_case(
    parts: Vec<(u64, u64, u64)>,
    lo: u64,
    hi: u64,
) -> PyResult<Option<(PyDyadic, PyDyadic)>> {
    let sig = sig_from_parts(parts)?;
    let case = games::false_bound_case(&sig, lo, hi).map_err(err)?;
    Ok(case.map(|c| (c.gamma.into(), c.claimed.into())))
}

/// Runs the standard ladder construction with capped least-effort
/// adversaries and summarizes the outcome.
#[pyfunction]
#[pyo3(signature = (e_count, stage_budget=None))]
fn run_ladder_construction<'py>(
    py: Python<'py>,
    e_count: usize,
    stage_budget: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let sig = corpus::plan_signature(e_count).map_err(err)?;
    let plan = usefn::build_plan(&sig, e_count).map_err(err)?;
    let pool =
        Adversary::pool(&plan, AdversaryPolicy::LeastEffort { cap: true }).map_err(err)?;
    let budget = stage_budget.unwrap_or_else(|| construction::default_stage_budget(&plan));
    let run = construction::run_construction(&plan, pool, budget, 0).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("boundaries", plan.boundaries.clone())?;
    out.set_item("total_stages", run.trace.total_stages)?;
    out.set_item("digest", format!("{:016x}", run.trace.digest))?;
    out.set_item("budget_exhausted", run.trace.budget_exhausted)?;
    out.set_item("final_alpha", obj(py, run.final_alpha().clone()))?;
    out.set_item("final_beta", obj(py, run.final_beta().clone()))?;
    let outcomes: Vec<String> =
        run.trace.outcomes.iter().map(|r| format!("{:?}", r.outcome)).collect();
    out.set_item("outcomes", outcomes)?;
    let gammas: Vec<PyObject> =
        run.trace.outcomes.iter().map(|r| obj(py, r.final_gamma.clone())).collect();
    out.set_item("gammas", gammas)?;
    Ok(out)
}

/// Characteristic-set coding of a monotone approximation, as a bit string
/// of length 2^n - 1.
#[pyfunction]
fn encode_set(values: Vec<String>, n: u32) -> PyResult<String> {
    let a = parse_seq(values)?;
    Ok(coding::encode_set(&a, n).map_err(err)?.to_string())
}

/// Replays the approximation against a coded set and returns
/// (prefix_int, match_stage, set_bits_read).
#[pyfunction]
fn decode_real(bits: &str, values: Vec<String>, n: u32) -> PyResult<(BigUint, usize, u64)> {
    let coded = coding::CodedSet::from_bits(bits).map_err(err)?;
    let a = parse_seq(values)?;
    let dec = coding::decode_real(&coded, &a, n).map_err(err)?;
    Ok((dec.prefix, dec.match_stage, dec.set_bits_read))
}

/// One coded-set bit computed from the limit real, with its oracle meter:
/// (bit, digits_consulted).
#[pyfunction]
fn set_bit_from_real(values: Vec<String>, index: u64) -> PyResult<(u8, u64)> {
    let a = parse_seq(values)?;
    let mut oracle = coding::RealOracle::new(a.final_value().clone());
    let sb = coding::set_from_real(&mut oracle, &a, index).map_err(err)?;
    Ok((sb.bit, sb.digits_consulted))
}

/// Kraft allocation: one codeword per requested length, None once the
/// request no longer fits. Lengths are served in the order given.
#[pyfunction]
fn kraft_alloc(lengths: Vec<u64>) -> PyResult<Vec<Option<String>>> {
    let mut kc = machines::KCState::new();
    let words = lengths.into_iter().map(|len| kc.alloc(len).ok()).collect();
    kc.check_invariants().map_err(err)?;
    Ok(words)
}

/// Least argument threshold c with (sum of 2^(-g(n)) for n > c) < 1.
#[pyfunction]
fn weight_threshold(g: Vec<u64>) -> PyResult<u64> {
    machines::weight_threshold(&table(g)?).map_err(err)
}

/// Builds the reduction tables and decides every argument above the
/// threshold from the final oracle prefix: returns
/// {threshold, request_weight, bits}.
#[pyfunction]
fn decide_members<'py>(
    py: Python<'py>,
    enumeration: Vec<(u64, usize)>,
    g: Vec<u64>,
    omega: Vec<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let g = table(g)?;
    let omega = parse_seq(omega)?;
    let tables = machines::build_reduction(&enumeration, &g, &omega).map_err(err)?;
    let mut bits = Vec::new();
    for n in tables.threshold + 1..=g.len() {
        let oracle = omega.final_value().prefix(g.get(n).expect("covered"));
        let d = machines::decide_member(n, &oracle, &g, &tables, &enumeration, &omega)
            .map_err(err)?;
        bits.push((n, d.bit));
    }
    let out = PyDict::new_bound(py);
    out.set_item("threshold", tables.threshold)?;
    out.set_item("request_weight", obj(py, tables.total_request_weight()))?;
    out.set_item("bits", bits)?;
    Ok(out)
}

/// Solovay test summary for a tracked pair: {items, weight, bound, within}.
#[pyfunction]
fn solovay_summary<'py>(
    py: Python<'py>,
    a: Vec<String>,
    omega: Vec<String>,
    g: Vec<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let ledger =
        machines::solovay_items(&parse_seq(a)?, &parse_seq(omega)?, &table(g)?).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("items", ledger.items.len())?;
    out.set_item("weight", obj(py, ledger.weight.clone()))?;
    out.set_item("bound", obj(py, ledger.bound.clone()))?;
    out.set_item("within", ledger.weight <= ledger.bound)?;
    Ok(out)
}

/// First n digits of the tracked real recovered from an oracle prefix of
/// length n + g(n) of it (self-reduction), as an int.
#[pyfunction]
fn reduce_self_prefix(omega: Vec<String>, g: Vec<u64>, n: u64) -> PyResult<BigUint> {
    let omega = parse_seq(omega)?;
    let g = table(g)?;
    let gn = g.get(n).ok_or_else(|| err(format!("table does not cover {n}")))?;
    let oracle = omega.final_value().prefix(n + gn);
    Ok(machines::reduce_real(n, &oracle, &g, &omega, &omega).map_err(err)?.prefix)
}

/// Number of condensation sandwich violations for a nonincreasing table of
/// fraction strings covering 2^t_max terms.
#[pyfunction]
fn condensation_violations(f: Vec<String>, t_max: u32) -> PyResult<usize> {
    let parsed: Vec<Dyadic> = f.iter().map(|s| parse_dyadic(s)).collect::<PyResult<_>>()?;
    Ok(usefn::condensation_check(&parsed, t_max).map_err(err)?.violations)
}

#[pymodule]
fn omegalab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDyadic>()?;
    m.add_function(wrap_pyfunction!(predict_atomic, m)?)?;
    m.add_function(wrap_pyfunction!(least_effort_final, m)?)?;
    m.add_function(wrap_pyfunction!(play_hload, m)?)?;
    m.add_function(wrap_pyfunction!(predict_general, m)?)?;
    m.add_function(wrap_pyfunction!(truncated_sums, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_holds, m)?)?;
    m.add_function(wrap_pyfunction!(false_bound_case, m)?)?;
    m.add_function(wrap_pyfunction!(run_ladder_construction, m)?)?;
    m.add_function(wrap_pyfunction!(encode_set, m)?)?;
    m.add_function(wrap_pyfunction!(decode_real, m)?)?;
    m.add_function(wrap_pyfunction!(set_bit_from_real, m)?)?;
    m.add_function(wrap_pyfunction!(kraft_alloc, m)?)?;
    m.add_function(wrap_pyfunction!(weight_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(decide_members, m)?)?;
    m.add_function(wrap_pyfunction!(solovay_summary, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_self_prefix, m)?)?;
    m.add_function(wrap_pyfunction!(condensation_violations, m)?)?;
    Ok(())
}
