//! Python bindings for the beamcast planner.
//!
//! User indices are 0-based on the Python side.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use beamcast::mdp::ExactOptions;
use beamcast::phy::{self, ReceptionMode, UserSet};
use beamcast::sim::{SimConfig, SimStats, DEFAULT_RUNS};
use beamcast::sweep::{self as sweeps, SweepConfig, SweepRow};
use beamcast::{Error, LinkTable, PolicyKind};

create_exception!(beamcast_py, BeamcastError, PyException);
create_exception!(beamcast_py, CapacityError, BeamcastError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Validation(_) => PyValueError::new_err(e.to_string()),
        Error::Capacity(_) => CapacityError::new_err(e.to_string()),
        _ => BeamcastError::new_err(e.to_string()),
    }
}

fn parse_kind(name: &str) -> PyResult<PolicyKind> {
    name.parse().map_err(to_py)
}

fn parse_mode(name: Option<&str>, scenario: Option<&beamcast::Scenario>) -> PyResult<ReceptionMode> {
    match name {
        None => Ok(scenario.map(|s| s.reception_mode).unwrap_or_default()),
        Some("worst-user") => Ok(ReceptionMode::WorstUser),
        Some("per-user") => Ok(ReceptionMode::PerUser),
        Some(other) => Err(PyValueError::new_err(format!("unknown reception mode {other:?}"))),
    }
}

fn group(members: &[usize], n: usize) -> PyResult<UserSet> {
    let mut g = UserSet::empty();
    for &i in members {
        if i >= n {
            return Err(PyValueError::new_err(format!("user index {i} out of range for {n} users")));
        }
        g.insert(i);
    }
    if g.is_empty() {
        return Err(PyValueError::new_err("a beam needs at least one user"));
    }
    Ok(g)
}

/// A validated transmission scenario.
#[pyclass(frozen, skip_from_py_object, module = "beamcast_py")]
#[derive(Clone)]
struct Scenario {
    inner: beamcast::Scenario,
}

#[pymethods]
impl Scenario {
    /// Eight users of the reference layout.
    #[staticmethod]
    fn table1() -> Self {
        Scenario { inner: beamcast::Scenario::table1() }
    }

    /// Two users 8 degrees apart.
    #[staticmethod]
    fn two_user() -> Self {
        Scenario { inner: beamcast::Scenario::two_user() }
    }

    /// A JSON path, or `@table1` / `@twouser`.
    #[staticmethod]
    fn load(spec: &str) -> PyResult<Self> {
        beamcast::Scenario::load(spec).map(|inner| Scenario { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        beamcast::Scenario::from_json(text).map(|inner| Scenario { inner }).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Copy with a different packet demand and deadline; `x_cap` becomes `2 m`.
    fn with_protocol(&self, m: u32, r_max: u32) -> PyResult<Self> {
        let inner = self.inner.with_protocol(m, r_max);
        inner.validate().map_err(to_py)?;
        Ok(Scenario { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users()
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.m
    }

    #[getter]
    fn r_max(&self) -> u32 {
        self.inner.r_max
    }

    #[getter]
    fn x_cap(&self) -> u32 {
        self.inner.x_cap
    }

    /// `(radius_m, angle_deg)` per user.
    #[getter]
    fn users(&self) -> Vec<(f64, f64)> {
        self.inner.users.iter().map(|u| (u.radius_m, u.angle_deg)).collect()
    }

    #[getter]
    fn schemes(&self) -> Vec<String> {
        self.inner.modulations.iter().map(|s| s.name.clone()).collect()
    }

    /// Seconds per MAC packet for each modulation scheme.
    fn packet_durations(&self) -> Vec<f64> {
        let bits = self.inner.packet_bits();
        self.inner.modulations.iter().map(|s| phy::packet_duration(s, bits, &self.inner.phy)).collect()
    }

    /// Decode probability `[scheme][k]` of each member of the beam that
    /// covers exactly `members`.
    fn decode_probs(&self, members: Vec<usize>) -> PyResult<Vec<Vec<f64>>> {
        let g = group(&members, self.inner.n_users())?;
        let links = LinkTable::build(&self.inner, [g]).map_err(to_py)?;
        Ok(links.get(g).map_err(to_py)?.per_user.clone())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, users={}, m={}, r_max={})",
            self.inner.name,
            self.inner.n_users(),
            self.inner.m,
            self.inner.r_max
        )
    }
}

/// A solved transmission policy.
#[pyclass(frozen, module = "beamcast_py")]
struct Policy {
    inner: Arc<dyn beamcast::Policy>,
    epsilon: f64,
    mode: ReceptionMode,
}

#[pymethods]
impl Policy {
    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The solver's expected cost from the initial state.
    #[getter]
    fn expected_cost(&self) -> f64 {
        self.inner.expected_cost()
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users()
    }

    /// Beams for slot `t` as `(members, packets, scheme)` tuples.
    fn actions(&self, residuals: Vec<u32>, t: u32) -> PyResult<Vec<(Vec<usize>, u32, usize)>> {
        if residuals.len() != self.inner.n_users() {
            return Err(PyValueError::new_err(format!("expected {} residuals", self.inner.n_users())));
        }
        let set = self.inner.actions(&residuals, t).map_err(to_py)?;
        Ok(set.beams.iter().map(|b| (b.group.iter().collect(), b.packets, b.scheme)).collect())
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }

    /// Monte-Carlo replay; returns the summary statistics as a dict.
    #[pyo3(signature = (runs = DEFAULT_RUNS, seed = 1, mode = None))]
    fn simulate<'py>(&self, py: Python<'py>, runs: u64, seed: u64, mode: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
        let mode = match mode {
            None => self.mode,
            Some(_) => parse_mode(mode, None)?,
        };
        let config = SimConfig { runs, seed, mode };
        let policy = self.inner.clone();
        let stats = py.detach(move || beamcast::sim::simulate(policy.as_ref(), &config)).map_err(to_py)?;
        stats_dict(py, &stats, self.epsilon)
    }

    fn __repr__(&self) -> String {
        format!("Policy(kind={}, epsilon={:e}, J0={:e})", self.inner.kind(), self.epsilon, self.inner.expected_cost())
    }
}

fn stats_dict<'py>(py: Python<'py>, s: &SimStats, eps: f64) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let (cost, se) = s.cost_estimate(eps);
    d.set_item("runs", s.runs)?;
    d.set_item("seed", s.seed)?;
    d.set_item("mean_duration_s", s.mean_duration)?;
    d.set_item("ci_duration_s", s.ci_duration)?;
    d.set_item("mean_failures", s.mean_failures)?;
    d.set_item("ci_failures", s.ci_failures)?;
    d.set_item("mean_cost", cost)?;
    d.set_item("se_cost", se)?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, r: &SweepRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scenario", &r.scenario)?;
    d.set_item("policy", &r.policy)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("m", r.m)?;
    d.set_item("rmax", r.rmax)?;
    d.set_item("mean_duration_s", r.mean_duration_s)?;
    d.set_item("ci_duration_s", r.ci_duration_s)?;
    d.set_item("mean_failures", r.mean_failures)?;
    d.set_item("ci_failures", r.ci_failures)?;
    d.set_item("J0", r.j0)?;
    d.set_item("n_runs", r.n_runs)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Solves `policy` ("exact", "hierarchical", "unicast" or "broadcast") at penalty `epsilon`.
#[pyfunction]
#[pyo3(signature = (scenario, epsilon, policy = "hierarchical", allow_large_exact = false))]
fn solve(py: Python<'_>, scenario: &Scenario, epsilon: f64, policy: &str, allow_large_exact: bool) -> PyResult<Policy> {
    let kind = parse_kind(policy)?;
    let s = scenario.inner.clone();
    let exact = ExactOptions { allow_large: allow_large_exact, ..Default::default() };
    let solved = py
        .detach(move || {
            let links = sweeps::links_for(&s, kind, &exact)?;
            sweeps::solve_policy(&s, kind, epsilon, links, &exact)
        })
        .map_err(to_py)?;
    Ok(Policy { inner: Arc::from(solved), epsilon, mode: scenario.inner.reception_mode })
}

/// Solve-and-simulate over penalties; `epsilons=None` uses the default grid.
#[pyfunction]
#[pyo3(signature = (scenario, policy = "hierarchical", epsilons = None, runs = DEFAULT_RUNS, seed = 1, mode = None))]
fn sweep<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    policy: &str,
    epsilons: Option<Vec<f64>>,
    runs: u64,
    seed: u64,
    mode: Option<&str>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = SweepConfig {
        kind: parse_kind(policy)?,
        epsilons: epsilons.unwrap_or_default(),
        sim: SimConfig { runs, seed, mode: parse_mode(mode, Some(&scenario.inner))? },
        exact: ExactOptions::default(),
    };
    let s = scenario.inner.clone();
    let rows = py.detach(move || sweeps::sweep(&s, &config)).map_err(to_py)?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

/// The default 12-point penalty grid for a scenario.
#[pyfunction]
fn default_epsilons(scenario: &Scenario) -> Vec<f64> {
    sweeps::default_epsilons(&scenario.inner)
}

/// Main-lobe gain of a sectored antenna; `tx_gain(2*pi, z) == 1`.
#[pyfunction]
fn tx_gain(beamwidth: f64, sidelobe_gain: f64) -> PyResult<f64> {
    phy::tx_gain(beamwidth, sidelobe_gain).map_err(to_py)
}

#[pymodule]
fn beamcast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Policy>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(default_epsilons, m)?)?;
    m.add_function(wrap_pyfunction!(tx_gain, m)?)?;
    m.add("BeamcastError", m.py().get_type::<BeamcastError>())?;
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add("TWO_PI", phy::TWO_PI)?;
    Ok(())
}
