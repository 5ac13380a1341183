use std::collections::BTreeMap;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use wban_core::sim::{self, Estimate};
use wban_core::sweep::{self, Config, Mode};
use wban_core::{metrics, solver, Error, Mechanism, Traffic, NUM_UPS};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Convergence { .. } | Error::StaleState => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// One experiment: node counts, traffic, channel and access-phase settings.
#[pyclass(module = "wban", from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: wban_core::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (
        nodes_per_up = None, node_counts = None, arrival_rate = None, ber = None,
        payload_bytes = None, eap1 = None, rap1 = None, mechanism = None, traffic = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        nodes_per_up: Option<u32>,
        node_counts: Option<[u32; NUM_UPS]>,
        arrival_rate: Option<f64>,
        ber: Option<f64>,
        payload_bytes: Option<u32>,
        eap1: Option<f64>,
        rap1: Option<f64>,
        mechanism: Option<&str>,
        traffic: Option<&str>,
    ) -> PyResult<Self> {
        let mut sc = wban_core::Scenario::default();
        if let Some(n) = nodes_per_up {
            sc.node_counts = [n; NUM_UPS];
        }
        if let Some(c) = node_counts {
            sc.node_counts = c;
        }
        if let Some(l) = arrival_rate {
            sc.arrival_rates = [l; NUM_UPS];
        }
        if let Some(b) = ber {
            sc.ber = b;
        }
        if let Some(p) = payload_bytes {
            sc.payload_bytes = p;
        }
        if let Some(v) = eap1 {
            sc.eap1_len = v;
        }
        if let Some(v) = rap1 {
            sc.rap1_len = v;
        }
        if let Some(m) = mechanism {
            sc.mechanism = m.parse::<Mechanism>().map_err(to_py)?;
        }
        if let Some(t) = traffic {
            sc.traffic = t.parse::<Traffic>().map_err(to_py)?;
        }
        sc.validate().map_err(to_py)?;
        Ok(Self { inner: sc })
    }

    /// Builds a scenario from TOML text in the CLI config format.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = sweep::parse_config_str(text).map_err(to_py)?;
        Ok(Self { inner: cfg.scenario().clone() })
    }

    #[getter]
    fn node_counts(&self) -> [u32; NUM_UPS] {
        self.inner.node_counts
    }

    #[getter]
    fn ber(&self) -> f64 {
        self.inner.ber
    }

    #[getter]
    fn payload_bytes(&self) -> u32 {
        self.inner.payload_bytes
    }

    #[getter]
    fn mechanism(&self) -> &'static str {
        self.inner.mechanism.as_str()
    }

    #[getter]
    fn traffic(&self) -> &'static str {
        self.inner.traffic.as_str()
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Scenario(node_counts={:?}, ber={}, payload_bytes={}, eap1={}, rap1={}, mechanism='{}', traffic='{}')",
            s.node_counts, s.ber, s.payload_bytes, s.eap1_len, s.rap1_len, s.mechanism, s.traffic
        )
    }
}

/// Converged fixed point of the per-priority Markov chains.
#[pyclass(module = "wban", get_all, skip_from_py_object)]
struct Solution {
    iterations: usize,
    residual: f64,
    tau: Vec<f64>,
    p_fail: Vec<f64>,
    p_coll: Vec<f64>,
    rho: Vec<f64>,
    p_tran_eap: f64,
    p_tran_rap: f64,
    t_e_eap: f64,
    t_e_rap: f64,
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!("Solution(iterations={}, residual={:e}, tau={:?})", self.iterations, self.residual, self.tau)
    }
}

/// Solves the coupled fixed-point system of a scenario.
#[pyfunction]
fn solve(py: Python<'_>, scenario: &Scenario) -> PyResult<Solution> {
    let sc = scenario.inner.clone();
    let sol = py.detach(|| solver::solve_fixed_point(&sc)).map_err(to_py)?;
    let per_up = |f: fn(&solver::UpSolution) -> f64| sol.ups.iter().map(f).collect::<Vec<_>>();
    Ok(Solution {
        iterations: sol.diagnostics.iterations,
        residual: sol.diagnostics.residual,
        tau: per_up(|u| u.tau),
        p_fail: per_up(|u| u.p_fail),
        p_coll: per_up(|u| u.p_coll),
        rho: per_up(|u| u.rho),
        p_tran_eap: sol.channel.p_tran_eap,
        p_tran_rap: sol.channel.p_tran_rap,
        t_e_eap: sol.t_e_eap,
        t_e_rap: sol.t_e_rap,
    })
}

type Metrics = BTreeMap<&'static str, Option<f64>>;

/// Analytical reliability, normalized throughput, energy per state (J) and
/// access delay (s), one dict per priority. Absent priorities map to None.
#[pyfunction]
fn evaluate(py: Python<'_>, scenario: &Scenario) -> PyResult<Vec<Metrics>> {
    let sc = scenario.inner.clone();
    let report = py
        .detach(|| solver::solve_fixed_point(&sc).and_then(|s| metrics::evaluate(&s, &sc)))
        .map_err(to_py)?;
    Ok(report
        .ups
        .iter()
        .map(|m| {
            BTreeMap::from([
                ("reliability", m.reliability),
                ("throughput", m.throughput),
                ("energy", m.energy),
                ("delay", m.delay),
            ])
        })
        .collect())
}

/// Simulates `replications` runs and returns per-priority means and 95%
/// half-widths (keys `<metric>` and `<metric>_hw`), plus the total number of
/// protocol-audit violations.
#[pyfunction]
#[pyo3(signature = (scenario, seed = 1, horizon = 60.0, replications = 1, parallel = 0))]
fn simulate(
    py: Python<'_>,
    scenario: &Scenario,
    seed: u64,
    horizon: f64,
    replications: u32,
    parallel: usize,
) -> PyResult<(Vec<Metrics>, u64)> {
    let sc = scenario.inner.clone();
    let runs = py
        .detach(|| sim::run_replications(&sc, seed, horizon, replications, parallel))
        .map_err(to_py)?;
    let violations = runs.iter().map(|r| r.audit.total()).sum();
    let est = sim::summarize(&runs, &sc);
    let rows = est
        .iter()
        .map(|e| {
            let mut m = Metrics::new();
            let mut put = |name: &'static str, hw: &'static str, v: Option<Estimate>| {
                m.insert(name, v.map(|x| x.mean));
                m.insert(hw, v.map(|x| x.half_width));
            };
            put("reliability", "reliability_hw", e.reliability);
            put("throughput", "throughput_hw", e.throughput);
            put("energy", "energy_hw", e.energy);
            put("delay", "delay_hw", e.delay);
            m
        })
        .collect();
    Ok((rows, violations))
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(to_py)
}

/// Runs a named preset (`fig5` .. `fig12`) and returns the CSV table.
#[pyfunction]
#[pyo3(signature = (name, mode = "analytical", parallel = 0))]
fn reproduce(py: Python<'_>, name: &str, mode: &str, parallel: usize) -> PyResult<String> {
    let mode = parse_mode(mode)?;
    let specs = sweep::preset(name).map_err(to_py)?;
    py.detach(|| sweep::run_sweeps(&specs, mode, parallel)?.to_csv_string()).map_err(to_py)
}

/// Runs the sweep described by TOML text and returns the CSV table.
#[pyfunction]
#[pyo3(signature = (config, mode = "analytical", parallel = 0))]
fn run_sweep(py: Python<'_>, config: &str, mode: &str, parallel: usize) -> PyResult<String> {
    let mode = parse_mode(mode)?;
    let spec = match sweep::parse_config_str(config).map_err(to_py)? {
        Config::Sweep(s) => s,
        Config::Scenario(_) => return Err(PyValueError::new_err("config has no [sweep] table")),
    };
    py.detach(|| sweep::run_sweeps(&[spec], mode, parallel)?.to_csv_string()).map_err(to_py)
}

#[pymodule]
fn wban(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add("NUM_UPS", NUM_UPS)?;
    Ok(())
}
