//! Python bindings: grid loading, DC power flow, the attacker oracle,
//! placement solvers and cascade simulation, driven in-process.
//!
//! Complex results (witnesses, traces, cascade reports) cross the boundary
//! as plain dicts/lists built from their JSON form.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use ppop_core::attack::{
    solve_attacker_seeded, AttackGoal, AttackParams, PmuPlacement, ScedMode, SolveOutcome,
};
use ppop_core::bigm::compute_bigm;
use ppop_core::cases;
use ppop_core::grid::{load_matpower, parse_matpower, GridModel, LineSet};
use ppop_core::placement::{
    aodc, aong, full_observability, greedy_degree, heuristic_place, HeuristicKnobs, SolveBudget,
};

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(runtime_err)?;
    json_to_py(py, &value)
}

/// An immutable DC grid model.
#[pyclass(name = "Grid")]
struct PyGrid {
    inner: GridModel,
}

#[pymethods]
impl PyGrid {
    /// Loads a bundled case (`ieee30`, `ieee57`, `ieee118`, `triangle3`) or
    /// a MATPOWER file path.
    #[staticmethod]
    #[pyo3(signature = (case, gamma = 1.2))]
    fn load(case: &str, gamma: f64) -> PyResult<Self> {
        let inner = match cases::bundled(case) {
            Some(text) => parse_matpower(text, gamma).map_err(value_err)?,
            None => {
                let mut g = load_matpower(case).map_err(value_err)?;
                g.set_uniform_gamma(gamma);
                g
            }
        };
        Ok(PyGrid { inner })
    }

    #[getter]
    fn n_buses(&self) -> usize {
        self.inner.n_buses()
    }

    #[getter]
    fn n_lines(&self) -> usize {
        self.inner.n_lines()
    }

    #[getter]
    fn bus_ids(&self) -> Vec<u32> {
        self.inner.bus_ids().to_vec()
    }

    #[getter]
    fn p0(&self) -> Vec<f64> {
        self.inner.p0().to_vec()
    }

    /// Lines as (from_bus_id, to_bus_id, reactance, f_max, gamma).
    fn lines(&self) -> Vec<(u32, u32, f64, f64, f64)> {
        self.inner
            .lines()
            .iter()
            .map(|l| {
                (
                    self.inner.bus_id(l.from),
                    self.inner.bus_id(l.to),
                    l.reactance,
                    l.f_max,
                    l.gamma,
                )
            })
            .collect()
    }

    #[pyo3(signature = (outages = vec![]))]
    fn connected_without(&self, outages: Vec<usize>) -> bool {
        self.inner.connected_without(&outages.into_iter().collect())
    }

    /// DC power flow: returns (theta, flows).
    #[pyo3(signature = (injections, outages = vec![]))]
    fn dc_flow(&self, injections: Vec<f64>, outages: Vec<usize>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let st = self
            .inner
            .dc_flow(&injections, &outages.into_iter().collect())
            .map_err(value_err)?;
        Ok((st.theta, st.flows))
    }

    /// Rounds of overload tripping from the physical outages `ap` under a
    /// fixed dispatch.
    fn cascade<'py>(
        &self,
        py: Python<'py>,
        dispatch: Vec<f64>,
        ap: Vec<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let report = self
            .inner
            .cascade_simulate(&dispatch, &ap.into_iter().collect::<LineSet>());
        serialize_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(buses={}, lines={})",
            self.inner.n_buses(),
            self.inner.n_lines()
        )
    }
}

/// Attacker capability knobs (alpha, xi_p, xi_c, sced mode).
#[pyclass(name = "Params", skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: AttackParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (alpha = 0.25, xi_p = 2, xi_c = None, sced = "relaxed"))]
    fn new(alpha: f64, xi_p: usize, xi_c: Option<usize>, sced: &str) -> PyResult<Self> {
        let sced_mode = match sced {
            "relaxed" => ScedMode::Relaxed,
            "kkt" => ScedMode::Kkt,
            other => return Err(value_err(format!("sced must be relaxed|kkt, got {other}"))),
        };
        Ok(PyParams {
            inner: AttackParams {
                alpha,
                xi_p,
                xi_c,
                sced_mode,
                load_range: None,
                placement_mask: None,
            },
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(alpha={}, xi_p={}, xi_c={:?})",
            self.inner.alpha, self.inner.xi_p, self.inner.xi_c
        )
    }
}

fn placement_from_ids(grid: &GridModel, ids: Vec<u32>) -> PyResult<PmuPlacement> {
    PmuPlacement::from_bus_ids(grid, &ids).map_err(value_err)
}

/// Maximum number of lines an undetectable attack can trip under the given
/// PMU placement; returns a dict with `psi_a` and, when positive, `witness`.
#[pyfunction]
#[pyo3(signature = (grid, params, placement, budget_s = 600.0, seed = 0))]
fn solve_attacker<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    params: &PyParams,
    placement: Vec<u32>,
    budget_s: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let beta = placement_from_ids(&grid.inner, placement)?;
    let bigm = compute_bigm(&grid.inner, &params.inner);
    let out = solve_attacker_seeded(
        &grid.inner,
        &params.inner,
        &beta,
        &bigm,
        Some(budget_s),
        AttackGoal::MaxTrips,
        seed,
    )
    .map_err(runtime_err)?;
    let result = PyDict::new(py);
    match out {
        SolveOutcome::NoAttack => {
            result.set_item("psi_a", 0)?;
            result.set_item("witness", py.None())?;
        }
        SolveOutcome::Attack(w) => {
            result.set_item("psi_a", w.objective)?;
            result.set_item("witness", serialize_to_py(py, &w)?)?;
        }
    }
    Ok(result.into_any())
}

/// Runs a placement algorithm; returns a dict with bus ids, count,
/// verification verdict and the iteration trace.
#[pyfunction]
#[pyo3(signature = (grid, params, algo, budget_s = 1800.0, kc = 10, ka = 10, kl = 10, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn place<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    params: &PyParams,
    algo: &str,
    budget_s: f64,
    kc: usize,
    ka: usize,
    kl: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let bigm = compute_bigm(&grid.inner, &params.inner);
    let budget = SolveBudget::new(budget_s);
    let outcome = match algo {
        "aong" => aong(&grid.inner, &params.inner, &bigm, &budget),
        "aodc" => aodc(&grid.inner, &params.inner, &bigm, &budget),
        "heuristic" => {
            let knobs = HeuristicKnobs { kc, ka, kl, seed };
            heuristic_place(&grid.inner, &params.inner, &bigm, &knobs, &budget)
        }
        "greedy-degree" => greedy_degree(&grid.inner, &params.inner, &bigm, &budget),
        other => return Err(value_err(format!("unknown algorithm `{other}`"))),
    }
    .map_err(runtime_err)?;
    let result = PyDict::new(py);
    result.set_item("bus_ids", outcome.placement.bus_ids(&grid.inner))?;
    result.set_item("count", outcome.placement.count())?;
    result.set_item("verified", outcome.verified)?;
    result.set_item("optimal", outcome.optimal)?;
    result.set_item("trace", serialize_to_py(py, &outcome.trace)?)?;
    Ok(result.into_any())
}

/// Minimum dominating-set placement for full observability; `pins` are bus
/// ids that must be included.
#[pyfunction]
#[pyo3(signature = (grid, pins = vec![]))]
fn observability_placement(grid: &PyGrid, pins: Vec<u32>) -> PyResult<Vec<u32>> {
    let pin_idx: Vec<usize> = pins
        .iter()
        .map(|&id| {
            grid.inner
                .bus_index(id)
                .ok_or_else(|| value_err(format!("unknown bus id {id}")))
        })
        .collect::<PyResult<_>>()?;
    let placement = full_observability(&grid.inner, &pin_idx).map_err(runtime_err)?;
    Ok(placement.bus_ids(&grid.inner))
}

#[pymodule]
fn ppop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(solve_attacker, m)?)?;
    m.add_function(wrap_pyfunction!(place, m)?)?;
    m.add_function(wrap_pyfunction!(observability_placement, m)?)?;
    Ok(())
}
