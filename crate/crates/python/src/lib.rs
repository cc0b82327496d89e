use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use swival::bellman::{extract_policy, lift_value, value_iterate, AngularValue, IterationOptions};
use swival::construction::{build_irrational_variant_with_rho, build_rational_variant, ctilde as ct};
use swival::iem::{gap_statistics, IemMap};
use swival::jsr::jsr_bounds as jsr;
use swival::probe::kink_ladder as ladder;
use swival::threshold::{profile_table as table, solve_thresholds, ExactValue, DEFAULT_DEPTH, DEFAULT_TOL};
use swival::{Error, Matrix, Objective, QuadraticCost, SwitchedSystem};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Input(_)
        | Error::Domain(_)
        | Error::UnsupportedDimension { .. }
        | Error::Structural(_)
        | Error::Json(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn objective(name: &str) -> PyResult<Objective> {
    match name {
        "min" => Ok(Objective::Min),
        "max" => Ok(Objective::Max),
        other => Err(PyValueError::new_err(format!("objective must be 'min' or 'max', got {other:?}"))),
    }
}

fn system(modes: Vec<Vec<Vec<f64>>>) -> PyResult<SwitchedSystem> {
    let m = modes
        .iter()
        .map(|rows| Matrix::from_rows(rows))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    SwitchedSystem::new(m).map_err(to_py)
}

/// Scaled-rotation pair `rho R(alpha)`, `rho R(alpha - pi/2)` with cost `x1^2 + 2 x2^2`.
#[pyclass(name = "RotationSystem", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRotationSystem {
    inner: swival::RotationSystem,
}

#[pymethods]
impl PyRotationSystem {
    #[staticmethod]
    fn rational() -> Self {
        Self {
            inner: build_rational_variant().rotation,
        }
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, rho = 0.01))]
    fn irrational(alpha: f64, rho: f64) -> PyResult<Self> {
        Ok(Self {
            inner: build_irrational_variant_with_rho(alpha, rho).map_err(to_py)?.rotation,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    /// Mode matrices as lists of rows.
    fn modes(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.system().modes().iter().map(Matrix::to_rows).collect()
    }

    fn delta_ctilde(&self, theta: f64) -> f64 {
        self.inner.delta_ctilde(theta)
    }

    /// Returns `(nu, omega)`.
    #[pyo3(signature = (tol = DEFAULT_TOL, depth = DEFAULT_DEPTH))]
    fn thresholds(&self, tol: f64, depth: usize) -> PyResult<(f64, f64)> {
        let s = solve_thresholds(&self.inner, tol, depth).map_err(to_py)?;
        Ok((s.policy.nu, s.policy.omega))
    }

    fn __repr__(&self) -> String {
        format!(
            "RotationSystem(alpha={}, rho={})",
            self.inner.alpha, self.inner.rho
        )
    }
}

/// Optimal (`objective="min"`) or worst-case (`"max"`) value function of a
/// rotation system, evaluated by its orbit series.
#[pyclass(name = "ValueFunction", frozen)]
struct PyValueFunction {
    inner: ExactValue,
}

#[pymethods]
impl PyValueFunction {
    #[new]
    #[pyo3(signature = (system, objective = "min"))]
    fn new(system: &PyRotationSystem, objective: &str) -> PyResult<Self> {
        let o = self::objective(objective)?;
        Ok(Self {
            inner: ExactValue::solve(system.inner, o).map_err(to_py)?,
        })
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.policy.nu
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.policy.omega
    }

    /// Value on the unit circle at angle `theta`.
    fn angular(&self, theta: f64) -> f64 {
        self.inner.angular(theta)
    }

    /// Value at a planar state.
    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        lift_value(&self.inner, &x, None).map_err(to_py)
    }

    /// Mode chosen at angle `theta` (0 or 1).
    fn mode(&self, theta: f64) -> usize {
        self.inner.policy.branch(theta).mode()
    }
}

#[pyfunction]
fn ctilde(theta: f64) -> f64 {
    ct(theta)
}

/// `(lower, upper)` bounds on the joint spectral radius from products of length `depth`.
#[pyfunction]
#[pyo3(signature = (modes, depth = 3))]
fn jsr_bounds(modes: Vec<Vec<Vec<f64>>>, depth: usize) -> PyResult<(f64, f64)> {
    let b = jsr(&system(modes)?, depth).map_err(to_py)?;
    Ok((b.lower, b.upper))
}

/// Grid value iteration for a planar system. Returns `(values, modes, iterations, residual)`.
#[pyfunction]
#[pyo3(signature = (modes, cost, objective = "min", grid = 4096, tol = 1e-12, max_iter = 1000))]
fn value_iterate_grid(
    modes: Vec<Vec<Vec<f64>>>,
    cost: Vec<Vec<f64>>,
    objective: &str,
    grid: usize,
    tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<f64>, Vec<usize>, usize, f64)> {
    let sys = system(modes)?;
    let q = QuadraticCost::new(Matrix::from_rows(&cost).map_err(to_py)?).map_err(to_py)?;
    let o = self::objective(objective)?;
    let opts = IterationOptions {
        grid,
        tol,
        max_iter,
        horizon: None,
    };
    let (p, r) = value_iterate(&sys, &q, o, &opts).map_err(to_py)?;
    let policy = extract_policy(&p, &sys, &q, o).map_err(to_py)?;
    Ok((p.values().to_vec(), policy, r.iterations, r.residual))
}

/// Backward orbit of `nu` under the exchange map with angles `alpha`, `alpha - pi/2`.
#[pyfunction]
fn backward_orbit(nu: f64, alpha: f64, depth: usize) -> PyResult<Vec<f64>> {
    let iem = IemMap::new(nu, alpha, alpha - std::f64::consts::FRAC_PI_2).map_err(to_py)?;
    Ok(iem.backward_orbit(nu, depth).map_err(to_py)?.points)
}

/// `(max_gap, distinct_gaps)` of the backward orbit on the circle of length pi/2.
#[pyfunction]
fn orbit_gaps(nu: f64, alpha: f64, depth: usize) -> PyResult<(f64, Vec<f64>)> {
    let iem = IemMap::new(nu, alpha, alpha - std::f64::consts::FRAC_PI_2).map_err(to_py)?;
    let orbit = iem.backward_orbit(nu, depth).map_err(to_py)?;
    let s = gap_statistics(&orbit).map_err(to_py)?;
    Ok((s.max_gap, s.distinct_gaps))
}

/// Kink reports at the backward orbit of `nu`, as dictionaries.
#[pyfunction]
#[pyo3(signature = (system, max_depth = 3))]
fn kink_ladder<'py>(
    py: Python<'py>,
    system: &PyRotationSystem,
    max_depth: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rot = system.inner;
    let policy = solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH).map_err(to_py)?.policy;
    ladder(&policy, &rot, max_depth)
        .map_err(to_py)?
        .into_iter()
        .map(|k| {
            let d = PyDict::new(py);
            d.set_item("location", k.location)?;
            d.set_item("depth", k.depth)?;
            d.set_item("left_derivative", k.left_derivative)?;
            d.set_item("right_derivative", k.right_derivative)?;
            d.set_item("gap", k.gap)?;
            d.set_item("predicted_gap", k.predicted_gap)?;
            d.set_item("fd_gap", k.fd_gap)?;
            d.set_item("fd_confirmed", k.fd_confirmed)?;
            d.set_item("below_floating_floor", k.below_floating_floor)?;
            Ok(d)
        })
        .collect()
}

/// Rows `(theta, ctilde, jstar, jworst, delta_jstar)` over `[-pi, pi)`.
#[pyfunction]
#[pyo3(signature = (system, points = 1000))]
fn profile_table(system: &PyRotationSystem, points: usize) -> PyResult<Vec<(f64, f64, f64, f64, f64)>> {
    let rot = system.inner;
    let policy = solve_thresholds(&rot, DEFAULT_TOL, DEFAULT_DEPTH).map_err(to_py)?.policy;
    Ok(table(&rot, &policy, points, DEFAULT_DEPTH)
        .map_err(to_py)?
        .into_iter()
        .map(|r| (r.theta, r.ctilde, r.jstar, r.jworst, r.delta_jstar))
        .collect())
}

#[pymodule]
#[pyo3(name = "swival")]
fn swival_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRotationSystem>()?;
    m.add_class::<PyValueFunction>()?;
    m.add_function(wrap_pyfunction!(ctilde, m)?)?;
    m.add_function(wrap_pyfunction!(jsr_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(value_iterate_grid, m)?)?;
    m.add_function(wrap_pyfunction!(backward_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(orbit_gaps, m)?)?;
    m.add_function(wrap_pyfunction!(kink_ladder, m)?)?;
    m.add_function(wrap_pyfunction!(profile_table, m)?)?;
    Ok(())
}
