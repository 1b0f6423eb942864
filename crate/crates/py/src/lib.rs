//! Python bindings. Fields cross the boundary as flat lists: scalar fields
//! as `(n+1)^2` nodal values, vector fields as `2n^2` `(x, y)` pairs, in the
//! storage order of the Rust types.

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rough_plaplace::estimates::{self, EstimateReport, Experiment, ExperimentSetup, Thresholds};
use rough_plaplace::hodge::PoissonSolver;
use rough_plaplace::norms::{
    counterexample_diagonal, grand_lebesgue_norm, lebesgue_avg_norm, luxemburg_norm, marcinkiewicz_norm, zygmund_norm,
};
use rough_plaplace::solver::{rough_field as make_rough, solve_homogeneous, OperatorSpec, RoughKind, SolveOptions};
use rough_plaplace::{Error, Magnitudes, VectorField, ZygmundParams};

create_exception!(rough_plaplace_py, SolverError, PyRuntimeError);
create_exception!(rough_plaplace_py, CheckFailed, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Parse { .. } | Error::Csv(_) => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::SolverFailure { .. } | Error::StructureViolation(_) => SolverError::new_err(e.to_string()),
        Error::Assertion(_) => CheckFailed::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for rough_plaplace::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Uniform triangulation of the unit square with `n` cells per side.
#[pyclass(name = "Grid", frozen)]
pub struct PyGrid {
    inner: rough_plaplace::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: rough_plaplace::Grid::new(n).py_err()?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        (0..self.inner.num_nodes())
            .map(|k| {
                let [x, y] = self.inner.node_coords(k);
                (x, y)
            })
            .collect()
    }

    fn centroids(&self) -> Vec<(f64, f64)> {
        (0..self.inner.num_triangles())
            .map(|t| {
                let [x, y] = self.inner.centroid(t);
                (x, y)
            })
            .collect()
    }

    /// Per-triangle gradient of nodal values.
    fn gradient(&self, u: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        let u = self.inner.scalar(u).py_err()?;
        Ok(pairs(&self.inner.gradient(&u)))
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={})", self.inner.n())
    }
}

fn pairs(f: &VectorField) -> Vec<(f64, f64)> {
    f.values().iter().map(|v| (v[0], v[1])).collect()
}

fn vector(grid: &rough_plaplace::Grid, values: Vec<(f64, f64)>) -> rough_plaplace::Result<VectorField> {
    grid.vector(values.into_iter().map(|(x, y)| [x, y]).collect())
}

/// All norms of per-triangle magnitudes on an `n`-grid, as a dict.
#[pyfunction]
#[pyo3(signature = (values, n, q, alpha, eps0 = None))]
fn norms<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    n: usize,
    q: f64,
    alpha: f64,
    eps0: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = rough_plaplace::Grid::new(n).py_err()?;
    let g = Magnitudes::on_grid(&grid, &values).py_err()?;
    let mut params = ZygmundParams::with_defaults(q, alpha).py_err()?;
    if let Some(e) = eps0 {
        params = params.with_eps0(e).py_err()?;
    }
    let (lux, zyg) = py.detach(|| (luxemburg_norm(&g, &params), zygmund_norm(&g, &params)));
    let d = PyDict::new(py);
    d.set_item("luxemburg", lux)?;
    d.set_item("zygmund", zyg)?;
    d.set_item("grand", grand_lebesgue_norm(&g, q, alpha).py_err()?)?;
    d.set_item("marcinkiewicz", marcinkiewicz_norm(&g, q).py_err()?)?;
    d.set_item("lebesgue", lebesgue_avg_norm(&g, q).py_err()?)?;
    d.set_item("eps0", params.eps0)?;
    d.set_item("a", params.a_const)?;
    Ok(d)
}

/// `(eps, eps^(alpha/q) ||f_eps||_(q-eps))` for the extremal fields.
#[pyfunction]
fn counterexample(eps: Vec<f64>, q: f64, alpha: f64, n: usize) -> PyResult<Vec<(f64, f64)>> {
    let grid = rough_plaplace::Grid::new(n).py_err()?;
    let params = ZygmundParams::with_defaults(q, alpha).py_err()?;
    counterexample_diagonal(&eps, &params, &grid).py_err()
}

/// Samples a rough field from a spec such as `"point-singularity:beta=0.5"`.
#[pyfunction]
fn rough_field(spec: &str, n: usize) -> PyResult<Vec<(f64, f64)>> {
    let grid = rough_plaplace::Grid::new(n).py_err()?;
    let kind: RoughKind = spec.parse().py_err()?;
    Ok(pairs(&make_rough(&kind, &grid).py_err()?))
}

/// Solves `div |grad u|^(p-2) grad u = div f`, `u = 0` on the boundary.
/// Pass exactly one of `f` (per-triangle pairs) or `rough` (a data spec).
#[pyfunction]
#[pyo3(signature = (n, p, f = None, rough = None, tol = 1e-10))]
fn solve<'py>(
    py: Python<'py>,
    n: usize,
    p: f64,
    f: Option<Vec<(f64, f64)>>,
    rough: Option<&str>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let grid = rough_plaplace::Grid::new(n).py_err()?;
    let data = match (f, rough) {
        (Some(f), None) => vector(&grid, f).py_err()?,
        (None, Some(spec)) => make_rough(&spec.parse().py_err()?, &grid).py_err()?,
        _ => return Err(PyValueError::new_err("pass exactly one of `f` and `rough`")),
    };
    let spec = OperatorSpec::identity(&grid, p).py_err()?;
    let res = py
        .detach(|| solve_homogeneous(&grid, &spec, &data, &SolveOptions::with_tol(tol)))
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("u", res.u.values().to_vec())?;
    d.set_item("iterations", res.iterations)?;
    d.set_item("residual", res.final_residual)?;
    d.set_item("energy", res.energy)?;
    Ok(d)
}

/// Splits a vector field into `grad phi + h` with `phi = 0` on the boundary.
#[pyfunction]
fn hodge<'py>(py: Python<'py>, n: usize, field: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let grid = rough_plaplace::Grid::new(n).py_err()?;
    let field = vector(&grid, field).py_err()?;
    let dec = py.detach(|| PoissonSolver::new(&grid).decompose(&field)).py_err()?;
    let d = PyDict::new(py);
    d.set_item("phi", dec.phi.values().to_vec())?;
    d.set_item("h", pairs(&dec.h))?;
    d.set_item("residual", dec.residual)?;
    Ok(d)
}

/// `(name, passed, detail)`.
type CheckTuple = (String, bool, String);

fn report_dict<'py>(py: Python<'py>, r: &EstimateReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", &r.id)?;
    for (k, v) in [("p", r.p), ("q", r.q), ("alpha", r.alpha)] {
        d.set_item(k, v)?;
    }
    d.set_item("n", r.n)?;
    for (k, v) in r.params.iter().chain(&r.extra) {
        d.set_item(*k, *v)?;
    }
    for (k, v) in [("lhs", r.lhs), ("rhs", r.rhs), ("ratio", r.ratio)] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Runs a named estimate experiment. Returns `(rows, checks)`; each check is
/// `(name, passed, detail)`. Failed checks are reported, not raised.
#[pyfunction]
#[pyo3(signature = (experiment, p = 3.0, alpha = 1.0, n = 32, seed = 7, cases = 1, rough = None))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    experiment: &str,
    p: f64,
    alpha: f64,
    n: usize,
    seed: u64,
    cases: usize,
    rough: Option<&str>,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Vec<CheckTuple>)> {
    let experiment: Experiment = experiment.parse().py_err()?;
    let grid = rough_plaplace::Grid::new(n).py_err()?;
    let kinds = match rough {
        Some(s) => vec![s.parse().py_err()?],
        None if cases >= 1 => estimates::rough_family(cases, seed),
        None => return Err(PyValueError::new_err("cases must be at least 1")),
    };
    let setup = ExperimentSetup { p, alpha, seed };
    let (rows, checks) = py
        .detach(|| {
            let pool = estimates::worker_pool()?;
            pool.install(|| estimates::run_experiment(experiment, &setup, &grid, &kinds, &Thresholds::default()))
        })
        .py_err()?;
    let rows = rows.iter().map(|r| report_dict(py, r)).collect::<PyResult<_>>()?;
    Ok((rows, checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect()))
}

#[pymodule]
fn rough_plaplace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(norms, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(rough_field, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(hodge, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add("CheckFailed", m.py().get_type::<CheckFailed>())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_python_classes() {
        Python::initialize();
        Python::attach(|py| {
            assert!(to_py(Error::InvalidParameter("x".into())).is_instance_of::<PyValueError>(py));
            assert!(to_py(Error::Assertion("x".into())).is_instance_of::<CheckFailed>(py));
            let e = Error::SolverFailure {
                iterations: 1,
                residual: 1.0,
                message: "x".into(),
            };
            assert!(to_py(e).is_instance_of::<PyRuntimeError>(py));
        });
    }

    #[test]
    fn vector_lists_keep_storage_order() {
        let grid = rough_plaplace::Grid::new(2).unwrap();
        let vals: Vec<(f64, f64)> = (0..8).map(|k| (k as f64, -(k as f64))).collect();
        assert_eq!(pairs(&vector(&grid, vals.clone()).unwrap()), vals);
        assert!(vector(&grid, vals[..3].to_vec()).is_err());
    }
}
