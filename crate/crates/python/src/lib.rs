use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fibercz::filters::{dilate as dilate_filter, MotherFilter, ScaleLadder};
use fibercz::harness::{run_verify as verify_suite, Experiment, ExperimentConfig, Suite};
use fibercz::norms::{default_levels, Sampled};
use fibercz::operators::{Axis, ParaproductConfig};
use fibercz::{
    CZDecomposition, DenseFunction2D, FiberDecomposition, Grid1D, SampledFunction1D, TensorFunction2D, TensorTerm,
};

fn err(e: fibercz::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parses a JSON string into Python objects.
fn loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    loads(py, &serde_json::to_string(value).map_err(json_err)?)
}

#[pyclass(name = "Grid1D", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid1D(Grid1D);

#[pymethods]
impl PyGrid1D {
    #[new]
    fn new(origin: f64, step: f64, count: usize) -> PyResult<Self> {
        Grid1D::new(origin, step, count).map(Self).map_err(err)
    }

    #[staticmethod]
    fn spanning(start: f64, length: f64, count: usize) -> PyResult<Self> {
        Grid1D::spanning(start, length, count).map(Self).map_err(err)
    }

    #[getter]
    fn origin(&self) -> f64 {
        self.0.origin()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.0.step()
    }

    #[getter]
    fn count(&self) -> usize {
        self.0.count()
    }

    fn points(&self) -> Vec<f64> {
        self.0.points().collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid1D(origin={}, step={}, count={})", self.0.origin(), self.0.step(), self.0.count())
    }
}

#[pyclass(name = "SampledFunction1D", frozen)]
struct PySampled(SampledFunction1D);

#[pymethods]
impl PySampled {
    #[new]
    fn new(grid: PyRef<'_, PyGrid1D>, values: Vec<f64>) -> PyResult<Self> {
        SampledFunction1D::new(grid.0, values).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn grid(&self) -> PyGrid1D {
        PyGrid1D(*self.0.grid())
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn l1_norm(&self) -> f64 {
        self.0.l1_norm()
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

#[pyclass(name = "TensorFunction2D", frozen)]
struct PyTensor(TensorFunction2D);

#[pymethods]
impl PyTensor {
    /// `terms` is a list of `(fiber values, row indices)` pairs.
    #[new]
    fn new(grid_x: PyRef<'_, PyGrid1D>, grid_y: PyRef<'_, PyGrid1D>, terms: Vec<(Vec<f64>, Vec<usize>)>) -> PyResult<Self> {
        let terms = terms
            .into_iter()
            .map(|(values, rows)| Ok(TensorTerm::new(SampledFunction1D::new(grid_x.0, values)?, rows)))
            .collect::<fibercz::Result<Vec<_>>>()
            .map_err(err)?;
        TensorFunction2D::new(grid_x.0, grid_y.0, terms).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    fn materialize(&self) -> PyDense {
        PyDense(self.0.materialize())
    }

    fn l1_norm(&self) -> f64 {
        self.0.l1_norm()
    }

    fn term_count(&self) -> usize {
        self.0.terms().len()
    }
}

#[pyclass(name = "DenseFunction2D", frozen)]
struct PyDense(DenseFunction2D);

#[pymethods]
impl PyDense {
    /// `rows[n][m]` is the sample at `(x_m, y_n)`.
    #[new]
    fn new(grid_x: PyRef<'_, PyGrid1D>, grid_y: PyRef<'_, PyGrid1D>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        if rows.iter().any(|r| r.len() != grid_x.0.count()) {
            return Err(PyValueError::new_err("every row needs count_x values"));
        }
        DenseFunction2D::new(grid_x.0, grid_y.0, rows.concat()).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn get(&self, m: usize, n: usize) -> PyResult<f64> {
        if m >= self.0.grid_x().count() || n >= self.0.grid_y().count() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(m, n))
    }

    fn inner(&self, other: PyRef<'_, PyDense>) -> PyResult<f64> {
        self.0.inner(&other.0).map_err(err)
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.grid_y().count(), self.0.grid_x().count())
    }
}

#[pyclass(name = "CZDecomposition", frozen)]
struct PyCz(CZDecomposition);

#[pymethods]
impl PyCz {
    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    #[getter]
    fn good(&self) -> PySampled {
        PySampled(self.0.good().clone())
    }

    /// `(generation, offset, values)` per atom, left to right.
    fn atoms(&self) -> Vec<(u32, u64, Vec<f64>)> {
        self.0
            .atoms()
            .iter()
            .map(|a| (a.interval().generation, a.interval().offset, a.values().to_vec()))
            .collect()
    }

    fn selected_measure(&self) -> f64 {
        self.0.selected_measure()
    }

    fn reconstruct(&self) -> PySampled {
        PySampled(self.0.reconstruct())
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }
}

#[pyclass(name = "FiberDecomposition", frozen)]
struct PyFiber(FiberDecomposition);

#[pymethods]
impl PyFiber {
    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    fn good_part(&self) -> PyTensor {
        PyTensor(self.0.good_part().clone())
    }

    fn bad_part(&self) -> PyDense {
        PyDense(self.0.bad_part())
    }

    fn exceptional_measure(&self) -> f64 {
        fibercz::exceptional_set(&self.0).measure
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }
}

#[derive(FromPyObject)]
enum AnyFunction<'py> {
    One(PyRef<'py, PySampled>),
    Two(PyRef<'py, PyDense>),
}

impl AnyFunction<'_> {
    fn with<R>(&self, f: impl FnOnce(&dyn Sampled) -> R) -> R {
        match self {
            Self::One(s) => f(&s.0),
            Self::Two(d) => f(&d.0),
        }
    }
}

fn operator_config(grid: &Grid1D, j_min: Option<i32>, j_max: Option<i32>, strict: bool) -> PyResult<ParaproductConfig> {
    let ladder = match (j_min, j_max) {
        (Some(lo), Some(hi)) => ScaleLadder::new(lo, hi),
        (None, None) => ScaleLadder::for_grid(grid),
        _ => return Err(PyValueError::new_err("j_min and j_max go together")),
    }
    .map_err(err)?;
    let (psi, phi) = MotherFilter::standard_pair();
    Ok(if strict {
        ParaproductConfig::strict(psi, ladder)
    } else {
        ParaproductConfig::new(psi, phi, ladder)
    })
}

fn parse_axis(axis: &str) -> PyResult<Axis> {
    match axis {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        _ => Err(PyValueError::new_err("axis must be 'x' or 'y'")),
    }
}

#[pyfunction]
fn cz_decompose_1d(f: PyRef<'_, PySampled>, gamma: f64) -> PyResult<PyCz> {
    fibercz::cz_decompose_1d(&f.0, gamma).map(PyCz).map_err(err)
}

#[pyfunction]
fn fiberwise_decompose(f: PyRef<'_, PyTensor>, gamma: f64) -> PyResult<PyFiber> {
    fibercz::fiberwise_decompose(&f.0, gamma).map(PyFiber).map_err(err)
}

#[pyfunction]
fn verify_cz_invariants<'py>(py: Python<'py>, d: PyRef<'_, PyCz>, f: PyRef<'_, PySampled>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &fibercz::verify_cz_invariants(&d.0, &f.0))
}

#[pyfunction]
#[pyo3(signature = (f, g, j_min=None, j_max=None))]
fn paraproduct_pi(
    f: PyRef<'_, PySampled>,
    g: PyRef<'_, PySampled>,
    j_min: Option<i32>,
    j_max: Option<i32>,
) -> PyResult<PySampled> {
    let cfg = operator_config(f.0.grid(), j_min, j_max, false)?;
    fibercz::paraproduct_pi(&f.0, &g.0, &cfg).map(PySampled).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, g, j_min=None, j_max=None, strict=false))]
fn paraproduct_t(
    f: PyRef<'_, PyDense>,
    g: PyRef<'_, PyDense>,
    j_min: Option<i32>,
    j_max: Option<i32>,
    strict: bool,
) -> PyResult<PyDense> {
    let cfg = operator_config(f.0.grid_x(), j_min, j_max, strict)?;
    fibercz::paraproduct_t(&f.0, &g.0, &cfg).map(PyDense).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, g, j_min=None, j_max=None, strict=false))]
fn paraproduct_t_fiberwise(
    f: PyRef<'_, PyTensor>,
    g: PyRef<'_, PyDense>,
    j_min: Option<i32>,
    j_max: Option<i32>,
    strict: bool,
) -> PyResult<PyDense> {
    let cfg = operator_config(f.0.grid_x(), j_min, j_max, strict)?;
    fibercz::paraproduct_t_fiberwise(&f.0, &g.0, &cfg).map(PyDense).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (h, g, j_min=None, j_max=None, strict=false))]
fn dual_t1(
    h: PyRef<'_, PyDense>,
    g: PyRef<'_, PyDense>,
    j_min: Option<i32>,
    j_max: Option<i32>,
    strict: bool,
) -> PyResult<PyDense> {
    let cfg = operator_config(h.0.grid_x(), j_min, j_max, strict)?;
    fibercz::dual_t1(&h.0, &g.0, &cfg).map(PyDense).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, h, j_min=None, j_max=None, strict=false))]
fn dual_t2(
    f: PyRef<'_, PyDense>,
    h: PyRef<'_, PyDense>,
    j_min: Option<i32>,
    j_max: Option<i32>,
    strict: bool,
) -> PyResult<PyDense> {
    let cfg = operator_config(f.0.grid_x(), j_min, j_max, strict)?;
    fibercz::dual_t2(&f.0, &h.0, &cfg).map(PyDense).map_err(err)
}

#[pyfunction]
fn hl_maximal_axis(g: PyRef<'_, PyDense>, axis: &str) -> PyResult<PyDense> {
    Ok(PyDense(fibercz::hl_maximal_axis(&g.0, parse_axis(axis)?)))
}

#[pyfunction]
fn h_majorant(d: PyRef<'_, PyFiber>) -> PyResult<PyDense> {
    fibercz::h_majorant(&d.0, d.0.grid_x(), d.0.grid_y())
        .map(PyDense)
        .map_err(err)
}

/// Dilation of the standard `psi` or `phi` to scale `t` on the grid's step.
#[pyfunction]
fn dilate(kind: &str, t: f64, grid: PyRef<'_, PyGrid1D>) -> PyResult<PySampled> {
    let (psi, phi) = MotherFilter::standard_pair();
    let zeta = match kind {
        "psi" => psi,
        "phi" => phi,
        _ => return Err(PyValueError::new_err("kind must be 'psi' or 'phi'")),
    };
    dilate_filter(&zeta, t, &grid.0).map(PySampled).map_err(err)
}

#[pyfunction]
fn lp_norm(f: AnyFunction<'_>, p: f64) -> PyResult<f64> {
    f.with(|s| fibercz::lp_norm(s, p)).map_err(err)
}

#[pyfunction]
fn superlevel_measure(f: AnyFunction<'_>, alpha: f64) -> f64 {
    f.with(|s| fibercz::superlevel_measure(s, alpha))
}

#[pyfunction]
#[pyo3(signature = (f, p, levels=None))]
fn weak_lp_quasinorm<'py>(
    py: Python<'py>,
    f: AnyFunction<'_>,
    p: f64,
    levels: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let est = f
        .with(|s| {
            let levels = levels.unwrap_or_else(|| default_levels(s));
            fibercz::weak_lp_quasinorm(s, p, &levels)
        })
        .map_err(err)?;
    to_py(py, &est)
}

#[pyfunction]
fn exponent_algebra<'py>(py: Python<'py>, p: f64, q: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &fibercz::exponent_algebra(p, q).map_err(err)?)
}

/// Runs an experiment by name; `config_json` follows the CLI config format.
#[pyfunction]
#[pyo3(signature = (name, config_json=None))]
fn run_experiment<'py>(py: Python<'py>, name: &str, config_json: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let experiment: Experiment = name.parse().map_err(err)?;
    let cfg = match config_json {
        Some(text) => ExperimentConfig::from_json(text).map_err(err)?,
        None => ExperimentConfig::default(),
    };
    let report = py.detach(|| experiment.run(&cfg)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (suite="all", seed=0))]
fn run_verify<'py>(py: Python<'py>, suite: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let report = py.detach(|| verify_suite(suite, seed)).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn pyfibercz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid1D>()?;
    m.add_class::<PySampled>()?;
    m.add_class::<PyTensor>()?;
    m.add_class::<PyDense>()?;
    m.add_class::<PyCz>()?;
    m.add_class::<PyFiber>()?;
    m.add_function(wrap_pyfunction!(cz_decompose_1d, m)?)?;
    m.add_function(wrap_pyfunction!(fiberwise_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(verify_cz_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(paraproduct_pi, m)?)?;
    m.add_function(wrap_pyfunction!(paraproduct_t, m)?)?;
    m.add_function(wrap_pyfunction!(paraproduct_t_fiberwise, m)?)?;
    m.add_function(wrap_pyfunction!(dual_t1, m)?)?;
    m.add_function(wrap_pyfunction!(dual_t2, m)?)?;
    m.add_function(wrap_pyfunction!(hl_maximal_axis, m)?)?;
    m.add_function(wrap_pyfunction!(h_majorant, m)?)?;
    m.add_function(wrap_pyfunction!(dilate, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm, m)?)?;
    m.add_function(wrap_pyfunction!(superlevel_measure, m)?)?;
    m.add_function(wrap_pyfunction!(weak_lp_quasinorm, m)?)?;
    m.add_function(wrap_pyfunction!(exponent_algebra, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
