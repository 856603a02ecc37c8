//! Python bindings: model parameters, single-run integration, the wave
//! statistics, and the variance-based sensitivity estimators.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use blightwave::model;
use blightwave::sensitivity;
use blightwave::sobol_seq::SobolSequence;
use blightwave::solver;
use blightwave::wave;

fn err_to_py(e: blightwave::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Model parameters (positive; `d2` may be zero, Hill exponents >= 1).
#[pyclass(name = "Params", skip_from_py_object)]
#[derive(Clone)]
struct PyParams {
    #[pyo3(get, set)]
    n: f64,
    #[pyo3(get, set)]
    d1: f64,
    #[pyo3(get, set)]
    d2: f64,
    #[pyo3(get, set)]
    k: f64,
    #[pyo3(get, set)]
    eps: f64,
    #[pyo3(get, set)]
    r: f64,
    #[pyo3(get, set)]
    mu: f64,
    #[pyo3(get, set)]
    gamma: f64,
    #[pyo3(get, set)]
    alpha: f64,
    #[pyo3(get, set)]
    m1: f64,
    #[pyo3(get, set)]
    m2: f64,
    #[pyo3(get, set)]
    a1: f64,
    #[pyo3(get, set)]
    a2: f64,
    #[pyo3(get, set)]
    n1: f64,
    #[pyo3(get, set)]
    n2: f64,
}

impl PyParams {
    fn to_model(&self) -> model::ModelParams {
        model::ModelParams {
            n: self.n,
            d1: self.d1,
            d2: self.d2,
            k: self.k,
            eps: self.eps,
            r: self.r,
            mu: self.mu,
            gamma: self.gamma,
            alpha: self.alpha,
            m1: self.m1,
            m2: self.m2,
            a1: self.a1,
            a2: self.a2,
            n1: self.n1,
            n2: self.n2,
        }
    }

    fn from_model(p: model::ModelParams) -> Self {
        Self {
            n: p.n,
            d1: p.d1,
            d2: p.d2,
            k: p.k,
            eps: p.eps,
            r: p.r,
            mu: p.mu,
            gamma: p.gamma,
            alpha: p.alpha,
            m1: p.m1,
            m2: p.m2,
            a1: p.a1,
            a2: p.a2,
            n1: p.n1,
            n2: p.n2,
        }
    }
}

#[pymethods]
impl PyParams {
    /// Defaults are the crate's baseline parameter set.
    #[new]
    #[pyo3(signature = (n=5.0, d1=50.0, d2=10.0, k=1e6, eps=10.0, r=0.5, mu=0.5,
                        gamma=0.0027, alpha=1e8, m1=1.0, m2=1.0, a1=1e6, a2=1.0,
                        n1=2.0, n2=2.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: f64,
        d1: f64,
        d2: f64,
        k: f64,
        eps: f64,
        r: f64,
        mu: f64,
        gamma: f64,
        alpha: f64,
        m1: f64,
        m2: f64,
        a1: f64,
        a2: f64,
        n1: f64,
        n2: f64,
    ) -> PyResult<Self> {
        let p = Self::from_model(model::ModelParams {
            n,
            d1,
            d2,
            k,
            eps,
            r,
            mu,
            gamma,
            alpha,
            m1,
            m2,
            a1,
            a2,
            n1,
            n2,
        });
        p.to_model().validate().map_err(err_to_py)?;
        Ok(p)
    }

    fn validate(&self) -> PyResult<()> {
        self.to_model().validate().map_err(err_to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(n={}, d1={}, d2={}, k={}, eps={}, r={}, mu={}, gamma={}, alpha={}, \
             m1={}, m2={}, a1={}, a2={}, n1={}, n2={})",
            self.n,
            self.d1,
            self.d2,
            self.k,
            self.eps,
            self.r,
            self.mu,
            self.gamma,
            self.alpha,
            self.m1,
            self.m2,
            self.a1,
            self.a2,
            self.n1,
            self.n2
        )
    }
}

/// Saturating Hill rate `m * (x/a)^n_exp / (1 + (x/a)^n_exp)`.
#[pyfunction]
fn hill(x: f64, m: f64, a: f64, n_exp: f64) -> PyResult<f64> {
    model::hill(x, m, a, n_exp).map_err(err_to_py)
}

/// Minimum travelling-wave speed `2*sqrt(d1*(r + mu*n))` (m/day).
#[pyfunction]
fn min_wave_speed(params: &PyParams) -> f64 {
    model::min_wave_speed(&params.to_model())
}

/// Check the sufficient travelling-wave parameter constraints.
#[pyfunction]
fn check_wave_constraints<'py>(py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyDict>> {
    let report = model::check_wave_constraints(&params.to_model()).map_err(err_to_py)?;
    let d = PyDict::new(py);
    d.set_item("d2_le_d1", report.d2_le_d1)?;
    d.set_item("exponent_link", report.exponent_link)?;
    d.set_item("m1_le_g_n", report.m1_le_g_n)?;
    d.set_item("ooze_inequality", report.ooze_inequality)?;
    d.set_item("all_satisfied", report.all_satisfied)?;
    d.set_item("c_min", report.c_min)?;
    Ok(d)
}

/// A-priori solution bounds from the parameters and initial suprema.
#[pyfunction]
fn a_priori_bounds<'py>(
    py: Python<'py>,
    params: &PyParams,
    b0_max: f64,
    o0_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let b = model::a_priori_bounds(&params.to_model(), b0_max, o0_max).map_err(err_to_py)?;
    let d = PyDict::new(py);
    d.set_item("b_max", b.b_max)?;
    d.set_item("o_max", b.o_max)?;
    d.set_item("compartment_max", b.compartment_max)?;
    Ok(d)
}

/// Integrate from the point-seeded initial condition and return the
/// recorded snapshots as lists: `times`, `x`, and one list of per-cell
/// lists per field (`b`, `o`, `s`, `i`, `r`).
#[pyfunction]
#[pyo3(signature = (params, length, n_cells, b_seed, t_end, dt, record_every, method="adams_pc"))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    params: &PyParams,
    length: f64,
    n_cells: usize,
    b_seed: f64,
    t_end: f64,
    dt: f64,
    record_every: f64,
    method: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.to_model();
    let grid = solver::Grid::new(length, n_cells).map_err(err_to_py)?;
    let initial = solver::standard_initial_condition(&grid, &p, b_seed).map_err(err_to_py)?;
    let method: solver::Method = method.parse().map_err(err_to_py)?;
    let traj = solver::integrate(&initial, &p, &grid, t_end, dt, method, record_every)
        .map_err(err_to_py)?;
    let d = PyDict::new(py);
    d.set_item("times", traj.times())?;
    d.set_item(
        "x",
        (0..n_cells).map(|j| grid.cell_center(j)).collect::<Vec<f64>>(),
    )?;
    for (name, pick) in [
        ("b", (|s| &s.b) as fn(&solver::FieldState) -> &Vec<f64>),
        ("o", |s| &s.o),
        ("s", |s| &s.s),
        ("i", |s| &s.i),
        ("r", |s| &s.r),
    ] {
        let rows: Vec<Vec<f64>> = traj.snapshots().iter().map(|s| pick(s).clone()).collect();
        d.set_item(name, rows)?;
    }
    Ok(d)
}

/// Index, cell-center location and degeneracy flag of a field maximum.
#[pyfunction]
fn peak_location(field: Vec<f64>, length: f64) -> PyResult<(usize, f64, bool)> {
    let grid = solver::Grid::new(length, field.len()).map_err(err_to_py)?;
    let p = wave::peak_location(&field, &grid).map_err(err_to_py)?;
    Ok((p.index, p.location, p.degenerate))
}

/// Sample Pearson correlation; `None` when either series is constant.
#[pyfunction]
fn pearson(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<Option<f64>> {
    wave::pearson(&xs, &ys).map_err(err_to_py)
}

/// OLS slope of location on time (wave speed) and R^2.
#[pyfunction]
fn wave_speed_regression(times: Vec<f64>, locations: Vec<f64>) -> PyResult<(f64, f64)> {
    let n = times.len();
    let series = wave::PeakSeries {
        times,
        locations,
        indices: vec![0; n],
        degenerate_count: 0,
    };
    wave::wave_speed_regression(&series).map_err(err_to_py)
}

/// First `n` points of the low-discrepancy base-2 sequence.
#[pyfunction]
fn sobol_points(n: usize, dim: usize) -> PyResult<Vec<Vec<f64>>> {
    let mut seq = SobolSequence::new(dim).map_err(err_to_py)?;
    Ok(seq.take_points(n))
}

/// Saltelli first-order index estimate; `None` when degenerate.
#[pyfunction]
fn first_order_saltelli(y_a: Vec<f64>, y_b: Vec<f64>, y_ab_i: Vec<f64>) -> PyResult<Option<f64>> {
    sensitivity::first_order_saltelli(&y_a, &y_b, &y_ab_i).map_err(err_to_py)
}

/// Jansen total-order index estimate; `None` when degenerate.
#[pyfunction]
fn total_order_jansen(y_a: Vec<f64>, y_ab_i: Vec<f64>) -> PyResult<Option<f64>> {
    sensitivity::total_order_jansen(&y_a, &y_ab_i).map_err(err_to_py)
}

#[pymodule]
fn blightwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(hill, m)?)?;
    m.add_function(wrap_pyfunction!(min_wave_speed, m)?)?;
    m.add_function(wrap_pyfunction!(check_wave_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(a_priori_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(peak_location, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(wave_speed_regression, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_points, m)?)?;
    m.add_function(wrap_pyfunction!(first_order_saltelli, m)?)?;
    m.add_function(wrap_pyfunction!(total_order_jansen, m)?)?;
    Ok(())
}
