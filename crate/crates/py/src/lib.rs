//! Python module `skewlab`: configs, experiment reports and the exact building blocks.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use skewlab_core::base::{self, sample_point, BaseKind, BasePoint};
use skewlab_core::dynamics::{sample_state, SystemConfig};
use skewlab_core::experiments::{self as exp, ExperimentError, ExperimentReport};
use skewlab_core::numeric::{self, GrowthFn};
use skewlab_core::symbolic::{CylinderSpec, IndexChain, OmegaOracle};

create_exception!(skewlab, BudgetError, PyException);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn exp_err(e: ExperimentError) -> PyErr {
    if e.is_budget() {
        BudgetError::new_err(e.to_string())
    } else {
        value_err(e)
    }
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// System parameters; keyword arguments use the config-file keys.
#[pyclass(name = "Config", module = "skewlab", skip_from_py_object)]
struct PyConfig {
    inner: SystemConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = SystemConfig::default();
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                let value = v.str()?.to_string();
                match inner.set(&key, &value) {
                    Ok(true) => {}
                    Ok(false) => return Err(value_err(format!("unknown key {key:?}"))),
                    Err(e) => return Err(value_err(e)),
                }
            }
        }
        inner.validate().map_err(value_err)?;
        Ok(PyConfig { inner })
    }

    fn to_dict(&self) -> BTreeMap<String, String> {
        self.inner.to_kv().into_iter().collect()
    }

    #[getter]
    fn m(&self) -> u64 {
        self.inner.start()
    }

    #[getter]
    fn last(&self) -> u64 {
        self.inner.last()
    }

    fn __repr__(&self) -> String {
        let kv: Vec<String> = self.inner.to_kv().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("Config({})", kv.join(", "))
    }
}

/// Result of one experiment.
#[pyclass(name = "Report", module = "skewlab")]
struct PyReport {
    inner: ExperimentReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn experiment(&self) -> String {
        self.inner.experiment.clone()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.columns.clone()
    }

    #[getter]
    fn all_passed(&self) -> bool {
        self.inner.all_passed()
    }

    /// `(name, passed, detail)` triples.
    #[getter]
    fn assertions(&self) -> Vec<(String, bool, String)> {
        self.inner.assertions.iter().map(|a| (a.name.clone(), a.passed, a.detail.clone())).collect()
    }

    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        if self.inner.column(name).is_none() {
            return Err(value_err(format!("no column {name:?}")));
        }
        Ok(self.inner.column_f64(name))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_to_py(py, &self.inner.to_json())
    }

    /// Writes `<experiment>.json`, `.csv` and the curve files into `dir`.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.write_all(&dir).map(|_| ()).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let passed = if self.inner.all_passed() { "True" } else { "False" };
        format!("Report({}, rows={}, passed={passed})", self.inner.experiment, self.inner.rows.len())
    }
}

fn report(r: Result<ExperimentReport, ExperimentError>) -> PyResult<PyReport> {
    r.map(|inner| PyReport { inner }).map_err(exp_err)
}

/// A sampled base point `y_id` of the canonical walk or the golden rotation.
#[pyclass(name = "BasePoint", module = "skewlab")]
struct PyBasePoint {
    inner: BasePoint,
}

#[pymethods]
impl PyBasePoint {
    #[new]
    #[pyo3(signature = (seed, id, base = "walk"))]
    fn new(seed: u64, id: u64, base: &str) -> PyResult<Self> {
        let kind: BaseKind = base.parse().map_err(value_err)?;
        Ok(PyBasePoint { inner: sample_point(Arc::new(kind), seed, id) })
    }

    fn steps(&mut self, start: u64, count: u64) -> Vec<i64> {
        self.inner.steps(start, count)
    }

    /// `f_n(y)` at increasing times.
    fn birkhoff(&mut self, times: Vec<u64>) -> PyResult<Vec<i64>> {
        self.inner.birkhoff_at(&times).map_err(value_err)
    }

    /// `g_n(y) = 2 f_n(y)` at increasing times.
    fn g(&mut self, times: Vec<u64>) -> PyResult<Vec<i64>> {
        self.inner.g_at(&times).map_err(value_err)
    }

    fn shifted(&self, n: u64) -> Self {
        PyBasePoint { inner: self.inner.shifted(n) }
    }
}

/// A fair-coin point `ω ∈ {0,1}^Z`, read lazily.
#[pyclass(name = "Omega", module = "skewlab")]
struct PyOmega {
    inner: OmegaOracle,
}

#[pymethods]
impl PyOmega {
    #[new]
    fn new(seed: u64, id: u64) -> Self {
        PyOmega { inner: OmegaOracle::new(seed, id) }
    }

    fn read(&self, q: i128) -> bool {
        self.inner.read(q)
    }

    /// `ω(q + k)`, the coordinate `q` of `σ^k ω`.
    fn read_shifted(&self, k: i128, q: i128) -> PyResult<bool> {
        IndexChain::shift(k).read(&self.inner, q).map_err(|u| value_err(u.0))
    }

    /// Whether `ω` lies in a cylinder given as `"base:word"`.
    fn in_cylinder(&self, spec: &str) -> PyResult<bool> {
        let c: CylinderSpec = spec.parse().map_err(value_err)?;
        skewlab_core::symbolic::cylinder_indicator(&self.inner, &IndexChain::identity(), &c).map_err(|u| value_err(u.0))
    }
}

/// Growth function from its text form: `poly:<p>`, `powfloor:<a>`, `qlog:<s>`, `remarkcex`.
#[pyclass(name = "Growth", module = "skewlab")]
struct PyGrowth {
    inner: GrowthFn,
}

#[pymethods]
impl PyGrowth {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyGrowth { inner: text.parse().map_err(value_err)? })
    }

    fn __call__(&self, n: u64) -> PyResult<i128> {
        self.inner.eval(n).map(|v| v.0).map_err(value_err)
    }

    fn gap(&self, n: u64, k: u64) -> PyResult<i128> {
        numeric::gap(&self.inner, n, k).map(|v| v.0).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Growth({})", self.inner)
    }
}

/// `{x: m(f_n = x)}` for the canonical walk.
#[pyfunction]
fn level_distribution(n: u64) -> PyResult<BTreeMap<i64, f64>> {
    let d = base::walk_exact_distribution(n).map_err(value_err)?;
    Ok(d.iter().filter(|(_, m)| *m > 0.0).collect())
}

#[pyfunction]
fn llt_deviation(n: u64) -> PyResult<f64> {
    base::llt_deviation(n).map_err(value_err)
}

/// Certification summary of sampled point `id` under `config`.
#[pyfunction]
fn certify(py: Python<'_>, config: &PyConfig, id: u64) -> PyResult<Py<PyAny>> {
    let kind = config.inner.base.clone().into_arc();
    let s = sample_state(&config.inner, &kind, id);
    let d = PyDict::new(py);
    d.set_item("in_b", s.in_b())?;
    d.set_item("in_e", s.in_e())?;
    d.set_item("certification", format!("{:?}", s.certification))?;
    d.set_item("g1", s.g1.clone())?;
    d.set_item("g2", s.g2.clone())?;
    d.set_item("u", s.u)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
fn llt_curve(n_values: Vec<u64>) -> PyResult<PyReport> {
    report(exp::llt_curve(&n_values))
}

#[pyfunction]
fn series(h: &str, n_cap: u64, k_cap: u64) -> PyResult<PyReport> {
    let h: GrowthFn = h.parse().map_err(value_err)?;
    report(exp::series_partial_sums(&h, n_cap, k_cap))
}

#[pyfunction]
#[pyo3(signature = (config, n_values, samples = None, k_cap = 1))]
fn e_measure(
    py: Python<'_>,
    config: &PyConfig,
    n_values: Vec<u64>,
    samples: Option<u64>,
    k_cap: u64,
) -> PyResult<PyReport> {
    let samples = samples.unwrap_or(config.inner.samples);
    py.detach(|| report(exp::estimate_e_measure(&config.inner, &n_values, samples, k_cap)))
}

#[pyfunction]
fn triple(py: Python<'_>, config: &PyConfig, n_from: u64, n_to: u64) -> PyResult<PyReport> {
    py.detach(|| report(exp::triple_measure_curve(&config.inner, n_from, n_to)))
}

#[pyfunction]
fn cesaro(py: Python<'_>, config: &PyConfig, n_max: u64) -> PyResult<PyReport> {
    py.detach(|| report(exp::cesaro_trajectory(&config.inner, n_max)))
}

#[pyfunction]
#[pyo3(signature = (config, n_values, samples = None))]
fn entropy(py: Python<'_>, config: &PyConfig, n_values: Vec<u64>, samples: Option<u64>) -> PyResult<PyReport> {
    let samples = samples.unwrap_or(config.inner.samples);
    py.detach(|| report(exp::entropy_proxy(&config.inner, &n_values, samples)))
}

#[pyfunction]
fn selftest(py: Python<'_>, config: &PyConfig) -> PyResult<PyReport> {
    py.detach(|| report(exp::selftest(&config.inner)))
}

#[pymodule(name = "skewlab")]
fn skewlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyBasePoint>()?;
    m.add_class::<PyOmega>()?;
    m.add_class::<PyGrowth>()?;
    m.add_function(wrap_pyfunction!(level_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(llt_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(llt_curve, m)?)?;
    m.add_function(wrap_pyfunction!(series, m)?)?;
    m.add_function(wrap_pyfunction!(e_measure, m)?)?;
    m.add_function(wrap_pyfunction!(triple, m)?)?;
    m.add_function(wrap_pyfunction!(cesaro, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
