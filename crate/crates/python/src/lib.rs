use lticlass::canonical::{classify_3d_siso, merged_observable_canonical, topological_canonical, CanonicalForm};
use lticlass::equivalence::{self, Confidence, EquivalenceVerdict};
use lticlass::linalg::{Matrix, ToleranceConfig, Vector};
use lticlass::observability::{kalman_decompose, kalman_rank as core_kalman_rank};
use lticlass::spectral::spectral_split;
use lticlass::trajectory::{self, uniform_grid};
use lticlass::ObservedSystem;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(lticlass, LticlassError, PyValueError);

fn err(e: lticlass::Error) -> PyErr {
    LticlassError::new_err(format!("{}: {e}", e.kind()))
}

type Rows = Vec<Vec<f64>>;

fn to_matrix(rows: &Rows, what: &str) -> PyResult<Matrix> {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(LticlassError::new_err(format!("ParseError: {what} has ragged rows")));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn to_rows(m: &Matrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Tolerances and seed shared by every operation.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone, Default)]
struct PyConfig {
    inner: ToleranceConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (tol_spec=None, tol_rank=None, tol_residual=None, samples=None, seed=None))]
    fn new(
        tol_spec: Option<f64>,
        tol_rank: Option<f64>,
        tol_residual: Option<f64>,
        samples: Option<usize>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut c = ToleranceConfig::default();
        c.tol_spec = tol_spec.unwrap_or(c.tol_spec);
        c.tol_rank = tol_rank.unwrap_or(c.tol_rank);
        c.tol_residual = tol_residual.unwrap_or(c.tol_residual);
        c.samples = samples.unwrap_or(c.samples);
        c.seed = seed.unwrap_or(c.seed);
        c.validate().map_err(err)?;
        Ok(Self { inner: c })
    }

    #[getter]
    fn tol_spec(&self) -> f64 {
        self.inner.tol_spec
    }
    #[getter]
    fn tol_rank(&self) -> f64 {
        self.inner.tol_rank
    }
    #[getter]
    fn tol_residual(&self) -> f64 {
        self.inner.tol_residual
    }
    #[getter]
    fn samples(&self) -> usize {
        self.inner.samples
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Config(tol_spec={:e}, tol_rank={:e}, tol_residual={:e}, samples={}, seed={})",
            c.tol_spec, c.tol_rank, c.tol_residual, c.samples, c.seed
        )
    }
}

fn cfg(c: Option<PyConfig>) -> ToleranceConfig {
    c.map(|c| c.inner).unwrap_or_default()
}

/// Observed system x' = Ax, w = Cx.
#[pyclass(name = "System", from_py_object)]
#[derive(Clone)]
struct PySystem {
    inner: ObservedSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(a: Rows, c: Rows) -> PyResult<Self> {
        let sys = ObservedSystem::new(to_matrix(&a, "A")?, to_matrix(&c, "C")?).map_err(err)?;
        Ok(Self { inner: sys })
    }

    #[getter(A)]
    fn a(&self) -> Rows {
        to_rows(self.inner.a())
    }

    #[getter(C)]
    fn c(&self) -> Rows {
        to_rows(self.inner.c())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    /// The system in coordinates x = Rz: (R⁻¹AR, CR).
    fn transformed(&self, r: Rows) -> PyResult<Self> {
        let r = to_matrix(&r, "R")?;
        Ok(Self { inner: self.inner.transformed(&r).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("System(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

#[pyclass(name = "Verdict", frozen, skip_from_py_object)]
struct PyVerdict {
    #[pyo3(get)]
    relation: String,
    #[pyo3(get)]
    equivalent: bool,
    #[pyo3(get)]
    reason: String,
    #[pyo3(get)]
    witness: Option<Rows>,
    /// Set for negative verdicts from the randomized witness search.
    #[pyo3(get)]
    failure_bound: Option<f64>,
}

#[pymethods]
impl PyVerdict {
    fn __bool__(&self) -> bool {
        self.equivalent
    }

    fn __repr__(&self) -> String {
        if self.equivalent {
            format!("Verdict({}, equivalent)", self.relation)
        } else {
            format!("Verdict({}, not equivalent: {})", self.relation, self.reason)
        }
    }
}

impl From<EquivalenceVerdict> for PyVerdict {
    fn from(v: EquivalenceVerdict) -> Self {
        Self {
            relation: format!("{:?}", v.relation).to_lowercase(),
            equivalent: v.equivalent,
            reason: v.reason.to_string(),
            witness: v.witness.as_ref().map(to_rows),
            failure_bound: match v.confidence {
                Confidence::Deterministic => None,
                Confidence::Randomized { failure_bound } => Some(failure_bound),
            },
        }
    }
}

/// (n0, n+, n-, k, k0, k+, k-)
#[pyfunction]
#[pyo3(signature = (system, config=None))]
fn invariant_signature(system: &PySystem, config: Option<PyConfig>) -> PyResult<[usize; 7]> {
    Ok(equivalence::invariant_signature(&system.inner, &cfg(config)).map_err(err)?.as_tuple())
}

#[pyfunction]
#[pyo3(signature = (system, config=None))]
fn kalman_rank(system: &PySystem, config: Option<PyConfig>) -> usize {
    core_kalman_rank(&system.inner, &cfg(config))
}

#[pyfunction]
#[pyo3(signature = (system, config=None))]
fn split<'py>(py: Python<'py>, system: &PySystem, config: Option<PyConfig>) -> PyResult<Bound<'py, PyDict>> {
    let s = spectral_split(&system.inner, &cfg(config)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("counts", (s.counts.n0, s.counts.n_plus, s.counts.n_minus))?;
    for (k, m) in [
        ("P", &s.p),
        ("A0", &s.a0),
        ("A_plus", &s.a_plus),
        ("A_minus", &s.a_minus),
        ("C0", &s.c0),
        ("C_plus", &s.c_plus),
        ("C_minus", &s.c_minus),
    ] {
        d.set_item(k, to_rows(m))?;
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (system, config=None))]
fn kalman<'py>(py: Python<'py>, system: &PySystem, config: Option<PyConfig>) -> PyResult<Bound<'py, PyDict>> {
    let k = kalman_decompose(&system.inner, &cfg(config));
    let d = PyDict::new(py);
    d.set_item("k", k.k)?;
    for (name, m) in [("T", &k.t), ("Ao", &k.ao), ("Am", &k.am), ("Au", &k.au), ("Co", &k.co)] {
        d.set_item(name, to_rows(m))?;
    }
    Ok(d)
}

fn canonical_dict<'py>(py: Python<'py>, f: &CanonicalForm) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, m) in [
        ("Nhat", &f.nhat),
        ("Khat", &f.khat),
        ("Bhat", &f.bhat),
        ("Dhat", &f.dhat),
        ("Ehat", &f.ehat),
        ("A", &f.assembled_a),
        ("C", &f.assembled_c),
    ] {
        d.set_item(k, to_rows(m))?;
    }
    d.set_item("center_is_canonical", f.center_is_canonical)?;
    if let Some(m) = &f.merged {
        d.set_item("Lhat", to_rows(&m.lhat))?;
        d.set_item("That", to_rows(&m.that))?;
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (system, merged=false, config=None))]
fn canonical<'py>(
    py: Python<'py>,
    system: &PySystem,
    merged: bool,
    config: Option<PyConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = cfg(config);
    let form = if merged {
        merged_observable_canonical(&system.inner, &c)
    } else {
        topological_canonical(&system.inner, &c)
    }
    .map_err(err)?;
    canonical_dict(py, &form)
}

/// Family id, μ parameters and ι signs of a 3-dimensional single-output system.
#[pyfunction]
#[pyo3(signature = (system, config=None))]
fn catalog3d(system: &PySystem, config: Option<PyConfig>) -> PyResult<(String, Vec<f64>, Vec<i8>)> {
    let e = classify_3d_siso(&system.inner, &cfg(config)).map_err(err)?;
    Ok((e.family, e.mu, e.iota))
}

#[pyfunction]
#[pyo3(signature = (first, second, config=None))]
fn linear_equivalent(first: &PySystem, second: &PySystem, config: Option<PyConfig>) -> PyResult<PyVerdict> {
    Ok(equivalence::linear_equivalent(&first.inner, &second.inner, &cfg(config)).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (first, second, config=None))]
fn topologically_equivalent(first: &PySystem, second: &PySystem, config: Option<PyConfig>) -> PyResult<PyVerdict> {
    Ok(equivalence::topologically_equivalent(&first.inner, &second.inner, &cfg(config)).map_err(err)?.into())
}

/// Samples of w(t) = C e^{At} x0 on `points` uniform times in [0, t_max].
#[pyfunction]
#[pyo3(signature = (system, x0, t_max=2.0, points=33))]
fn simulate(system: &PySystem, x0: Vec<f64>, t_max: f64, points: usize) -> PyResult<(Vec<f64>, Rows)> {
    let s = trajectory::simulate_observation(&system.inner, &Vector::from_vec(x0), &uniform_grid(t_max, points))
        .map_err(err)?;
    Ok((s.times, s.outputs.iter().map(|w| w.iter().copied().collect()).collect()))
}

/// Largest relative output discrepancy of a witness, and whether it passes.
#[pyfunction]
#[pyo3(signature = (first, second, witness, x0s=None, t_max=2.0, points=33, config=None))]
fn check_witness(
    first: &PySystem,
    second: &PySystem,
    witness: Rows,
    x0s: Option<Rows>,
    t_max: f64,
    points: usize,
    config: Option<PyConfig>,
) -> PyResult<(bool, f64)> {
    let n = first.inner.n();
    let x0s: Vec<Vector> = match x0s {
        Some(rows) => rows.into_iter().map(Vector::from_vec).collect(),
        None => (0..n).map(|i| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect(),
    };
    let p = to_matrix(&witness, "witness")?;
    let c = trajectory::check_linear_witness(
        &first.inner,
        &second.inner,
        &p,
        &x0s,
        &uniform_grid(t_max, points),
        &cfg(config),
    )
    .map_err(err)?;
    Ok((c.passed, c.max_rel_discrepancy))
}

#[pymodule]
#[pyo3(name = "lticlass")]
fn lticlass_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LticlassError", m.py().get_type::<LticlassError>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(invariant_signature, m)?)?;
    m.add_function(wrap_pyfunction!(kalman_rank, m)?)?;
    m.add_function(wrap_pyfunction!(split, m)?)?;
    m.add_function(wrap_pyfunction!(kalman, m)?)?;
    m.add_function(wrap_pyfunction!(canonical, m)?)?;
    m.add_function(wrap_pyfunction!(catalog3d, m)?)?;
    m.add_function(wrap_pyfunction!(linear_equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(topologically_equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(check_witness, m)?)?;
    Ok(())
}
