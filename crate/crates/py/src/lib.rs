//! Python bindings. Arrays cross the boundary as flat row-major lists of
//! complex numbers; shapes are available from the objects.

use std::fmt::Display;
use std::path::Path;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use magweyl::harness::{self, RunConfig};
use magweyl::lie::NilpotentLieAlgebra;
use magweyl::magnetic::MagneticPotential;
use magweyl::symbol_space::{make_grid, sample_symbol, SymbolField};
use magweyl::weyl::{self, IntegralKernel, WeylContext};

fn err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Algebra", module = "magweyl_py", frozen)]
struct PyAlgebra(NilpotentLieAlgebra);

#[pymethods]
impl PyAlgebra {
    /// `abelian:<d>`, `heisenberg:<2k+1>` or `filiform3:4`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        NilpotentLieAlgebra::from_preset(name).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        NilpotentLieAlgebra::from_json(json).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Paper convention: abelian 0, Heisenberg 1.
    #[getter]
    fn nilpotency_index(&self) -> usize {
        self.0.nilpotency_class()
    }

    fn bracket(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&[&x, &y])?;
        Ok(self.0.bracket(&x.into(), &y.into()).0)
    }

    fn bch(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&[&x, &y])?;
        Ok(self.0.bch(&x.into(), &y.into()).0)
    }

    fn psi(&self, v: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&[&v, &y])?;
        Ok(self.0.psi_map(&v.into(), &y.into()).0)
    }

    fn psi_inverse(&self, v: Vec<f64>, z: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&[&v, &z])?;
        Ok(self.0.psi_inverse(&v.into(), &z.into()).0)
    }

    fn __repr__(&self) -> String {
        format!("Algebra(dim={}, nilpotency_index={})", self.0.dim(), self.0.nilpotency_class())
    }
}

impl PyAlgebra {
    fn check(&self, vs: &[&Vec<f64>]) -> PyResult<()> {
        match vs.iter().find(|v| v.len() != self.0.dim()) {
            Some(v) => Err(err(format!("vector of length {} for an algebra of dimension {}", v.len(), self.0.dim()))),
            None => Ok(()),
        }
    }
}

#[pyclass(name = "Potential", module = "magweyl_py", frozen)]
struct PyPotential(MagneticPotential);

#[pymethods]
impl PyPotential {
    /// `zero`, `landau:<b>`, `symmetric:<b>` or `heisenberg-linear:<b>`.
    #[staticmethod]
    fn preset(name: &str, dim: usize) -> PyResult<Self> {
        MagneticPotential::from_preset(name, dim).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(json: &str, dim: usize) -> PyResult<Self> {
        MagneticPotential::from_json(json, dim).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __call__(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        if y.len() != self.0.dim() {
            return Err(err("point has the wrong dimension"));
        }
        let mut out = vec![0.0; y.len()];
        self.0.eval_into(&y, &mut out);
        Ok(out)
    }
}

#[pyclass(name = "Symbol", module = "magweyl_py", frozen)]
struct PySymbol(SymbolField);

#[pymethods]
impl PySymbol {
    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.0.values.shape().to_vec()
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values.iter().copied().collect()
    }

    fn at(&self, index: Vec<usize>) -> PyResult<Complex64> {
        self.0.values.get(index.as_slice()).copied().ok_or_else(|| err("index out of range"))
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }

    fn relative_error(&self, reference: &PySymbol) -> f64 {
        self.0.relative_error(&reference.0)
    }
}

#[pyclass(name = "Kernel", module = "magweyl_py", frozen)]
struct PyKernel(IntegralKernel);

#[pymethods]
impl PyKernel {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.values.dim()
    }

    fn values(&self) -> Vec<Complex64> {
        self.0.values.iter().copied().collect()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm()
    }
}

/// Algebra, potential and an `N`-point grid on `[−L, L)` per axis.
#[pyclass(name = "Context", module = "magweyl_py", frozen)]
struct PyContext(WeylContext);

#[pymethods]
impl PyContext {
    #[new]
    #[pyo3(signature = (algebra, potential, n, l))]
    fn new(algebra: &PyAlgebra, potential: &PyPotential, n: usize, l: f64) -> PyResult<Self> {
        let grid = make_grid(algebra.0.dim(), n, l).map_err(err)?;
        WeylContext::new(algebra.0.clone(), potential.0.clone(), grid).map(Self).map_err(err)
    }

    fn x(&self, j: usize) -> f64 {
        self.0.grid.x(j)
    }

    fn xi(&self, k: usize) -> f64 {
        self.0.grid.xi(k)
    }

    fn gaussian_symbol(&self, sigma_x: f64, sigma_xi: f64) -> PySymbol {
        PySymbol(sample_symbol(&self.0.grid, harness::gaussian(sigma_x, sigma_xi)))
    }

    /// A symbol from flat row-major samples, axes `(X₁…X_d, ξ₁…ξ_d)`.
    fn symbol(&self, values: Vec<Complex64>) -> PyResult<PySymbol> {
        let shape = self.0.grid.symbol_shape();
        let arr = ndarray_from(values, &shape)?;
        SymbolField::new(self.0.grid, arr).map(PySymbol).map_err(err)
    }

    fn kernel(&self, py: Python<'_>, a: &PySymbol) -> PyResult<PyKernel> {
        py.detach(|| weyl::kernel_from_symbol(&self.0, &a.0)).map(PyKernel).map_err(err)
    }

    fn symbol_from_kernel(&self, py: Python<'_>, k: &PyKernel) -> PyResult<PySymbol> {
        py.detach(|| weyl::symbol_from_kernel(&self.0, &k.0)).map(PySymbol).map_err(err)
    }

    fn moyal(&self, py: Python<'_>, a: &PySymbol, b: &PySymbol) -> PyResult<PySymbol> {
        py.detach(|| weyl::moyal_product(&self.0, &a.0, &b.0)).map(PySymbol).map_err(err)
    }

    fn moyal_point(&self, py: Python<'_>, a: &PySymbol, b: &PySymbol, x: Vec<f64>, xi: Vec<f64>) -> PyResult<Complex64> {
        py.detach(|| weyl::moyal_2step_point(&self.0, &a.0, &b.0, &x, &xi)).map_err(err)
    }

    /// Max relative error of `K_{A₁} = e^{iψ} K_A e^{−iψ}`.
    fn gauge_covariance(&self, py: Python<'_>, potential: &PyPotential, a: &PySymbol) -> PyResult<f64> {
        py.detach(|| weyl::gauge_covariance_check(&self.0, &potential.0, &a.0)).map(|r| r.relative_error).map_err(err)
    }

    /// `(error, error at τ/2, ratio)` for a standard Gaussian `f`.
    fn derivative_check(&self, py: Python<'_>, p0: Vec<f64>, tau: f64) -> (f64, f64, f64) {
        let r = py.detach(|| weyl::magnetic_derivative_check(&self.0, &p0, &harness::gaussian_config(&self.0.grid), tau));
        (r.error, r.error_half, r.ratio)
    }
}

fn ndarray_from(values: Vec<Complex64>, shape: &[usize]) -> PyResult<ndarray::ArrayD<Complex64>> {
    ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(shape), values).map_err(err)
}

/// Runs the algebra checks for a JSON run configuration; returns the report JSON.
#[pyfunction]
fn verify_algebra(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = RunConfig::from_json(config, Path::new(".")).map_err(err)?;
    py.detach(|| harness::verify_algebra(&cfg)).map(|r| r.to_json()).map_err(err)
}

/// Runs the selected suites for a JSON run configuration; returns the report JSON.
#[pyfunction]
fn run_suites(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = RunConfig::from_json(config, Path::new(".")).map_err(err)?;
    py.detach(|| harness::run_suites(&cfg)).map(|r| r.to_json()).map_err(err)
}

#[pymodule]
fn magweyl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PySymbol>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyContext>()?;
    m.add_function(wrap_pyfunction!(verify_algebra, m)?)?;
    m.add_function(wrap_pyfunction!(run_suites, m)?)?;
    Ok(())
}
