//! Python module `lowerframe`.
//!
//! ```python
//! import lowerframe as lf
//! fam = lf.Family.generate("shifted_sum", 6)
//! cert = lf.analyze(fam, mode="quantized")
//! assert cert.passed and cert.min_frame_eig >= 1.0
//! ```

use std::collections::BTreeMap;

use lowerframe::linalg::{self, CVector, DenseMatrix};
use lowerframe::report::{CertificateDoc, Source};
use lowerframe::{
    family, pipeline, verify, Field, GeneratorKind, GeneratorSpec, Method, Mode, PipelineConfig,
    PipelineRun, TailMode, VectorFamily,
};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: lowerframe::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bad_choice(what: &str, got: &str, options: &[&str]) -> PyErr {
    PyValueError::new_err(format!(
        "unknown {what} {got:?}; expected one of {options:?}"
    ))
}

fn parse_kind(s: &str) -> PyResult<GeneratorKind> {
    Ok(match s {
        "orthonormal" => GeneratorKind::Orthonormal,
        "shifted_sum" => GeneratorKind::ShiftedSum,
        "damped_tail" => GeneratorKind::DampedTail,
        "random_gaussian" => GeneratorKind::RandomGaussian,
        "cyclic_spanning" => GeneratorKind::CyclicSpanning,
        _ => {
            return Err(bad_choice(
                "generator",
                s,
                &[
                    "orthonormal",
                    "shifted_sum",
                    "damped_tail",
                    "random_gaussian",
                    "cyclic_spanning",
                ],
            ))
        }
    })
}

fn parse_tail(s: &str) -> PyResult<TailMode> {
    match s {
        "zero" => Ok(TailMode::Zero),
        "cyclic" => Ok(TailMode::Cyclic),
        _ => Err(bad_choice("tail", s, &["zero", "cyclic"])),
    }
}

fn parse_field(s: &str) -> PyResult<Field> {
    match s {
        "real" => Ok(Field::Real),
        "complex" => Ok(Field::Complex),
        _ => Err(bad_choice("field", s, &["real", "complex"])),
    }
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    match s {
        "exact" => Ok(Mode::Exact),
        "quantized" => Ok(Mode::Quantized),
        _ => Err(bad_choice("mode", s, &["exact", "quantized"])),
    }
}

fn parse_method(s: &str) -> PyResult<Method> {
    match s {
        "direct" => Ok(Method::Direct),
        "neumann" => Ok(Method::Neumann),
        _ => Err(bad_choice("method", s, &["direct", "neumann"])),
    }
}

fn to_vectors(rows: Vec<Vec<Complex64>>) -> Vec<CVector> {
    rows.into_iter().map(CVector::from_vec).collect()
}

fn from_vectors(vs: &[CVector]) -> Vec<Vec<Complex64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<DenseMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("matrix rows have different lengths"));
    }
    Ok(DenseMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// A finite vector family with a tail rule.
#[pyclass(name = "Family", frozen)]
struct PyFamily {
    inner: VectorFamily,
}

#[pymethods]
impl PyFamily {
    /// Build from a list of vectors (complex or real entries).
    #[new]
    #[pyo3(signature = (vectors, tail = "zero", field = "complex"))]
    fn new(vectors: Vec<Vec<Complex64>>, tail: &str, field: &str) -> PyResult<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        let inner = VectorFamily::new(
            parse_field(field)?,
            dim,
            to_vectors(vectors),
            parse_tail(tail)?,
        )
        .map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (kind, dim, count = None, seed = 0, damping = family::DEFAULT_DAMPING, tail = None, field = "complex"))]
    fn generate(
        kind: &str,
        dim: usize,
        count: Option<usize>,
        seed: u64,
        damping: f64,
        tail: Option<&str>,
        field: &str,
    ) -> PyResult<Self> {
        let mut spec = GeneratorSpec::new(parse_kind(kind)?, dim)
            .with_seed(seed)
            .with_damping(damping)
            .with_field(parse_field(field)?);
        spec.count = count;
        spec.tail = tail.map(parse_tail).transpose()?;
        let inner = family::generate_family(&spec).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: VectorFamily::from_json_str(text).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn count(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn tail(&self) -> String {
        self.inner.tail().to_string()
    }

    #[getter]
    fn field(&self) -> String {
        self.inner.field().to_string()
    }

    fn vectors(&self) -> Vec<Vec<Complex64>> {
        from_vectors(self.inner.vectors())
    }

    /// `v_k` (1-based) under the tail rule.
    fn effective_vector(&self, k: usize) -> PyResult<Vec<Complex64>> {
        if k == 0 {
            return Err(PyValueError::new_err("indices start at 1"));
        }
        Ok(self.inner.effective_vector(k).iter().copied().collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Family(dim={}, count={}, tail={}, field={})",
            self.inner.dim(),
            self.inner.len(),
            self.inner.tail(),
            self.inner.field()
        )
    }
}

/// Result of `analyze`: weights, intermediates and the verification report.
#[pyclass(name = "Certificate", frozen)]
struct PyCertificate {
    family: VectorFamily,
    run: PipelineRun,
}

#[pymethods]
impl PyCertificate {
    #[getter]
    fn passed(&self) -> bool {
        self.run.certificate.passed()
    }

    #[getter]
    fn lambda_(&self) -> BTreeMap<usize, f64> {
        self.run.certificate.lambda.clone()
    }

    #[getter]
    fn lambda_eff(&self) -> BTreeMap<usize, f64> {
        self.run.certificate.lambda_eff.clone()
    }

    #[getter]
    fn t_norm(&self) -> f64 {
        self.run.certificate.diagnostics.t_norm
    }

    #[getter]
    fn series_bound(&self) -> f64 {
        self.run.certificate.diagnostics.series_bound
    }

    #[getter]
    fn identity_residual(&self) -> f64 {
        self.run.certificate.diagnostics.identity_residual
    }

    #[getter]
    fn min_frame_eig(&self) -> f64 {
        self.run.certificate.diagnostics.min_frame_eig
    }

    #[getter]
    fn chain_ranks(&self) -> Vec<usize> {
        self.run.chain.ranks()
    }

    /// `u_1..u_{2M}`, zeros where the slot is empty.
    fn basis(&self) -> Vec<Vec<Complex64>> {
        from_vectors(self.run.basis.entries())
    }

    fn w(&self) -> Vec<Vec<Complex64>> {
        from_vectors(&self.run.certificate.w)
    }

    fn z(&self) -> Vec<Vec<Complex64>> {
        let zs: Vec<CVector> = self
            .run
            .approximants
            .iter()
            .map(|(_, a)| a.z.clone())
            .collect();
        from_vectors(&zs)
    }

    /// Coefficient maps `γ^{(n)}` as `{k: coefficient}` dicts.
    fn gamma(&self) -> Vec<BTreeMap<usize, Complex64>> {
        self.run
            .approximants
            .iter()
            .map(|(_, a)| a.gamma.clone())
            .collect()
    }

    fn residuals(&self) -> Vec<f64> {
        self.run
            .approximants
            .iter()
            .map(|(_, a)| a.residual)
            .collect()
    }

    fn checks<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        checks_to_py(py, &self.run.certificate.report.checks)
    }

    fn to_json(&self) -> String {
        CertificateDoc::from_run(
            &self.family,
            &self.run,
            Source::Input {
                path: "<python>".into(),
            },
        )
        .to_json_string()
    }
}

fn checks_to_py<'py>(
    py: Python<'py>,
    checks: &[verify::Check],
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    checks
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("name", &c.name)?;
            d.set_item("passed", c.passed)?;
            d.set_item("lhs", c.lhs)?;
            d.set_item("rhs", c.rhs)?;
            d.set_item("slack", c.slack)?;
            d.set_item("tolerance", c.tolerance)?;
            Ok(d)
        })
        .collect()
}

/// Run the full construction and its verification.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (family, mode = "exact", method = "direct", rank_tol = linalg::DEFAULT_RANK_TOL, lambda_floor = 0.0, samples = 1000, seed = 0))]
fn analyze(
    py: Python<'_>,
    family: &PyFamily,
    mode: &str,
    method: &str,
    rank_tol: f64,
    lambda_floor: f64,
    samples: usize,
    seed: u64,
) -> PyResult<PyCertificate> {
    let config = PipelineConfig {
        mode: parse_mode(mode)?,
        method: parse_method(method)?,
        rank_tol,
        lambda_floor,
        samples,
        seed,
    };
    let fam = family.inner.clone();
    let run = py
        .detach(|| pipeline::run_pipeline(&fam, &config))
        .map_err(value_error)?;
    Ok(PyCertificate { family: fam, run })
}

/// Check `||x||^2 <= Σ λ_k |<v_k, x>|^2` for weights keyed by sequence index.
#[pyfunction]
#[pyo3(signature = (family, weights, samples = 1000, seed = 0))]
fn check_lower_frame<'py>(
    py: Python<'py>,
    family: &PyFamily,
    weights: BTreeMap<usize, f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    if weights.contains_key(&0) {
        return Err(PyValueError::new_err("indices start at 1"));
    }
    let eff = pipeline::effective_weights(&weights, &family.inner);
    let report = verify::check_lower_frame(&family.inner, &eff, samples, seed);
    checks_to_py(py, &report.checks)
}

/// `((Σ β_n)^2, Σ 2^n β_n^2)`.
#[pyfunction]
fn weighted_cs_gap(beta: Vec<f64>) -> PyResult<(f64, f64)> {
    verify::weighted_cs_gap(&beta).map_err(value_error)
}

/// Orthonormal basis (as a list of columns) of the span of `vectors`.
#[pyfunction]
#[pyo3(signature = (dim, vectors, rank_tol = linalg::DEFAULT_RANK_TOL))]
fn orthonormal_basis(
    dim: usize,
    vectors: Vec<Vec<Complex64>>,
    rank_tol: f64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let basis =
        linalg::orthonormal_basis(dim, &to_vectors(vectors), rank_tol).map_err(value_error)?;
    Ok((0..basis.rank())
        .map(|i| basis.column(i).iter().copied().collect())
        .collect())
}

/// Minimum-norm least squares for a row-major matrix.
#[pyfunction]
#[pyo3(signature = (matrix, rhs, tol = linalg::DEFAULT_RANK_TOL))]
fn min_norm_least_squares(
    matrix: Vec<Vec<Complex64>>,
    rhs: Vec<Complex64>,
    tol: f64,
) -> PyResult<Vec<Complex64>> {
    let a = to_matrix(matrix)?;
    let sol =
        linalg::min_norm_least_squares(&a, &CVector::from_vec(rhs), tol).map_err(value_error)?;
    Ok(sol.iter().copied().collect())
}

#[pyfunction]
fn operator_norm(matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
    Ok(linalg::operator_norm(&to_matrix(matrix)?))
}

#[pyfunction]
fn hermitian_min_eig(matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
    linalg::hermitian_min_eig(&to_matrix(matrix)?).map_err(value_error)
}

#[pymodule]
#[pyo3(name = "lowerframe")]
fn lowerframe_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(check_lower_frame, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_cs_gap, m)?)?;
    m.add_function(wrap_pyfunction!(orthonormal_basis, m)?)?;
    m.add_function(wrap_pyfunction!(min_norm_least_squares, m)?)?;
    m.add_function(wrap_pyfunction!(operator_norm, m)?)?;
    m.add_function(wrap_pyfunction!(hermitian_min_eig, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
