//! Dense complex linear algebra used by the construction.
//!
//! Everything is double precision. Storage and the simple factorizations use
//! `nalgebra`; singular value and Hermitian eigenvalue problems go through
//! `faer`, whose complex SVD stays accurate on rank-deficient input. Rank decisions
//! are relative: a singular value counts as zero when it is at most
//! `rank_tol` times the largest one.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Scalar = Complex64;
pub type CVector = DVector<Complex64>;
pub type DenseMatrix = DMatrix<Complex64>;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Moduli within this relative distance of the maximum count as tied when
/// fixing the phase of a basis column.
const PHASE_TIE_TOL: f64 = 1e-10;

/// Orthonormal columns spanning a subspace of `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    cols: DenseMatrix,
}

impl OrthoBasis {
    pub fn empty(dim: usize) -> Self {
        Self {
            cols: DenseMatrix::zeros(dim, 0),
        }
    }

    /// Wraps columns that the caller asserts are orthonormal.
    pub fn from_orthonormal_columns(cols: DenseMatrix) -> Self {
        Self { cols }
    }

    pub fn dim(&self) -> usize {
        self.cols.nrows()
    }

    pub fn rank(&self) -> usize {
        self.cols.ncols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.cols
    }

    pub fn column(&self, i: usize) -> CVector {
        self.cols.column(i).into_owned()
    }

    /// `x - B B^* x`.
    pub fn residual_of(&self, x: &CVector) -> CVector {
        if self.rank() == 0 {
            return x.clone();
        }
        let coeffs = self.cols.adjoint() * x;
        x - &self.cols * coeffs
    }

    /// Largest `||(I - BB^*) c||` over the columns `c` of `other`.
    pub fn containment_residual(&self, other: &OrthoBasis) -> f64 {
        (0..other.rank())
            .map(|j| self.residual_of(&other.column(j)).norm())
            .fold(0.0, f64::max)
    }

    /// `max |B^*B - I|` entrywise.
    pub fn gram_deviation(&self) -> f64 {
        gram_deviation(&self.cols)
    }
}

pub fn gram_deviation(cols: &DenseMatrix) -> f64 {
    let gram = cols.adjoint() * cols;
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

pub fn columns_to_matrix(dim: usize, vectors: &[CVector]) -> Result<DenseMatrix> {
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                index: i,
                found: v.len(),
                expected: dim,
            });
        }
    }
    if vectors.is_empty() {
        return Ok(DenseMatrix::zeros(dim, 0));
    }
    Ok(DenseMatrix::from_columns(vectors))
}

/// Rotates `v` by a unit phase so its first component of largest modulus is
/// real and positive.
pub fn fix_phase(v: &mut CVector) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|c| c.norm() >= max * (1.0 - PHASE_TIE_TOL))
        .expect("some entry attains the maximum");
    let p = v[pivot];
    let rot = p.conj() / p.norm();
    v.iter_mut().for_each(|c| *c *= rot);
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
}

/// Singular triplets sorted by decreasing singular value.
struct SortedSvd {
    u: DenseMatrix,
    sigma: Vec<f64>,
    v_t: Option<DenseMatrix>,
}

fn to_faer(a: &DenseMatrix) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn sorted_svd(a: &DenseMatrix, want_v: bool) -> Result<SortedSvd> {
    let svd = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Inconsistency(format!("SVD did not converge: {e:?}")))?;
    // Already in nonincreasing order.
    let k = a.nrows().min(a.ncols());
    let sigma = (0..k).map(|i| svd.S()[i].re).collect();
    let u = svd.U();
    let u = DenseMatrix::from_fn(a.nrows(), k, |i, j| u[(i, j)]);
    let v_t = want_v.then(|| {
        let v = svd.V();
        DenseMatrix::from_fn(k, a.ncols(), |i, j| v[(j, i)].conj())
    });
    Ok(SortedSvd { u, sigma, v_t })
}

fn hermitian_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Inconsistency(format!("eigensolver did not converge: {e:?}")))
}

fn numerical_rank(sigma: &[f64], rank_tol: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().take_while(|&&s| s > rank_tol * top).count()
}

/// Orthonormal basis of `span(vectors)` in `C^dim`, rank taken at `rank_tol`.
pub fn orthonormal_basis(dim: usize, vectors: &[CVector], rank_tol: f64) -> Result<OrthoBasis> {
    if rank_tol.is_nan() || rank_tol < 0.0 {
        return Err(Error::Input(format!(
            "rank_tol must be >= 0, got {rank_tol}"
        )));
    }
    let a = columns_to_matrix(dim, vectors)?;
    if a.ncols() == 0 || dim == 0 {
        return Ok(OrthoBasis::empty(dim));
    }
    let svd = sorted_svd(&a, false)?;
    let r = numerical_rank(&svd.sigma, rank_tol);
    let cols: Vec<CVector> = (0..r)
        .map(|i| {
            let mut c = svd.u.column(i).into_owned();
            fix_phase(&mut c);
            c
        })
        .collect();
    Ok(OrthoBasis {
        cols: columns_to_matrix(dim, &cols)?,
    })
}

/// Orthonormal basis of `span(big) ∩ span(small)^⊥`.
///
/// `span(small)` must lie inside `span(big)` up to `tol`.
pub fn complement_within(big: &OrthoBasis, small: &OrthoBasis, tol: f64) -> Result<OrthoBasis> {
    if big.dim() != small.dim() {
        return Err(Error::Input(format!(
            "ambient dimensions differ: {} vs {}",
            big.dim(),
            small.dim()
        )));
    }
    if small.rank() > big.rank() {
        return Err(Error::Inconsistency(format!(
            "subspace of rank {} cannot sit inside one of rank {}",
            small.rank(),
            big.rank()
        )));
    }
    let leak = big.containment_residual(small);
    if leak > tol {
        return Err(Error::Inconsistency(format!(
            "containment violated: residual {leak:e} exceeds {tol:e}"
        )));
    }
    let want = big.rank() - small.rank();
    let dim = big.dim();
    if want == 0 {
        return Ok(OrthoBasis::empty(dim));
    }
    let projected = if small.rank() == 0 {
        big.cols.clone()
    } else {
        &big.cols - &small.cols * (small.cols.adjoint() * &big.cols)
    };
    let svd = sorted_svd(&projected, false)?;
    // Nested subspaces give singular values that are exactly 1 or 0.
    if svd.sigma[want - 1] < 0.5 {
        return Err(Error::Inconsistency(format!(
            "complement has rank below {want} (sigma = {:e})",
            svd.sigma[want - 1]
        )));
    }
    let mut cols: Vec<CVector> = Vec::with_capacity(want);
    for i in 0..want {
        let mut c = svd.u.column(i).into_owned();
        // One re-orthogonalization pass against small and earlier columns.
        c = small.residual_of(&c);
        for prev in &cols {
            let overlap = prev.dotc(&c);
            c -= prev * overlap;
        }
        let norm = c.norm();
        c /= Complex64::new(norm, 0.0);
        fix_phase(&mut c);
        cols.push(c);
    }
    Ok(OrthoBasis {
        cols: columns_to_matrix(dim, &cols)?,
    })
}

/// Minimum-norm minimizer of `||A c - b||`; singular values at most
/// `tol * sigma_max` are discarded.
pub fn min_norm_least_squares(a: &DenseMatrix, b: &CVector, tol: f64) -> Result<CVector> {
    if a.nrows() != b.len() {
        return Err(Error::Input(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    let m = a.ncols();
    if m == 0 || a.nrows() == 0 {
        return Ok(CVector::zeros(m));
    }
    let svd = sorted_svd(a, true)?;
    let r = numerical_rank(&svd.sigma, tol);
    let v_t = svd.v_t.expect("v requested");
    let mut c = CVector::zeros(m);
    for i in 0..r {
        let proj = svd.u.column(i).dotc(b) / svd.sigma[i];
        // Column i of V is the conjugate of row i of V^*.
        for j in 0..m {
            c[j] += v_t[(i, j)].conj() * proj;
        }
    }
    Ok(c)
}

/// Largest singular value.
pub fn operator_norm(m: &DenseMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    // NaN on non-convergence so that every downstream bound check fails.
    to_faer(m)
        .singular_values()
        .map_or(f64::NAN, |s| s.into_iter().fold(0.0, f64::max))
}

/// `v w^*`.
pub fn rank_one(v: &CVector, w: &CVector) -> DenseMatrix {
    v * w.adjoint()
}

fn max_abs(m: &DenseMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Smallest eigenvalue of a Hermitian matrix.
///
/// Positive definite inputs go through a diagonal rescaling and the largest
/// eigenvalue of the inverse, which keeps the result accurate relative to
/// itself even when the diagonal spans many orders of magnitude. Anything
/// else falls back to a plain eigendecomposition.
pub fn hermitian_min_eig(m: &DenseMatrix) -> Result<f64> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Input(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let scale = max_abs(m).max(1.0);
    let skew = max_abs(&(m - m.adjoint()));
    if skew > 1e-10 * scale {
        return Err(Error::Input(format!(
            "matrix is not Hermitian: max |M - M^*| = {skew:e}"
        )));
    }
    let sym = (m + m.adjoint()).map(|c| c * 0.5);

    let diag: Vec<f64> = (0..n).map(|i| sym[(i, i)].re).collect();
    if diag.iter().all(|&d| d > 0.0) {
        let root: Vec<f64> = diag.iter().map(|d| d.sqrt()).collect();
        let scaled = DenseMatrix::from_fn(n, n, |i, j| sym[(i, j)] / (root[i] * root[j]));
        if let Ok(chol) = to_faer(&scaled).llt(Side::Lower) {
            let inv = chol.inverse();
            let inv = DenseMatrix::from_fn(n, n, |i, j| inv[(i, j)] / (root[i] * root[j]));
            let inv = (&inv + inv.adjoint()).map(|c| c * 0.5);
            let top = hermitian_eigenvalues(&inv)?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            if top.is_finite() && top > 0.0 {
                return Ok(1.0 / top);
            }
        }
    }
    Ok(hermitian_eigenvalues(&sym)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Real vector embedded into `C^n`.
pub fn real_vector(values: &[f64]) -> CVector {
    CVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn unit_vector(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = Complex64::new(1.0, 0.0);
    v
}
