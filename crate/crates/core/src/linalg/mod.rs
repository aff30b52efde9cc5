//! Dense symmetric linear algebra: moment accumulation, cyclic Jacobi
//! eigendecomposition, Cholesky factorization and the symmetric-definite
//! generalized eigenproblem solved by whitening.
//!
//! Problem sizes here are small (d up to a few hundred), so everything is a
//! plain `ndarray` matrix and an O(d^3) algorithm.

mod cholesky;
mod jacobi;
mod moments;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cholesky::{cholesky, cholesky_factor, solve_lower, solve_lower_transpose, spd_solve};
pub use jacobi::{eigh, sym_eig, MAX_SWEEPS};
pub use moments::{accumulate_moments, accumulate_moments_with, MomentPair};

#[derive(Error, Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("symmetric matrices need dimension >= 2, got {0}")]
    TooSmall(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("requested {k} eigenpairs of a {d}x{d} matrix")]
    RankTooLarge { k: usize, d: usize },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("columns are linearly dependent (column {0})")]
    RankDeficient(usize),
}

/// A real symmetric matrix of dimension at least 2.
///
/// Construction averages the input with its transpose, so
/// `entries[i][j] == entries[j][i]` holds bit for bit afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Array2<f64>", into = "Array2<f64>")]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self, LinalgError> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(LinalgError::NotSquare { rows, cols });
        }
        if rows < 2 {
            return Err(LinalgError::TooSmall(rows));
        }
        Ok(SymMatrix(symmetrize(a)))
    }

    pub fn identity(d: usize) -> Result<Self, LinalgError> {
        Self::new(Array2::eye(d))
    }

    pub fn zeros(d: usize) -> Result<Self, LinalgError> {
        Self::new(Array2::zeros((d, d)))
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self, LinalgError> {
        Self::new(Array2::from_diag(&Array1::from(diag.to_vec())))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(self.0.view())
    }

    pub fn trace(&self) -> f64 {
        self.0.diag().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `v' S v`
    pub fn quad_form(&self, v: ArrayView1<f64>) -> f64 {
        v.dot(&self.0.dot(&v))
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> Result<SymMatrix, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::Shape(format!(
                "{}x{} vs {}x{}",
                self.dim(),
                self.dim(),
                other.dim(),
                other.dim()
            )));
        }
        SymMatrix::new(&self.0 * a + &other.0 * b)
    }

    pub fn scaled(&self, a: f64) -> SymMatrix {
        SymMatrix(&self.0 * a)
    }

    /// Adds `eps` to every diagonal entry.
    pub fn with_ridge(&self, eps: f64) -> SymMatrix {
        let mut a = self.0.clone();
        a.diag_mut().mapv_inplace(|v| v + eps);
        SymMatrix(a)
    }
}

impl TryFrom<Array2<f64>> for SymMatrix {
    type Error = LinalgError;

    fn try_from(a: Array2<f64>) -> Result<Self, Self::Error> {
        SymMatrix::new(a)
    }
}

impl From<SymMatrix> for Array2<f64> {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

/// Eigenpairs sorted by descending eigenvalue. Column `j` of `vectors`
/// belongs to `values[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPairs {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the first `k` pairs.
    pub fn truncate(self, k: usize) -> EigPairs {
        EigPairs {
            values: self.values.slice(ndarray::s![..k]).to_owned(),
            vectors: self.vectors.slice(ndarray::s![.., ..k]).to_owned(),
        }
    }
}

/// Averages `a` with its transpose in place.
pub fn symmetrize_owned(a: Array2<f64>) -> Array2<f64> {
    symmetrize(a)
}

pub(crate) fn symmetrize(mut a: Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
    a
}

pub fn frobenius(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Flips `v` so that its largest-magnitude entry is positive. The first
/// such entry wins on ties.
pub fn canonical_sign(mut v: ndarray::ArrayViewMut1<f64>) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if best_abs > 0.0 && v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

/// Orthonormal basis for the column space of `a` (same shape), via two
/// passes of modified Gram-Schmidt. Fails if a column is numerically
/// dependent on the previous ones.
pub fn orthonormalize_columns(a: ArrayView2<f64>) -> Result<Array2<f64>, LinalgError> {
    let mut q = a.to_owned();
    let scale = a
        .axis_iter(Axis(1))
        .map(|c| c.dot(&c).sqrt())
        .fold(0.0, f64::max);
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &qi);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if !(norm > 1e-12 * scale) {
            return Err(LinalgError::RankDeficient(j));
        }
        q.column_mut(j).mapv_inplace(|x| x / norm);
    }
    Ok(q)
}

/// Smallest eigenvalue of a small symmetric matrix (any dimension >= 1).
pub fn min_eigenvalue(a: ArrayView2<f64>) -> Result<f64, LinalgError> {
    let pairs = eigh(a)?;
    Ok(pairs.values[pairs.values.len() - 1])
}

/// Top-`k` generalized eigenpairs of `A v = lambda B v` for symmetric `A` and
/// symmetric positive definite `B`.
///
/// `B = L L'` is factored, the ordinary problem for `L^-1 A L^-T` is solved
/// with Jacobi and vectors are mapped back by `v = L^-T u`, which makes them
/// `B`-orthonormal.
pub fn solve_gev(a: &SymMatrix, b: &SymMatrix, k: usize) -> Result<EigPairs, LinalgError> {
    let d = a.dim();
    if b.dim() != d {
        return Err(LinalgError::Shape(format!(
            "A is {d}x{d} but B is {0}x{0}",
            b.dim()
        )));
    }
    if k > d {
        return Err(LinalgError::RankTooLarge { k, d });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let l = cholesky(b)?;
    // C = L^-1 A L^-T
    let y = solve_lower(l.view(), a.view());
    let c = solve_lower(l.view(), y.t());
    let whitened = SymMatrix::new(c)?;
    let pairs = sym_eig(&whitened, k)?;
    let mut vectors = solve_lower_transpose(l.view(), pairs.vectors.view());
    for col in vectors.axis_iter_mut(Axis(1)) {
        canonical_sign(col);
    }
    Ok(EigPairs {
        values: pairs.values,
        vectors,
    })
}
