use ndarray::{Array2, ArrayView2};

use super::{LinalgError, SymMatrix};

/// Lower-triangular `L` with `S = L L'`.
pub fn cholesky(s: &SymMatrix) -> Result<Array2<f64>, LinalgError> {
    cholesky_factor(s.view())
}

/// Cholesky factor of any square symmetric positive definite array. A pivot
/// at or below `n * eps * max|diag|` counts as non-positive and is reported
/// with its index.
pub fn cholesky_factor(a: ArrayView2<f64>) -> Result<Array2<f64>, LinalgError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let n = rows;
    let max_diag = a.diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = n as f64 * f64::EPSILON * max_diag;
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut pivot = a[[j, j]];
        for p in 0..j {
            pivot -= l[[j, p]] * l[[j, p]];
        }
        if !(pivot > floor) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let ljj = pivot.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut sum = a[[i, j]];
            for p in 0..j {
                sum -= l[[i, p]] * l[[j, p]];
            }
            l[[i, j]] = sum / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` by forward substitution.
pub fn solve_lower(l: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut sum = x[[i, c]];
            for p in 0..i {
                sum -= l[[i, p]] * x[[p, c]];
            }
            x[[i, c]] = sum / l[[i, i]];
        }
    }
    x
}

/// Solves `L' X = B` by back substitution.
pub fn solve_lower_transpose(l: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for c in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut sum = x[[i, c]];
            for p in (i + 1)..n {
                sum -= l[[p, i]] * x[[p, c]];
            }
            x[[i, c]] = sum / l[[i, i]];
        }
    }
    x
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn spd_solve(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>, LinalgError> {
    if a.nrows() != b.nrows() {
        return Err(LinalgError::Shape(format!(
            "{}x{} system with {} right-hand-side rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let l = cholesky_factor(a)?;
    let y = solve_lower(l.view(), b);
    Ok(solve_lower_transpose(l.view(), y.view()))
}
